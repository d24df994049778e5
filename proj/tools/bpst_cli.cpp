#include "bpst/errors.hpp"
#include "bpst/estimator.hpp"
#include "bpst/geometry.hpp"
#include "bpst/io.hpp"
#include "bpst/model_selection.hpp"
#include "bpst/parallel.hpp"
#include "bpst/quadrature.hpp"
#include "bpst/rng.hpp"
#include "bpst/simbench.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace bpst;

namespace {

constexpr int kSchemaVersion = 1;

enum Exit { kOk = 0, kValidation = 2, kConvergence = 3, kInternal = 4 };

struct Options {
    std::string mesh_vertices, mesh_triangles;
    std::string initial_vertices, initial_triangles;
    std::string data;
    int m = 3, r = 1;
    std::optional<double> lambda;
    std::string lambda_grid;
    int folds = 10;
    std::uint64_t seed = 0;
    int grid = 0;
    std::string out;
    int threads = 1;
    bool drop_outside = false;
    std::string coefficients;
    std::vector<double> bbox;
    int max_iters = 100;
    // simulate
    std::string scenario = "sim1";
    std::size_t n = 200;
    int reps = 20;
    std::string methods = "bpst,kde";
    std::string grid_out;
    std::string sample_out;
    int kde_folds = 5;
};

std::string with_header(const std::string& header) { return header + "\n"; }

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw InvalidArgument("not a number in list: '" + cell + "'");
        }
    }
    return out;
}

std::vector<std::string> split_words(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string w;
    while (std::getline(ss, w, ',')) out.push_back(w);
    return out;
}

std::vector<double> lambda_grid_from(const std::string& spec)
{
    if (spec == "default") return default_lambda_grid();
    auto g = parse_list(spec);
    if (g.empty()) throw InvalidArgument("empty --lambda-grid");
    return g;
}

std::shared_ptr<const Triangulation> read_mesh(const std::string& v, const std::string& t)
{
    if (v.empty() || t.empty()) throw InvalidArgument("--mesh-vertices and --mesh-triangles are required");
    return std::make_shared<const Triangulation>(load_mesh(fs::path(v), fs::path(t)));
}

std::vector<Point2> read_points(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open data file '" + path + "'");
    const auto rows = io::read_numeric_csv(in, {"x", "y"}, path);
    std::vector<Point2> pts;
    pts.reserve(rows.size());
    for (const auto& r : rows) pts.push_back({r[0], r[1]});
    return pts;
}

std::string num(double v) { return io::format_double(v); }

void write_json(const fs::path& path, const json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

json mesh_json(const Triangulation& tr)
{
    const MeshQuality q = mesh_quality(tr);
    return {{"N", tr.size()}, {"mesh_size", q.mesh_size}, {"beta_ratio", q.beta_ratio}};
}

std::string density_grid_csv(const FitContext& ctx, const DensityFit& f, const BoundingBox& box, int res)
{
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(res) * res);
    const double dx = box.width() / res, dy = box.height() / res;
    for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) pts.push_back({box.xmin + (i + 0.5) * dx, box.ymin + (j + 0.5) * dy});
    const DensityValues v = eval_density(ctx, f, pts);
    std::string out = with_header("x,y,density,in_domain");
    for (std::size_t k = 0; k < pts.size(); ++k)
        out += num(pts[k].x) + "," + num(pts[k].y) + "," + num(v.values[k]) + "," + (v.inside[k] ? "1" : "0") + "\n";
    return out;
}

std::string coefficients_csv(const FitContext& ctx, const DensityFit& f)
{
    const int m = ctx.spec().degree;
    const auto& idx = multi_indices(m);
    std::string out = with_header("triangle,i,j,k,value");
    const std::size_t dim = idx.size();
    for (std::size_t t = 0; t < ctx.mesh().size(); ++t)
        for (std::size_t a = 0; a < dim; ++a)
            out += std::to_string(t) + "," + std::to_string(idx[a].i) + "," + std::to_string(idx[a].j) + "," +
                   std::to_string(idx[a].k) + "," + num(f.gamma(static_cast<Eigen::Index>(t * dim + a))) + "\n";
    return out;
}

json cv_json(const CvReport& cv)
{
    json cells = json::array();
    for (std::size_t c = 0; c < cv.lambda_grid.size(); ++c)
        cells.push_back({{"lambda", cv.lambda_grid[c]},
                         {"cv_error", std::isfinite(cv.cv_errors[c]) ? json(cv.cv_errors[c]) : json(nullptr)},
                         {"failed_folds", cv.failed_folds[c]},
                         {"all_folds_failed", static_cast<bool>(cv.all_failed[c])}});
    return {{"schema_version", kSchemaVersion},
            {"folds", cv.folds},
            {"seed", cv.seed},
            {"lambda_grid", cv.lambda_grid},
            {"cv_errors", cells},
            {"best_lambda", cv.best_lambda},
            {"fold_assignments", cv.fold_assignments}};
}

struct Prepared {
    std::shared_ptr<const Triangulation> mesh;
    std::unique_ptr<FitContext> ctx;
    LocatedData data;
    std::size_t dropped = 0;
};

Prepared prepare(const Options& o)
{
    Prepared p;
    p.mesh = read_mesh(o.mesh_vertices, o.mesh_triangles);
    std::shared_ptr<const Triangulation> initial;
    if (!o.initial_vertices.empty() || !o.initial_triangles.empty())
        initial = read_mesh(o.initial_vertices, o.initial_triangles);
    p.ctx = std::make_unique<FitContext>(p.mesh, SplineSpec{o.m, o.r}, initial);
    if (o.data.empty()) throw InvalidArgument("--data is required");
    std::vector<Point2> pts = read_points(o.data);
    if (o.drop_outside) {
        std::vector<Point2> kept;
        for (const auto& q : pts) {
            const bool inside = p.mesh->locate(q) && (!initial || initial->locate(q));
            if (inside) kept.push_back(q);
        }
        p.dropped = pts.size() - kept.size();
        pts = std::move(kept);
    }
    if (pts.empty()) throw InvalidArgument("no data points inside the domain");
    p.data = locate_data(*p.ctx, pts);
    return p;
}

FitConfig fit_config(const Options& o)
{
    FitConfig c;
    c.max_iters = o.max_iters;
    if (o.lambda) c.lambda = *o.lambda;
    if (!(c.lambda >= 0.0)) throw InvalidArgument("--lambda must be >= 0");
    return c;
}

fs::path out_dir(const Options& o)
{
    if (o.out.empty()) throw InvalidArgument("--out is required");
    fs::path d(o.out);
    fs::create_directories(d);
    return d;
}

int cmd_fit(const Options& o)
{
    if (o.lambda && !o.lambda_grid.empty()) throw InvalidArgument("--lambda and --lambda-grid are mutually exclusive");
    Prepared p = prepare(o);
    const fs::path dir = out_dir(o);
    FitConfig cfg = fit_config(o);
    std::optional<CvReport> cv;
    if (!o.lambda_grid.empty()) {
        const auto grid = lambda_grid_from(o.lambda_grid);
        cv = select_lambda(*p.ctx, p.data, cfg, grid, CvOptions{o.folds, o.seed, o.threads});
        cfg.lambda = cv->best_lambda;
    }
    const DensityFit f = fit(*p.ctx, p.data, cfg);
    json report = {{"schema_version", kSchemaVersion},
                   {"lambda", f.lambda},
                   {"iterations", f.iterations},
                   {"converged", f.converged},
                   {"final_objective", f.final_objective()},
                   {"integral_of_density", f.integral_before_renormalization()},
                   {"mesh", mesh_json(*p.mesh)},
                   {"spec", {{"m", o.m}, {"r", o.r}}},
                   {"n", p.data.size()},
                   {"dropped_outside", p.dropped},
                   {"dimension", p.ctx->dimension()},
                   {"log_norm_const", f.log_norm_const},
                   {"stop_reason", f.stop_reason},
                   {"gradient_sup_norm", f.gradient_sup_norm},
                   {"gradient_fallbacks", f.gradient_fallbacks},
                   {"initial_estimator", to_string(f.initial_variant)},
                   {"quadrature_rule", p.ctx->rule().name},
                   {"objective_trace", f.objective_trace}};
    if (cv) {
        report["cv"] = {{"folds", cv->folds}, {"seed", cv->seed}, {"best_lambda", cv->best_lambda}};
        write_json(dir / "cv_report.json", cv_json(*cv));
    }
    io::write_file_atomic(dir / "coefficients.csv", coefficients_csv(*p.ctx, f));
    if (o.grid > 0) io::write_file_atomic(dir / "density_grid.csv", density_grid_csv(*p.ctx, f, p.mesh->bbox(), o.grid));
    write_json(dir / "fit_report.json", report);
    return f.converged ? kOk : kConvergence;
}

int cmd_density(const Options& o)
{
    const auto mesh = read_mesh(o.mesh_vertices, o.mesh_triangles);
    if (o.coefficients.empty()) throw InvalidArgument("--coefficients is required");
    std::ifstream in(o.coefficients);
    if (!in) throw InvalidArgument("cannot open coefficients file '" + o.coefficients + "'");
    const auto rows = io::read_numeric_csv(in, {"triangle", "i", "j", "k", "value"}, o.coefficients);
    if (rows.empty()) throw InvalidArgument("coefficients file is empty");
    const int m = static_cast<int>(rows[0][1] + rows[0][2] + rows[0][3]);
    if (m < 0 || m > kMaxDegree) throw InvalidArgument("coefficients have an unsupported degree");
    const SplineSpec spec{m, 0};
    const auto dim = static_cast<std::size_t>(spec.per_triangle_dim());
    if (rows.size() != mesh->size() * dim) throw InvalidArgument("coefficients do not match the mesh");
    Eigen::VectorXd gamma(static_cast<Eigen::Index>(rows.size()));
    for (const auto& r : rows) {
        const auto t = static_cast<std::size_t>(r[0]);
        if (r[0] < 0 || t >= mesh->size() || r[1] + r[2] + r[3] != m) throw InvalidArgument("malformed coefficient row");
        gamma(static_cast<Eigen::Index>(t * dim + multi_index_position(m, int(r[1]), int(r[2])))) = r[4];
    }
    // Renormalize with the same 9-node rule as the fit.
    const QuadRule& rule = rule_9();
    double total = 0.0;
    for (std::size_t t = 0; t < mesh->size(); ++t)
        for (std::size_t q = 0; q < rule.size(); ++q)
            total += mesh->area(t) * rule.weights[q] *
                     std::exp(spline_value(*mesh, spec, gamma, t, mesh->geometry(t).point_at(rule.nodes[q])));
    const double log_norm = std::log(total);

    BoundingBox box = mesh->bbox();
    if (!o.bbox.empty()) {
        if (o.bbox.size() != 4 || !(o.bbox[1] > o.bbox[0]) || !(o.bbox[3] > o.bbox[2]))
            throw InvalidArgument("--bbox expects xmin,xmax,ymin,ymax");
        box = {o.bbox[0], o.bbox[1], o.bbox[2], o.bbox[3]};
    }
    const int res = o.grid > 0 ? o.grid : 100;
    const double dx = box.width() / res, dy = box.height() / res;
    std::string csv = with_header("x,y,density,in_domain");
    for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
            const Point2 p{box.xmin + (i + 0.5) * dx, box.ymin + (j + 0.5) * dy};
            const auto t = mesh->locate(p);
            const double v = t ? std::exp(spline_value(*mesh, spec, gamma, *t, p) - log_norm) : 0.0;
            csv += num(p.x) + "," + num(p.y) + "," + num(v) + "," + (t ? "1" : "0") + "\n";
        }
    if (o.out.empty()) throw InvalidArgument("--out is required");
    io::write_file_atomic(o.out, csv);
    return kOk;
}

int cmd_cv(const Options& o)
{
    Prepared p = prepare(o);
    const auto grid = lambda_grid_from(o.lambda_grid.empty() ? "default" : o.lambda_grid);
    const CvReport cv = select_lambda(*p.ctx, p.data, fit_config(o), grid, CvOptions{o.folds, o.seed, o.threads});
    if (o.out.empty()) throw InvalidArgument("--out is required");
    write_json(o.out, cv_json(cv));
    return kOk;
}

std::string grid_csv(const EvalGrid& g, std::span<const double> v)
{
    std::string out = with_header("x,y,density");
    for (std::size_t i = 0; i < v.size(); ++i) out += num(g.points[i].x) + "," + num(g.points[i].y) + "," + num(v[i]) + "\n";
    return out;
}

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int cmd_simulate(const Options& o)
{
    const Scenario s = scenario_by_name(o.scenario);
    if (o.out.empty()) throw InvalidArgument("--out is required");
    if (!o.sample_out.empty()) {
        const auto pts = sample(s, o.n, stream_seed(o.seed, 0));
        std::string csv = with_header("x,y");
        for (const auto& p : pts) csv += num(p.x) + "," + num(p.y) + "\n";
        io::write_file_atomic(o.sample_out, csv);
    }
    BenchmarkConfig cfg;
    cfg.n = o.n;
    cfg.reps = o.reps;
    cfg.methods = split_words(o.methods);
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.grid_resolution = o.grid > 0 ? o.grid : 200;
    cfg.folds = o.folds;
    cfg.kde_folds = o.kde_folds;
    cfg.spec = SplineSpec{o.m, o.r};
    if (!o.lambda_grid.empty()) cfg.lambda_grid = lambda_grid_from(o.lambda_grid);
    for (const auto& m : cfg.methods)
        if (m != "bpst" && m != "kde") throw InvalidArgument("unknown method '" + m + "'");
    const BenchmarkReport rep = run_benchmark(s, cfg, !o.grid_out.empty());

    const fs::path out(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    json results = json::array();
    for (std::size_t m = 0; m < rep.results.size(); ++m) {
        const auto& r = rep.results[m];
        const fs::path csv_path = out.parent_path() / (out.stem().string() + "_" + r.method + "_replications.csv");
        std::string csv = with_header("replication,seed,ok,mise,low_arm_mass,lambda,converged,h11,h12,h22");
        for (const auto& rp : rep.replications) {
            const auto& oc = rp.outcomes[m];
            csv += std::to_string(rp.index) + "," + std::to_string(rp.seed) + "," + (oc.ok ? "1" : "0") + "," +
                   num(oc.mise) + "," + num(oc.low_arm_mass) + "," + num(oc.lambda) + "," + (oc.converged ? "1" : "0") +
                   "," + num(oc.bandwidth(0, 0)) + "," + num(oc.bandwidth(0, 1)) + "," + num(oc.bandwidth(1, 1)) + "\n";
        }
        io::write_file_atomic(csv_path, csv);
        json errors = json::array();
        for (const auto& rp : rep.replications)
            if (!rp.outcomes[m].ok) errors.push_back({{"replication", rp.index}, {"error", rp.outcomes[m].error}});
        results.push_back({{"method", r.method},
                           {"mean_mise", nan_to_null(r.mean)},
                           {"sd_mise", r.sd},
                           {"sd_defined", r.sd_defined},
                           {"failures", r.failures},
                           {"failed_replications", errors},
                           {"replications_csv", csv_path.filename().string()}});
    }
    if (!o.grid_out.empty()) {
        const fs::path gdir(o.grid_out);
        fs::create_directories(gdir);
        io::write_file_atomic(gdir / "truth_grid.csv", grid_csv(rep.grid, rep.truth_on_grid));
        for (const auto& oc : rep.replications.front().outcomes)
            if (oc.ok) io::write_file_atomic(gdir / (oc.method + "_grid.csv"), grid_csv(rep.grid, oc.grid_values));
    }
    const json report = {{"schema_version", kSchemaVersion},
                         {"scenario", s.name},
                         {"n", cfg.n},
                         {"reps", cfg.reps},
                         {"seed", cfg.seed},
                         {"folds", cfg.folds},
                         {"kde_folds", cfg.kde_folds},
                         {"grid_resolution", cfg.grid_resolution},
                         {"lambda_grid", cfg.lambda_grid},
                         {"spec", {{"m", cfg.spec.degree}, {"r", cfg.spec.smoothness}}},
                         {"mesh", mesh_json(*s.mesh)},
                         {"initial_mesh_N", s.initial_mesh ? s.initial_mesh->size() : s.mesh->size()},
                         {"results", results}};
    write_json(out, report);
    return kOk;
}

int cmd_mesh_info(const Options& o)
{
    const auto mesh = read_mesh(o.mesh_vertices, o.mesh_triangles);
    const MeshQuality q = mesh_quality(*mesh);
    const SplineSpec spec{o.m, o.r};
    const ConstraintSystem cs = build_constraints(*mesh, spec);
    const BoundingBox b = mesh->bbox();
    const json j = {{"schema_version", kSchemaVersion},
                    {"N", mesh->size()},
                    {"vertices", mesh->vertices().size()},
                    {"edges", mesh->edges().size()},
                    {"interior_edges", mesh->interior_edge_count()},
                    {"area", mesh->total_area()},
                    {"bbox", {b.xmin, b.xmax, b.ymin, b.ymax}},
                    {"mesh_size", q.mesh_size},
                    {"min_inradius", q.min_inradius},
                    {"beta_ratio", q.beta_ratio},
                    {"min_angle_deg", q.min_angle_deg},
                    {"spec", {{"m", spec.degree}, {"r", spec.smoothness}}},
                    {"basis_size", spec.total_dim(mesh->size())},
                    {"constraint_rows", cs.H.rows()},
                    {"constraint_rank", cs.rank},
                    {"dimension", cs.Q2.cols()}};
    if (o.out.empty()) std::cout << j.dump(2) << "\n";
    else write_json(o.out, j);
    return kOk;
}

void report_error(const char* kind, const std::string& message, const std::vector<std::size_t>* indices = nullptr)
{
    json e = {{"kind", kind}, {"message", message}};
    if (indices) {
        e["count"] = indices->size();
        std::vector<std::size_t> head(indices->begin(), indices->begin() + std::min<std::size_t>(indices->size(), 100));
        e["indices"] = head;
    }
    std::cerr << json{{"schema_version", kSchemaVersion}, {"error", e}}.dump() << "\n";
}

int exit_code_for(const Error& e)
{
    const std::string k = e.kind();
    if (k == "SingularSystem" || k == "NonFiniteIntegrand" || k == "SingularBandwidth") return kInternal;
    return kValidation;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Penalized bivariate spline density estimation on triangulated domains"};
    app.require_subcommand(1);
    Options o;

    auto add_mesh = [&](CLI::App* c) {
        c->add_option("--mesh-vertices", o.mesh_vertices, "Vertex CSV (x,y)");
        c->add_option("--mesh-triangles", o.mesh_triangles, "Triangle CSV (v1,v2,v3), 0-based");
    };
    auto add_fit = [&](CLI::App* c) {
        add_mesh(c);
        c->add_option("--initial-vertices", o.initial_vertices, "Vertex CSV of a finer mesh for the initial estimate");
        c->add_option("--initial-triangles", o.initial_triangles, "Triangle CSV of that mesh");
        c->add_option("--data", o.data, "Observations CSV (x,y)");
        c->add_option("--m", o.m, "Spline degree")->capture_default_str();
        c->add_option("--r", o.r, "Smoothness across edges")->capture_default_str();
        c->add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
        c->add_option("--seed", o.seed, "Random seed")->capture_default_str();
        c->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
        c->add_option("--max-iters", o.max_iters, "Newton iteration cap")->capture_default_str();
        c->add_flag("--drop-outside", o.drop_outside, "Discard observations outside the domain");
        c->add_option("--out", o.out, "Output path");
    };

    auto* fit_cmd = app.add_subcommand("fit", "Fit a density to point data");
    add_fit(fit_cmd);
    auto* lam = fit_cmd->add_option("--lambda", o.lambda, "Penalty weight");
    fit_cmd->add_option("--lambda-grid", o.lambda_grid, "Comma-separated grid, or 'default'; selects lambda by CV")
        ->excludes(lam);
    fit_cmd->add_option("--grid", o.grid, "Also write an NxN density grid");

    auto* cv_cmd = app.add_subcommand("cv", "Cross-validate lambda over a grid");
    add_fit(cv_cmd);
    cv_cmd->add_option("--lambda-grid", o.lambda_grid, "Comma-separated grid, or 'default'");

    auto* den_cmd = app.add_subcommand("density", "Evaluate a fitted density on a grid");
    add_mesh(den_cmd);
    den_cmd->add_option("--coefficients", o.coefficients, "coefficients.csv written by fit");
    den_cmd->add_option("--grid", o.grid, "Grid resolution per axis (default 100)");
    den_cmd->add_option("--bbox", o.bbox, "xmin,xmax,ymin,ymax (default: mesh bounding box)")->delimiter(',');
    den_cmd->add_option("--out", o.out, "Output CSV");

    auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation benchmark");
    sim_cmd->add_option("--scenario", o.scenario, "sim1, sim2 or sim3")->capture_default_str();
    sim_cmd->add_option("--n", o.n, "Sample size")->capture_default_str();
    sim_cmd->add_option("--reps", o.reps, "Replications")->capture_default_str();
    sim_cmd->add_option("--methods", o.methods, "Comma-separated methods")->capture_default_str();
    sim_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sim_cmd->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
    sim_cmd->add_option("--grid", o.grid, "MISE grid resolution (default 200)");
    sim_cmd->add_option("--folds", o.folds, "CV folds for the spline fit")->capture_default_str();
    sim_cmd->add_option("--kde-folds", o.kde_folds, "CV folds for the KDE bandwidth")->capture_default_str();
    sim_cmd->add_option("--lambda-grid", o.lambda_grid, "Comma-separated lambda grid");
    sim_cmd->add_option("--m", o.m, "Spline degree")->capture_default_str();
    sim_cmd->add_option("--r", o.r, "Smoothness")->capture_default_str();
    sim_cmd->add_option("--grid-out", o.grid_out, "Directory for truth/estimate grid CSVs of replication 0");
    sim_cmd->add_option("--sample-out", o.sample_out, "Write the replication-0 sample as CSV");
    sim_cmd->add_option("--out", o.out, "Aggregate report JSON");

    auto* info_cmd = app.add_subcommand("mesh-info", "Report mesh quality and spline dimensions");
    add_mesh(info_cmd);
    info_cmd->add_option("--m", o.m, "Spline degree")->capture_default_str();
    info_cmd->add_option("--r", o.r, "Smoothness")->capture_default_str();
    info_cmd->add_option("--out", o.out, "Output JSON (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("UsageError", e.what());
        return kValidation;
    }
    if (o.threads < 1) o.threads = 1;

    try {
        if (fit_cmd->parsed()) return cmd_fit(o);
        if (cv_cmd->parsed()) return cmd_cv(o);
        if (den_cmd->parsed()) return cmd_density(o);
        if (sim_cmd->parsed()) return cmd_simulate(o);
        if (info_cmd->parsed()) return cmd_mesh_info(o);
    } catch (const PointOutsideDomain& e) {
        report_error(e.kind(), e.what(), &e.indices());
        return kValidation;
    } catch (const Error& e) {
        report_error(e.kind(), e.what());
        return exit_code_for(e);
    } catch (const fs::filesystem_error& e) {
        report_error("IoError", e.what());
        return kValidation;
    } catch (const std::exception& e) {
        report_error("InternalError", e.what());
        return kInternal;
    }
    return kInternal;
}
