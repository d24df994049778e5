#include "bpst/simbench.hpp"

#include "bpst/errors.hpp"
#include "bpst/parallel.hpp"
#include "bpst/quadrature.hpp"
#include "bpst/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>

namespace bpst {

namespace {

constexpr double kInvTwoPi = 0.5 / std::numbers::pi;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double mvn_pdf(const Eigen::Vector2d& d, const Eigen::Matrix2d& cov)
{
    const double det = cov.determinant();
    const double q = d.dot(cov.inverse() * d);
    return kInvTwoPi / std::sqrt(det) * std::exp(-0.5 * q);
}

Eigen::Vector2d diff(const Point2& p, const Point2& c) { return {p.x - c.x, p.y - c.y}; }

} // namespace

double gauss_pdf(const GaussComponent& c, const Point2& p) { return mvn_pdf(diff(p, c.mean), c.cov); }

double skew_normal_pdf(const SkewNormalComponent& c, const Point2& p)
{
    if (c.tau != 0.0) throw InvalidArgument("skew-normal with tau != 0 is not supported");
    const Eigen::Vector2d d = diff(p, c.xi);
    const Eigen::Vector2d z(d(0) / std::sqrt(c.omega(0, 0)), d(1) / std::sqrt(c.omega(1, 1)));
    return 2.0 * mvn_pdf(d, c.omega) * normal_cdf(c.alpha.dot(z));
}

double horseshoe_function(double x, double y)
{
    constexpr double r = 0.5;
    constexpr double q = std::numbers::pi * r / 2.0;
    if (x >= 0.0 && y > 0.0) return q + x + (y - r) * (y - r);
    if (x >= 0.0) return -q - x + (-y - r) * (-y - r);
    const double d = std::hypot(x, y) - r;
    return -std::atan(y / x) * r + d * d;
}

bool in_low_density_arm(const Point2& p) { return p.x >= 0.0 && p.y < 0.0; }

double Scenario::density(const Point2& p) const
{
    return mesh->locate(p) ? unnormalized(p) / normalizer : 0.0;
}

std::filesystem::path asset_dir()
{
    if (const char* env = std::getenv("BPST_ASSET_DIR"); env && *env) return env;
    return BPST_ASSET_DIR;
}

std::shared_ptr<const Triangulation> load_bundled_mesh(const std::string& name)
{
    const auto dir = asset_dir();
    return std::make_shared<const Triangulation>(
        load_mesh(dir / (name + "_vertices.csv"), dir / (name + "_triangles.csv")));
}

double integrate_over_domain(const Scenario& s, const std::function<double(const Point2&)>& f)
{
    static const QuadRule rule = conical_product_rule(8);
    const Triangulation& fine = s.initial_mesh ? *s.initial_mesh : *s.mesh;
    return integrate_domain(f, fine, rule);
}

namespace {

void normalize(Scenario& s)
{
    s.normalizer = 1.0;
    s.normalizer = integrate_over_domain(s, s.unnormalized);
}

} // namespace

Scenario scenario_sim1()
{
    Scenario s;
    s.name = "sim1";
    s.mesh = load_bundled_mesh("square6_50");
    s.initial_mesh = load_bundled_mesh("square6_1568");
    auto cov = [](double a, double b, double c) { return (Eigen::Matrix2d() << a, b, b, c).finished(); };
    s.gaussians = {
        {{-2.0, -1.5}, cov(0.8, -0.5, 1.0), 0.25},
        {{2.0, -2.0}, cov(1.5, 0.0, 1.5), 0.25},
        {{-2.0, 1.5}, cov(0.6, 0.0, 0.6), 0.25},
        {{2.0, 2.0}, cov(1.0, 0.9, 1.0), 0.25},
    };
    s.unnormalized = [g = s.gaussians](const Point2& p) {
        double v = 0.0;
        for (const auto& c : g) v += c.weight * gauss_pdf(c, p);
        return v;
    };
    normalize(s);
    return s;
}

Scenario scenario_sim2()
{
    Scenario s;
    s.name = "sim2";
    s.mesh = load_bundled_mesh("horseshoe_112");
    s.initial_mesh = load_bundled_mesh("horseshoe_356");
    s.unnormalized = [](const Point2& p) { return horseshoe_function(p.x, p.y) + 5.0; };
    normalize(s);
    return s;
}

Scenario scenario_sim3()
{
    Scenario base = scenario_sim2();
    Scenario s;
    s.name = "sim3";
    s.mesh = base.mesh;
    s.initial_mesh = base.initial_mesh;
    s.gaussians = {
        {{0.9, -0.5}, (Eigen::Matrix2d() << 0.04, 0.0, 0.0, 0.01).finished(), 0.05},
        {{2.0, -0.5}, (Eigen::Matrix2d() << 0.02, 0.0, 0.0, 0.01).finished(), 0.05},
    };
    SkewNormalComponent sn;
    sn.xi = {1.3, 0.0};
    sn.omega = (Eigen::Matrix2d() << 0.5, 0.0, 0.0, 0.1).finished();
    sn.alpha = {0.0, 6.0};
    sn.tau = 0.0;
    sn.weight = 0.2;
    s.skew = sn;
    const double z2 = base.normalizer;
    s.unnormalized = [g = s.gaussians, sn, z2](const Point2& p) {
        double v = 0.7 * (horseshoe_function(p.x, p.y) + 5.0) / z2;
        for (const auto& c : g) v += c.weight * gauss_pdf(c, p);
        return v + sn.weight * skew_normal_pdf(sn, p);
    };
    normalize(s);
    return s;
}

Scenario scenario_by_name(const std::string& name)
{
    if (name == "sim1") return scenario_sim1();
    if (name == "sim2") return scenario_sim2();
    if (name == "sim3") return scenario_sim3();
    throw InvalidArgument("unknown scenario '" + name + "' (expected sim1, sim2 or sim3)");
}

std::vector<Point2> sample(const Scenario& s, std::size_t n, std::uint64_t seed, SampleStats* stats)
{
    const BoundingBox box = s.mesh->bbox();
    double fmax = 0.0;
    constexpr int kProbe = 200;
    for (int j = 0; j < kProbe; ++j)
        for (int i = 0; i < kProbe; ++i) {
            const Point2 p{box.xmin + (i + 0.5) * box.width() / kProbe, box.ymin + (j + 0.5) * box.height() / kProbe};
            fmax = std::max(fmax, s.density(p));
        }
    if (!(fmax > 0.0)) throw InvalidArgument("scenario density vanishes on the probe grid");

    Rng rng(seed);
    SampleStats st;
    st.envelope = 1.1 * fmax;
    std::vector<Point2> out;
    out.reserve(n);
    while (out.size() < n) {
        const Point2 p{rng.uniform(box.xmin, box.xmax), rng.uniform(box.ymin, box.ymax)};
        const double u = rng.uniform();
        ++st.proposals;
        if (!s.mesh->locate(p)) continue;
        const double f = s.unnormalized(p) / s.normalizer;
        if (f > st.envelope) {
            st.envelope *= 2.0;
            ++st.envelope_rebuilds;
            out.clear();
            continue;
        }
        if (u * st.envelope < f) out.push_back(p);
    }
    if (stats) *stats = st;
    return out;
}

EvalGrid make_eval_grid(const Triangulation& tr, int resolution)
{
    if (resolution < 1) throw InvalidArgument("grid resolution must be positive");
    EvalGrid g;
    g.box = tr.bbox();
    g.nx = g.ny = resolution;
    const double dx = g.box.width() / resolution, dy = g.box.height() / resolution;
    g.cell_area = dx * dy;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Point2 p{g.box.xmin + (i + 0.5) * dx, g.box.ymin + (j + 0.5) * dy};
            if (tr.locate(p)) g.points.push_back(p);
        }
    return g;
}

double mise(const EvalGrid& grid, std::span<const double> estimate, std::span<const double> truth)
{
    if (estimate.size() != grid.points.size() || truth.size() != grid.points.size())
        throw InvalidArgument("grid value arrays do not match the grid");
    double s = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double d = estimate[i] - truth[i];
        s += d * d;
    }
    return s * grid.cell_area;
}

double region_mass(const EvalGrid& grid, std::span<const double> values,
                   const std::function<bool(const Point2&)>& region)
{
    if (values.size() != grid.points.size()) throw InvalidArgument("grid value array does not match the grid");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (region(grid.points[i])) s += values[i];
    return s * grid.cell_area;
}

std::vector<double> evaluate_on(const EvalGrid& grid, const std::function<double(const Point2&)>& f)
{
    std::vector<double> v(grid.points.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.points[i]);
    return v;
}

// ---------------------------------------------------------------------------
// KDE baseline

GaussianKde::GaussianKde(std::vector<Point2> data, const Eigen::Matrix2d& H) : data_(std::move(data)), H_(H)
{
    if (data_.empty()) throw InvalidArgument("KDE needs data");
    const double det = H.determinant();
    if (!(det > 0.0) || !(H(0, 0) > 0.0) || !std::isfinite(det)) throw SingularBandwidth("bandwidth matrix is not positive definite");
    Hinv_ = H.inverse();
    norm_ = kInvTwoPi / std::sqrt(det) / static_cast<double>(data_.size());
}

double GaussianKde::operator()(const Point2& p) const
{
    double s = 0.0;
    for (const auto& x : data_) {
        const Eigen::Vector2d d(p.x - x.x, p.y - x.y);
        s += std::exp(-0.5 * d.dot(Hinv_ * d));
    }
    return norm_ * s;
}

std::vector<Eigen::Matrix2d> kde_bandwidth_grid(std::span<const Point2> data)
{
    const double n = static_cast<double>(data.size());
    if (data.size() < 2) throw SingularBandwidth("KDE needs at least two points");
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : data) mean += Eigen::Vector2d(p.x, p.y);
    mean /= n;
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    for (const auto& p : data) {
        const Eigen::Vector2d d = Eigen::Vector2d(p.x, p.y) - mean;
        S += d * d.transpose();
    }
    S /= (n - 1.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(S);
    const Eigen::Vector2d ev = eig.eigenvalues();
    if (!(ev(0) > 1e-12 * std::max(1.0, ev(1)))) throw SingularBandwidth("sample covariance is singular");
    const double scale = std::pow(n, -1.0 / 3.0);
    const Eigen::Matrix2d R = eig.eigenvectors();
    const double mult[] = {0.5, 1.0, 2.0};
    const double angles[] = {-std::numbers::pi / 8.0, 0.0, std::numbers::pi / 8.0};
    std::vector<Eigen::Matrix2d> grid;
    for (double rot : angles) {
        const Eigen::Matrix2d Rr = R * Eigen::Rotation2Dd(rot).toRotationMatrix();
        for (double a : mult)
            for (double b : mult) {
                const Eigen::Vector2d d(a * a * ev(0) * scale, b * b * ev(1) * scale);
                Eigen::Matrix2d H = Rr * d.asDiagonal() * Rr.transpose();
                grid.push_back(0.5 * (H + H.transpose()));
            }
    }
    return grid;
}

double kde_cv_error(std::span<const Point2> data, const Eigen::Matrix2d& H, std::span<const int> fold_of, int folds)
{
    if (fold_of.size() != data.size()) throw InvalidArgument("fold assignment does not match the data");
    if (!(H.determinant() > 0.0)) throw SingularBandwidth("bandwidth matrix is not positive definite");
    const Eigen::Matrix2d Hinv = H.inverse(), H2inv = (2.0 * H).inverse();
    const double c1 = kInvTwoPi / std::sqrt(H.determinant());
    const double c2 = kInvTwoPi / std::sqrt((2.0 * H).determinant());
    auto quad = [](const Point2& a, const Point2& b, const Eigen::Matrix2d& M) {
        const Eigen::Vector2d d(a.x - b.x, a.y - b.y);
        return d.dot(M * d);
    };
    return cv_average(folds, [&](int k) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < data.size(); ++i) (fold_of[i] == k ? test : train).push_back(i);
        if (train.empty() || test.empty()) return std::numeric_limits<double>::quiet_NaN();
        const double m = static_cast<double>(train.size());
        double sq = 0.0;
        for (std::size_t a = 0; a < train.size(); ++a) {
            sq += 1.0;
            for (std::size_t b = a + 1; b < train.size(); ++b)
                sq += 2.0 * std::exp(-0.5 * quad(data[train[a]], data[train[b]], H2inv));
        }
        sq *= c2 / (m * m);
        std::vector<double> vals(test.size());
        for (std::size_t t = 0; t < test.size(); ++t) {
            double s = 0.0;
            for (auto i : train) s += std::exp(-0.5 * quad(data[test[t]], data[i], Hinv));
            vals[t] = c1 * s / m;
        }
        return cv_term(sq, vals);
    });
}

KdeSelection select_kde_bandwidth(std::span<const Point2> data, int folds, std::uint64_t seed, int threads)
{
    KdeSelection sel;
    sel.grid = kde_bandwidth_grid(data);
    const auto fold_of = assign_folds(data.size(), folds, seed);
    sel.cv_errors.resize(sel.grid.size());
    parallel_for(sel.grid.size(), threads,
                 [&](std::size_t i) { sel.cv_errors[i] = kde_cv_error(data, sel.grid[i], fold_of, folds); });
    // Ties go to the larger (smoother) bandwidth, measured by det H.
    for (std::size_t i = 1; i < sel.grid.size(); ++i) {
        const double e = sel.cv_errors[i], b = sel.cv_errors[sel.best_index];
        if (e < b || (e == b && sel.grid[i].determinant() > sel.grid[sel.best_index].determinant())) sel.best_index = i;
    }
    if (!std::isfinite(sel.cv_errors[sel.best_index])) throw SingularBandwidth("no bandwidth gave a finite CV error");
    sel.H = sel.grid[sel.best_index];
    return sel;
}

// ---------------------------------------------------------------------------
// Benchmark

Replication run_replication(const Scenario& s, const FitContext& ctx, const EvalGrid& grid,
                            std::span<const double> truth, const BenchmarkConfig& config, int rep,
                            bool keep_grid_values, int inner_threads)
{
    Replication r;
    r.index = rep;
    r.seed = stream_seed(config.seed, static_cast<std::uint64_t>(rep));
    const std::vector<Point2> data = sample(s, config.n, r.seed);
    const bool horseshoe = s.name != "sim1";
    for (const auto& method : config.methods) {
        MethodOutcome o;
        o.method = method;
        try {
            std::vector<double> est;
            if (method == "bpst") {
                const LocatedData located = locate_data(ctx, data);
                FitConfig cfg;
                CvOptions opt;
                opt.folds = config.folds;
                opt.seed = r.seed;
                opt.threads = inner_threads;
                const CvReport cv = select_lambda(ctx, located, cfg, config.lambda_grid, opt);
                cfg.lambda = cv.best_lambda;
                const DensityFit f = fit(ctx, located, cfg);
                o.lambda = f.lambda;
                o.converged = f.converged;
                est = eval_density(ctx, f, grid.points).values;
            } else if (method == "kde") {
                const KdeSelection sel = select_kde_bandwidth(data, config.kde_folds, r.seed, inner_threads);
                o.bandwidth = sel.H;
                const GaussianKde kde(data, sel.H);
                est = evaluate_on(grid, [&](const Point2& p) { return kde(p); });
            } else {
                throw InvalidArgument("unknown method '" + method + "' (expected bpst or kde)");
            }
            o.mise = mise(grid, est, truth);
            if (horseshoe) o.low_arm_mass = region_mass(grid, est, in_low_density_arm);
            o.ok = std::isfinite(o.mise);
            if (!o.ok) o.error = "non-finite MISE";
            if (keep_grid_values) o.grid_values = std::move(est);
        } catch (const InvalidArgument&) {
            throw;
        } catch (const Error& e) {
            o.ok = false;
            o.error = std::string(e.kind()) + ": " + e.what();
        }
        r.outcomes.push_back(std::move(o));
    }
    return r;
}

MiseResult aggregate(const std::string& method, const std::vector<Replication>& reps, std::size_t method_index)
{
    MiseResult m;
    m.method = method;
    double sum = 0.0;
    int ok = 0;
    for (const auto& r : reps) {
        const auto& o = r.outcomes[method_index];
        m.per_replication.push_back(o.ok ? o.mise : std::numeric_limits<double>::quiet_NaN());
        if (o.ok) {
            sum += o.mise;
            ++ok;
        } else {
            ++m.failures;
        }
    }
    m.mean = ok > 0 ? sum / ok : std::numeric_limits<double>::quiet_NaN();
    if (ok > 1) {
        double ss = 0.0;
        for (double v : m.per_replication)
            if (std::isfinite(v)) ss += (v - m.mean) * (v - m.mean);
        m.sd = std::sqrt(ss / (ok - 1));
        m.sd_defined = true;
    }
    return m;
}

BenchmarkReport run_benchmark(const Scenario& s, const BenchmarkConfig& config, bool keep_grid_values)
{
    if (config.reps < 1) throw InvalidArgument("reps must be at least 1");
    if (config.n < 2) throw InvalidArgument("n must be at least 2");
    if (config.grid_resolution < 50) throw InvalidArgument("grid resolution must be at least 50");
    BenchmarkReport rep;
    rep.scenario = s.name;
    rep.config = config;
    const FitContext ctx(s.mesh, config.spec, s.initial_mesh);
    rep.grid = make_eval_grid(*s.mesh, config.grid_resolution);
    rep.truth_on_grid = evaluate_on(rep.grid, [&](const Point2& p) { return s.density_unchecked(p); });

    const auto reps = static_cast<std::size_t>(config.reps);
    const int outer = std::min(config.threads, config.reps);
    const int inner = std::max(1, config.threads / std::max(1, outer));
    rep.replications.resize(reps);
    parallel_for(reps, outer, [&](std::size_t i) {
        rep.replications[i] = run_replication(s, ctx, rep.grid, rep.truth_on_grid, config, static_cast<int>(i),
                                              keep_grid_values && i == 0, inner);
    });
    for (std::size_t m = 0; m < config.methods.size(); ++m)
        rep.results.push_back(aggregate(config.methods[m], rep.replications, m));
    return rep;
}

} // namespace bpst
