#include "bpst/errors.hpp"
#include "bpst/estimator.hpp"
#include "bpst/simbench.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

using namespace bpst;
using namespace bpst::testing;

namespace {

std::shared_ptr<const Triangulation> share(Triangulation tr) { return std::make_shared<const Triangulation>(std::move(tr)); }

std::vector<Point2> uniform_points(const BoundingBox& b, std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<Point2> pts(n);
    for (auto& p : pts) p = {rng.uniform(b.xmin, b.xmax), rng.uniform(b.ymin, b.ymax)};
    return pts;
}

Eigen::VectorXd mean_row(const LocatedData& d) { return d.design.colwise().mean().transpose(); }

Eigen::VectorXd random_theta(Eigen::Index n, Rng& rng, double scale)
{
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.uniform(-1, 1);
    return v;
}

// Richardson-extrapolated central difference of a scalar function along e_i.
template <class F>
double derivative(const F& f, Eigen::VectorXd x, Eigen::Index i, double h)
{
    auto central = [&](double s) {
        Eigen::VectorXd a = x, b = x;
        a(i) += s;
        b(i) -= s;
        return (f(a) - f(b)) / (2 * s);
    };
    return (4 * central(h / 2) - central(h)) / 3;
}

struct Setup {
    std::shared_ptr<const FitContext> ctx;
    LocatedData data;
};

Setup sim1_setup(std::size_t n = 200, std::uint64_t seed = 7)
{
    const Scenario s = scenario_sim1();
    auto ctx = std::make_shared<const FitContext>(s.mesh, SplineSpec{3, 1}, s.initial_mesh);
    const auto pts = sample(s, n, seed);
    return {ctx, locate_data(*ctx, pts)};
}

} // namespace

TEST_CASE("initial histogram")
{
    const auto tri = single_triangle({0, 0}, {2, 0}, {0, 3});
    const std::vector<Point2> pts{{0.1, 0.1}, {0.5, 0.5}, {1.0, 0.2}};
    for (double v : initial_histogram(tri, pts).per_triangle_value) CHECK(v == doctest::Approx(1.0 / 3.0));

    const auto sq = unit_square_2();
    const std::vector<Point2> lower{{0.9, 0.1}, {0.6, 0.3}, {0.7, 0.5}};
    const auto h = initial_histogram(sq, lower);
    CHECK(h.per_triangle_value[0] == doctest::Approx(2.0));
    CHECK(h.per_triangle_value[1] == 0.0);
    CHECK(h.variant == InitialDensity::Variant::histogram);

    const auto mesh = load_bundled_mesh("horseshoe_356");
    const auto s = scenario_sim2();
    const auto data = sample(s, 500, 3);
    const auto hist = initial_histogram(*mesh, data);
    double total = 0.0;
    for (std::size_t k = 0; k < mesh->size(); ++k) {
        CHECK(hist.per_triangle_value[k] >= 0.0);
        total += hist.per_triangle_value[k] * mesh->area(k);
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);

    const std::vector<Point2> outside{{0.5, 0.5}, {2.0, 2.0}};
    CHECK_THROWS_AS(initial_histogram(sq, outside), PointOutsideDomain);
}

TEST_CASE("initial LSS estimator")
{
    const auto tri = single_triangle({0, 0}, {2, 0}, {0, 3});
    const std::vector<Point2> pts{{0.1, 0.1}, {0.5, 0.5}};
    CHECK(initial_lss(tri, pts).per_triangle_value == initial_histogram(tri, pts).per_triangle_value);

    const auto sq = unit_square_2();
    const std::vector<Point2> lower{{0.9, 0.1}, {0.6, 0.3}};
    const auto l = initial_lss(sq, lower);
    CHECK(l.variant == InitialDensity::Variant::lss);
    CHECK(l.per_triangle_value[0] == doctest::Approx(1.0));
    CHECK(l.per_triangle_value[1] == doctest::Approx(1.0));

    // Brute-force pooling over vertex-sharing triangles.
    const auto g = grid_mesh(6);
    const std::vector<Point2> few{{0.05, 0.05}, {0.51, 0.52}, {0.9, 0.1}};
    const auto lss = initial_lss(g, few);
    std::vector<std::size_t> owner;
    for (const auto& p : few) owner.push_back(*g.locate_brute_force(p));
    for (std::size_t k = 0; k < g.size(); ++k) {
        double count = 0.0, area = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            bool shares = false;
            for (auto a : g.triangles()[k].v)
                for (auto b : g.triangles()[j].v) shares |= a == b;
            if (!shares) continue;
            area += g.area(j);
            count += static_cast<double>(std::count(owner.begin(), owner.end(), j));
        }
        CHECK(lss.per_triangle_value[k] == doctest::Approx(count / (3.0 * area)).epsilon(1e-12));
        const bool empty = std::count(owner.begin(), owner.end(), k) == 0;
        if (empty && count > 0) CHECK(lss.per_triangle_value[k] > 0.0);
    }
}

TEST_CASE("init_theta")
{
    const auto mesh = share(grid_mesh(3, -1, 2, 0, 1));
    const FitContext ctx(mesh, SplineSpec{3, 1});
    const double area = mesh->total_area();

    InitialDensity flat;
    flat.per_triangle_value.assign(mesh->size(), 1.0 / area);
    const Eigen::VectorXd theta = init_theta(ctx, flat);
    const Eigen::VectorXd fitted = ctx.node_design() * theta;
    CHECK((fitted.array() - std::log(1.0 / area)).abs().maxCoeff() <= 1e-6);

    // A zero triangle enters through the floor and the result stays finite.
    InitialDensity holes = flat;
    holes.per_triangle_value[4] = 0.0;
    const Eigen::VectorXd th = init_theta(ctx, holes, 1e-4);
    CHECK(th.allFinite());

    // Independent dense solve of the same penalized least squares via an
    // augmented QR: [A; sqrt(lambda) L] theta ~ [y; 0], P = L'L.
    Rng rng(2);
    InitialDensity rough;
    for (std::size_t k = 0; k < mesh->size(); ++k) rough.per_triangle_value.push_back(rng.uniform(0.0, 1.0));
    rough.per_triangle_value[0] = 0.0;
    const double lam = 1e-3;
    const Eigen::VectorXd ours = init_theta(ctx, rough, lam);
    const Eigen::MatrixXd& A = ctx.node_design();
    Eigen::VectorXd y(A.rows());
    const std::size_t per = ctx.rule().size();
    for (Eigen::Index q = 0; q < A.rows(); ++q)
        y(q) = std::log(std::max(rough.per_triangle_value[static_cast<std::size_t>(q) / per], 1e-8 / area));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ctx.penalty());
    const Eigen::MatrixXd L =
        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    Eigen::MatrixXd aug(A.rows() + L.rows(), A.cols());
    aug << A, std::sqrt(lam) * L;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(aug.rows());
    rhs.head(A.rows()) = y;
    const Eigen::VectorXd oracle = aug.colPivHouseholderQr().solve(rhs);
    CHECK((A * ours - A * oracle).cwiseAbs().maxCoeff() <= 1e-8);

    InitialDensity zero;
    zero.per_triangle_value.assign(mesh->size(), 0.0);
    CHECK_THROWS(init_theta(ctx, zero));
}

TEST_CASE("objective closed forms")
{
    const auto [ctx, data] = sim1_setup();
    const double area = ctx->mesh().total_area();
    CHECK(area == doctest::Approx(144.0));
    const PenalizedLikelihood obj(*ctx, mean_row(data), 0.01);
    const Eigen::Index d = ctx->dimension();
    CHECK(obj.value(Eigen::VectorXd::Zero(d)) == doctest::Approx(area).epsilon(1e-12));

    // The constant log-density -log|Omega|: objective log|Omega| + 1, below |Omega|.
    InitialDensity flat;
    flat.per_triangle_value.assign(ctx->initial_mesh().size(), 1.0 / area);
    const Eigen::VectorXd uniform = init_theta(*ctx, flat, 1e-10);
    CHECK(obj.value(uniform) == doctest::Approx(std::log(area) + 1.0).epsilon(1e-6));
    CHECK(obj.value(uniform) < obj.value(Eigen::VectorXd::Zero(d)));

    Rng rng(5);
    const Eigen::VectorXd th = random_theta(d, rng, 0.3);
    const PenalizedLikelihood doubled(*ctx, mean_row(data), 0.02);
    const double pen = th.dot(ctx->penalty() * th);
    CHECK(doubled.value(th) - obj.value(th) == doctest::Approx(0.01 * pen).epsilon(1e-9));

    Eigen::VectorXd huge = Eigen::VectorXd::Zero(d);
    huge.setConstant(1e4);
    CHECK(std::isinf(obj.value(huge)));
}

TEST_CASE("gradient at zero with no data is the basis integral")
{
    const auto mesh = share(grid_mesh(2, 0, 2, 0, 1));
    const FitContext ctx(mesh, SplineSpec{3, 1});
    const PenalizedLikelihood obj(ctx, Eigen::VectorXd::Zero(ctx.dimension()), 0.0);
    const Eigen::VectorXd g = obj.gradient(Eigen::VectorXd::Zero(ctx.dimension()));
    Eigen::VectorXd oracle = Eigen::VectorXd::Zero(ctx.dimension());
    for (std::size_t t = 0; t < mesh->size(); ++t) {
        const auto geo = mesh->geometry(t);
        const QuadRule& r = rule_12();
        for (std::size_t q = 0; q < r.size(); ++q)
            oracle += geo.area() * r.weights[q] * ctx.design_row(t, geo.point_at(r.nodes[q])).transpose();
    }
    CHECK((g - oracle).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("analytic gradient and Hessian against finite differences")
{
    struct Config {
        std::string mesh;
        SplineSpec spec;
        double lambda;
    };
    const Scenario s1 = scenario_sim1();
    const Scenario s2 = scenario_sim2();
    int cfg = 0;
    for (const auto& c : {Config{"square6_50", {3, 1}, 1e-3}, Config{"horseshoe_112", {3, 1}, 0.1},
                          Config{"horseshoe_112", {2, 1}, 0.0}}) {
        const Scenario& s = c.mesh == "square6_50" ? s1 : s2;
        const FitContext ctx(load_bundled_mesh(c.mesh), c.spec);
        const auto data = locate_data(ctx, sample(s, 150, 11 + cfg++));
        const PenalizedLikelihood obj(ctx, mean_row(data), c.lambda);
        Rng rng(17);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::VectorXd th = random_theta(ctx.dimension(), rng, 0.2);
            const Eigen::VectorXd g = obj.gradient(th);
            Eigen::VectorXd fd(g.size());
            for (Eigen::Index i = 0; i < g.size(); ++i)
                fd(i) = derivative([&](const Eigen::VectorXd& x) { return obj.value(x); }, th, i, 1e-3);
            CHECK((fd - g).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, g.cwiseAbs().maxCoeff()));

            const Eigen::MatrixXd H = obj.hessian(th);
            CHECK((H - H.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * H.cwiseAbs().maxCoeff());
            if (trial < 3) {
                for (Eigen::Index j = 0; j < g.size(); j += 7) {
                    Eigen::VectorXd col(g.size());
                    for (Eigen::Index i = 0; i < g.size(); ++i)
                        col(i) = derivative([&](const Eigen::VectorXd& x) { return obj.gradient(x)(i); }, th, j, 1e-3);
                    CHECK((col - H.col(j)).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, H.cwiseAbs().maxCoeff()));
                }
            }
            if (c.lambda > 0.0) CHECK(Eigen::LLT<Eigen::MatrixXd>(H).info() == Eigen::Success);
        }
    }
}

TEST_CASE("objective is convex along random chords")
{
    const auto [ctx, data] = sim1_setup();
    const PenalizedLikelihood obj(*ctx, mean_row(data), 1e-3);
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd a = random_theta(ctx->dimension(), rng, 0.5);
        const Eigen::VectorXd b = random_theta(ctx->dimension(), rng, 0.5);
        for (double t : {0.25, 0.5, 0.75})
            CHECK(obj.value(t * a + (1 - t) * b) <= t * obj.value(a) + (1 - t) * obj.value(b) + 1e-9);
    }
}

TEST_CASE("fit invariants")
{
    const auto [ctx, data] = sim1_setup();
    FitConfig cfg;
    cfg.lambda = 1e-3;
    const DensityFit f = fit(*ctx, data, cfg);
    CHECK(f.converged);
    REQUIRE(f.objective_trace.size() >= 2);
    for (std::size_t i = 1; i < f.objective_trace.size(); ++i) CHECK(f.objective_trace[i] < f.objective_trace[i - 1]);
    CHECK((f.gamma - ctx->constraints().Q2 * f.theta).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(f.integral_before_renormalization() >= 0.999);
    CHECK(f.integral_before_renormalization() <= 1.001);
    CHECK(f.gradient_sup_norm <= cfg.grad_tol);

    // Renormalized density integrates to one by quadrature at the nodes.
    const auto vals = eval_density(*ctx, f, ctx->node_points());
    double integral = 0.0;
    for (std::size_t q = 0; q < vals.values.size(); ++q) {
        CHECK(vals.values[q] >= 0.0);
        integral += ctx->node_weights()(static_cast<Eigen::Index>(q)) * vals.values[q];
    }
    CHECK(std::abs(integral - 1.0) <= 1e-10);

    const std::vector<Point2> out{{100, 100}, {0, 0}};
    const auto ev = eval_density(*ctx, f, out);
    CHECK_FALSE(ev.inside[0]);
    CHECK(ev.values[0] == 0.0);
    CHECK(ev.inside[1]);
    CHECK(ev.values[1] > 0.0);

    // C1 across every interior edge.
    const auto& tr = ctx->mesh();
    const SplineSpec& spec = ctx->spec();
    double worst = 0.0;
    for (const auto& e : tr.edges()) {
        if (!e.interior()) continue;
        const Point2 a = tr.vertices()[e.a], b = tr.vertices()[e.b];
        for (int s = 1; s <= 10; ++s) {
            const double u = s / 11.0;
            const Point2 p{a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
            for (auto [ax, ay] : {std::pair{0, 0}, std::pair{1, 0}, std::pair{0, 1}})
                worst = std::max(worst, std::abs(spline_derivative(tr, spec, f.gamma, e.triangles[0], ax, ay, p) -
                                                 spline_derivative(tr, spec, f.gamma, e.triangles[1], ax, ay, p)));
        }
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("optimizer stop reasons")
{
    const auto [ctx, data] = sim1_setup();
    FitConfig cfg;
    cfg.max_iters = 1;
    const DensityFit one = fit(*ctx, data, cfg);
    CHECK_FALSE(one.converged);
    CHECK(one.stop_reason == "max_iters");
    CHECK(one.iterations == 1);

    cfg.max_iters = 100;
    const DensityFit full = fit(*ctx, data, cfg);
    CHECK(full.converged);
    CHECK((full.stop_reason == "gradient" || full.stop_reason == "objective" || full.stop_reason == "step"));

    // An overflowing seed restarts from zero instead of failing.
    const PenalizedLikelihood obj(*ctx, mean_row(data), 1e-3);
    const DensityFit restarted = minimize(obj, Eigen::VectorXd::Constant(ctx->dimension(), 1e4), cfg);
    CHECK(restarted.converged);
    CHECK(restarted.objective_trace.front() == doctest::Approx(ctx->mesh().total_area()));
}

TEST_CASE("initializer choice follows the sample size")
{
    const auto [ctx, data] = sim1_setup(200);
    // 200 points over 1568 initial triangles is sparse.
    CHECK(fit(*ctx, data, FitConfig{}).initial_variant == InitialDensity::Variant::lss);
    const auto mesh = share(grid_mesh(2));
    const FitContext small(mesh, SplineSpec{3, 1});
    const auto pts = uniform_points(mesh->bbox(), 200, 1);
    CHECK(fit(small, pts, FitConfig{}).initial_variant == InitialDensity::Variant::histogram);
}

TEST_CASE("roughness decreases as lambda grows")
{
    const auto [ctx, data] = sim1_setup(300, 21);
    double previous = std::numeric_limits<double>::infinity();
    for (double lam : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
        FitConfig cfg;
        cfg.lambda = lam;
        const DensityFit f = fit(*ctx, data, cfg);
        REQUIRE(f.converged);
        const double rough = f.theta.dot(ctx->penalty() * f.theta);
        CHECK(rough <= previous * (1 + 1e-9));
        previous = rough;
    }
}

TEST_CASE("fit does not depend on triangle order")
{
    const Scenario s = scenario_sim1();
    std::vector<Triangle> tris = s.mesh->triangles();
    Rng rng(6);
    rng.shuffle(tris);
    const auto permuted = share(Triangulation(s.mesh->vertices(), tris));
    const FitContext a(s.mesh, SplineSpec{3, 1});
    const FitContext b(permuted, SplineSpec{3, 1});
    const auto pts = sample(s, 400, 5);
    FitConfig cfg;
    cfg.lambda = 1e-3;
    const DensityFit fa = fit(a, pts, cfg);
    const DensityFit fb = fit(b, pts, cfg);
    const auto probes = uniform_points(s.mesh->bbox(), 100, 9);
    const auto va = eval_density(a, fa, probes);
    const auto vb = eval_density(b, fb, probes);
    for (std::size_t i = 0; i < probes.size(); ++i) CHECK(std::abs(va.values[i] - vb.values[i]) <= 1e-9);
}

TEST_CASE("uniform data on the unit square")
{
    const auto mesh = load_bundled_mesh("unit_square_32");
    const FitContext ctx(mesh, SplineSpec{3, 1});
    const auto pts = uniform_points(mesh->bbox(), 2000, 42);
    FitConfig cfg;
    cfg.lambda = 1e-3;
    const DensityFit f = fit(ctx, pts, cfg);
    CHECK(f.converged);
    std::vector<Point2> grid;
    for (int j = 0; j < 50; ++j)
        for (int i = 0; i < 50; ++i) grid.push_back({(i + 0.5) / 50, (j + 0.5) / 50});
    const auto v = eval_density(ctx, f, grid);
    double worst = 0.0;
    for (double x : v.values) worst = std::max(worst, std::abs(x - 1.0));
    CHECK(worst <= 0.15);
}

TEST_CASE("locating data")
{
    const auto mesh = share(unit_square_2());
    const FitContext ctx(mesh, SplineSpec{2, 1});
    const std::vector<Point2> pts{{0.5, 0.2}, {1.5, 0.5}, {0.2, 0.8}, {-1, -1}};
    try {
        (void)locate_data(ctx, pts);
        FAIL("expected PointOutsideDomain");
    } catch (const PointOutsideDomain& e) {
        CHECK(e.indices() == std::vector<std::size_t>{1, 3});
    }
    const std::vector<Point2> good{{0.5, 0.2}, {0.2, 0.8}};
    const auto d = locate_data(ctx, good);
    CHECK(d.triangle == std::vector<std::size_t>{0, 1});
    CHECK(d.design.rows() == 2);
    CHECK(d.design.cols() == ctx.dimension());
    CHECK((d.design.row(0) - ctx.design_row(0, good[0])).norm() == 0.0);
}
