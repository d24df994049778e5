#include "bpst/bernstein.hpp"
#include "bpst/errors.hpp"
#include "bpst/spline_space.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace bpst;
using namespace bpst::testing;

namespace {

// Direct multinomial formula, written independently of the library tables.
double bernstein_direct(int m, const MultiIndex& a, const Barycentric& b)
{
    auto fact = [](int n) { return std::tgamma(n + 1.0); };
    return fact(m) / (fact(a.i) * fact(a.j) * fact(a.k)) * std::pow(b[0], a.i) * std::pow(b[1], a.j) *
           std::pow(b[2], a.k);
}

// Central differences with one Richardson step; the leftover error term
// involves sixth derivatives, so the oracle is exact up to rounding for m <= 5.
double fd(const std::function<double(double, double)>& f, double x, double y, int ax, int ay, double h)
{
    if (ax == 0 && ay == 0) return f(x, y);
    const bool along_x = ax > 0;
    auto central = [&](double xx, double yy, double s) {
        return along_x ? (f(xx + s, yy) - f(xx - s, yy)) / (2 * s) : (f(xx, yy + s) - f(xx, yy - s)) / (2 * s);
    };
    auto g = [&](double xx, double yy) { return (4.0 * central(xx, yy, h / 2) - central(xx, yy, h)) / 3.0; };
    return along_x ? fd(g, x, y, ax - 1, ay, h) : fd(g, x, y, ax, ay - 1, h);
}

} // namespace

TEST_CASE("canonical index order")
{
    const auto& idx = multi_indices(2);
    REQUIRE(idx.size() == 6);
    const int want[6][3] = {{2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2}};
    for (int a = 0; a < 6; ++a) {
        CHECK(idx[a].i == want[a][0]);
        CHECK(idx[a].j == want[a][1]);
        CHECK(idx[a].k == want[a][2]);
        CHECK(multi_index_position(2, idx[a].i, idx[a].j) == a);
    }
    for (int m = 0; m <= kMaxDegree; ++m) {
        const auto& all = multi_indices(m);
        CHECK(static_cast<int>(all.size()) == (m + 1) * (m + 2) / 2);
        for (std::size_t a = 0; a < all.size(); ++a) CHECK(multi_index_position(m, all[a].i, all[a].j) == int(a));
    }
}

TEST_CASE("local_eval small cases")
{
    CHECK(local_eval(0, {0.2, 0.3, 0.5}) == std::vector<double>{1.0});
    const auto v1 = local_eval(1, {0.2, 0.3, 0.5});
    CHECK(std::abs(v1[0] - 0.2) <= 1e-14);
    CHECK(std::abs(v1[1] - 0.3) <= 1e-14);
    CHECK(std::abs(v1[2] - 0.5) <= 1e-14);
    const auto v2 = local_eval(2, {1, 0, 0});
    CHECK(v2[0] == 1.0);
    for (std::size_t a = 1; a < v2.size(); ++a) CHECK(v2[a] == 0.0);
}

TEST_CASE("local_eval matches the multinomial formula and sums to one")
{
    Rng rng(3);
    for (int m : {1, 2, 3, 4, 5, 8}) {
        const auto& idx = multi_indices(m);
        for (int k = 0; k < 1000; ++k) {
            const auto b = random_bary(rng);
            const auto v = local_eval(m, b);
            CHECK(std::abs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0) <= 1e-12);
            if (k < 50)
                for (std::size_t a = 0; a < idx.size(); ++a)
                    CHECK(std::abs(v[a] - bernstein_direct(m, idx[a], b)) <= 1e-13);
        }
    }
}

TEST_CASE("local_derivative closed forms")
{
    const TriangleGeometry ref{{Point2{0, 0}, Point2{1, 0}, Point2{0, 1}}};
    const auto d1 = local_derivative(1, ref, 2, 0, {0.2, 0.3, 0.5});
    for (double x : d1) CHECK(x == 0.0);
    const auto d2 = local_derivative(2, ref, 2, 0, {0.2, 0.3, 0.5});
    CHECK(d2[0] == doctest::Approx(2.0)); // b1^2 with db1/dx = -1
    const auto d0 = local_derivative(3, ref, 0, 0, {0.2, 0.3, 0.5});
    const auto v = local_eval(3, {0.2, 0.3, 0.5});
    for (std::size_t a = 0; a < v.size(); ++a) CHECK(d0[a] == doctest::Approx(v[a]));
    const auto dh = local_derivative(2, ref, 3, 0, {0.2, 0.3, 0.5});
    for (double x : dh) CHECK(x == 0.0);
}

TEST_CASE("local_derivative matches central finite differences")
{
    Rng rng(17);
    for (int m : {1, 2, 3, 4, 5}) {
        for (int trial = 0; trial < 5; ++trial) {
            TriangleGeometry g;
            do {
                for (auto& p : g.p) p = {rng.uniform(-1, 2), rng.uniform(-1, 2)};
            } while (g.min_angle_deg() < 15.0);
            const Point2 p = random_point_in(g, rng, 0.1);
            const int dim = (m + 1) * (m + 2) / 2;
            for (int ax = 0; ax <= 2; ++ax)
                for (int ay = 0; ax + ay <= 2; ++ay) {
                    if (ax + ay == 0) continue;
                    const auto d = local_derivative(m, g, ax, ay, barycentric(g, p));
                    for (int a = 0; a < dim; ++a) {
                        auto f = [&](double x, double y) { return local_eval(m, barycentric(g, {x, y}))[a]; };
                        const double num = fd(f, p.x, p.y, ax, ay, 1e-3);
                        CHECK(rel_err(d[a], num) <= 1e-6);
                    }
                }
        }
    }
}

TEST_CASE("assemble_B")
{
    const auto sq = unit_square_2();
    const SplineSpec spec{2, 1};
    const std::vector<Point2> one{{0.7, 0.2}};
    const EvalMatrix B = assemble_B(sq, spec, one);
    CHECK(B.matrix.rows() == 1);
    CHECK(B.matrix.cols() == 12);
    CHECK(B.matrix.nonZeros() == 6);
    CHECK(B.row_triangle[0] == 0);

    const auto grid = grid_mesh(3);
    Rng rng(2);
    std::vector<Point2> pts;
    for (int k = 0; k < 100; ++k) pts.push_back({rng.uniform(), rng.uniform()});
    const SplineSpec s3{3, 1};
    const EvalMatrix B3 = assemble_B(grid, s3, pts);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(s3.total_dim(grid.size())), 2.5);
    const Eigen::VectorXd vals = B3.matrix * c;
    for (Eigen::Index i = 0; i < vals.size(); ++i) CHECK(vals(i) == doctest::Approx(2.5).epsilon(1e-13));
    for (Eigen::Index i = 0; i < B3.matrix.rows(); ++i) {
        const auto t = B3.row_triangle[static_cast<std::size_t>(i)];
        int nnz = 0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(B3.matrix, i); it; ++it) {
            CHECK(it.col() / 10 == static_cast<Eigen::Index>(t));
            ++nnz;
        }
        CHECK(nnz <= 10);
    }

    const std::vector<Point2> bad{{0.5, 0.5}, {3, 3}, {0.1, 0.1}, {-1, 0}};
    try {
        assemble_B(sq, spec, bad);
        FAIL("expected PointOutsideDomain");
    } catch (const PointOutsideDomain& e) {
        CHECK(e.indices() == std::vector<std::size_t>{1, 3});
    }
}

TEST_CASE("domain-point interpolation reproduces polynomials")
{
    const auto grid = grid_mesh(2, -1, 2, 0, 1.5);
    Rng rng(23);
    for (int m : {1, 2, 3, 5}) {
        const SplineSpec spec{m, 0};
        // Random polynomial of total degree m.
        std::vector<double> coef;
        for (int a = 0; a <= m; ++a)
            for (int b = 0; a + b <= m; ++b) coef.push_back(rng.uniform(-1, 1));
        auto poly = [&](const Point2& p) {
            double s = 0.0;
            std::size_t c = 0;
            for (int a = 0; a <= m; ++a)
                for (int b = 0; a + b <= m; ++b) s += coef[c++] * std::pow(p.x, a) * std::pow(p.y, b);
            return s;
        };
        const Eigen::VectorXd gamma = interpolate_coefficients(grid, spec, poly);
        for (int k = 0; k < 50; ++k) {
            const Point2 p{rng.uniform(-1, 2), rng.uniform(0, 1.5)};
            const auto t = grid.locate(p);
            REQUIRE(t);
            CHECK(rel_err(spline_value(grid, spec, gamma, *t, p), poly(p)) <= 1e-9);
        }
    }
}
