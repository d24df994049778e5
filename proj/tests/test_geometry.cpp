#include "bpst/errors.hpp"
#include "bpst/geometry.hpp"
#include "bpst/simbench.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace bpst;
using namespace bpst::testing;

TEST_CASE("load_mesh reads the smallest conforming mesh")
{
    std::istringstream v("x,y\n0,0\n1,0\n1,1\n0,1\n");
    std::istringstream t("v1,v2,v3\n0,1,2\n0,2,3\n");
    const Triangulation tr = load_mesh(v, t);
    CHECK(tr.size() == 2);
    CHECK(tr.interior_edge_count() == 1);
    CHECK(tr.total_area() == doctest::Approx(1.0));
}

TEST_CASE("load_mesh validation")
{
    SUBCASE("index out of range")
    {
        std::istringstream v("x,y\n0,0\n1,0\n1,1\n0,1\n");
        std::istringstream t("v1,v2,v3\n0,1,99\n");
        CHECK_THROWS_AS(load_mesh(v, t), IndexOutOfRange);
    }
    SUBCASE("bad header")
    {
        std::istringstream v("a,b\n0,0\n");
        std::istringstream t("v1,v2,v3\n0,1,2\n");
        CHECK_THROWS_AS(load_mesh(v, t), ParseError);
    }
    SUBCASE("non-numeric cell")
    {
        std::istringstream v("x,y\n0,0\n1,zz\n0,1\n");
        std::istringstream t("v1,v2,v3\n0,1,2\n");
        CHECK_THROWS_AS(load_mesh(v, t), ParseError);
    }
    SUBCASE("collinear vertices")
    {
        CHECK_THROWS_AS(Triangulation({{0, 0}, {1, 0}, {2, 0}}, {Triangle{{0, 1, 2}}}), DegenerateTriangle);
    }
    SUBCASE("repeated vertex index")
    {
        CHECK_THROWS(Triangulation({{0, 0}, {1, 0}, {0, 1}}, {Triangle{{0, 1, 1}}}));
    }
    SUBCASE("overlapping triangles")
    {
        // Second triangle covers part of the first without sharing an edge.
        CHECK_THROWS_AS(Triangulation({{0, 0}, {1, 0}, {0, 1}, {0.2, 0.2}, {1.2, 0.2}, {0.2, 1.2}},
                                      {Triangle{{0, 1, 2}}, Triangle{{3, 4, 5}}}),
                        NonConforming);
    }
    SUBCASE("T-junction")
    {
        // Vertex 4 sits in the middle of edge (0,1) of the big triangle.
        CHECK_THROWS_AS(Triangulation({{0, 0}, {2, 0}, {1, 1}, {1, -1}, {1, 0}, {0, -1}},
                                      {Triangle{{0, 1, 2}}, Triangle{{0, 3, 4}}, Triangle{{4, 3, 1}}}),
                        NonConforming);
    }
    SUBCASE("edge shared by three triangles")
    {
        CHECK_THROWS_AS(Triangulation({{0, 0}, {1, 0}, {0.5, 1}, {0.5, -1}, {0.5, 2}},
                                      {Triangle{{0, 1, 2}}, Triangle{{0, 3, 1}}, Triangle{{0, 1, 4}}}),
                        NonConforming);
    }
}

TEST_CASE("clockwise input is reoriented")
{
    const Triangulation tr({{0, 0}, {1, 0}, {0, 1}}, {Triangle{{0, 2, 1}}});
    CHECK(tr.geometry(0).signed_area() > 0.0);
}

TEST_CASE("barycentric coordinates")
{
    const TriangleGeometry g{{Point2{0.3, -0.2}, Point2{2.1, 0.4}, Point2{0.7, 1.9}}};
    const Point2 c{(0.3 + 2.1 + 0.7) / 3, (-0.2 + 0.4 + 1.9) / 3};
    auto b = barycentric(g, c);
    for (double x : b) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    b = barycentric(g, g.p[0]);
    CHECK(b[0] == doctest::Approx(1.0));
    CHECK(std::abs(b[1]) < 1e-15);
    CHECK(std::abs(b[2]) < 1e-15);
    b = barycentric(g, {(0.3 + 2.1) / 2, (-0.2 + 0.4) / 2});
    CHECK(b[0] == doctest::Approx(0.5));
    CHECK(b[1] == doctest::Approx(0.5));
    CHECK(std::abs(b[2]) < 1e-15);

    Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        const auto bb = random_bary(rng, 1e-3);
        const Point2 p = g.point_at(bb);
        const auto back = barycentric(g, p);
        CHECK(std::abs(back[0] + back[1] + back[2] - 1.0) <= 1e-12);
        const Point2 q = g.point_at(back);
        CHECK(std::hypot(q.x - p.x, q.y - p.y) <= 1e-12 * std::hypot(p.x, p.y));
    }
    const auto out = barycentric(g, {-5, -5});
    CHECK(std::min({out[0], out[1], out[2]}) < 0.0);
}

TEST_CASE("locate")
{
    const Triangulation sq = unit_square_2();
    const auto g0 = sq.geometry(0);
    const Point2 c0 = g0.point_at({1.0 / 3, 1.0 / 3, 1.0 / 3});
    CHECK(sq.locate(c0) == std::optional<std::size_t>(0));
    CHECK_FALSE(sq.locate({10, 10}).has_value());
    CHECK(sq.locate({0.5, 0.5}) == std::optional<std::size_t>(0)); // shared diagonal: lowest index
    CHECK(sq.locate({0, 0}) == std::optional<std::size_t>(0));
    CHECK(sq.locate({1, 1 + 1e-13}) == std::optional<std::size_t>(0));
}

TEST_CASE("bucket index agrees with the brute-force scan")
{
    for (const std::string name : {"horseshoe_112", "horseshoe_356", "square6_50"}) {
        const auto tr = load_bundled_mesh(name);
        Rng rng(11);
        const BoundingBox b = tr->bbox();
        for (int k = 0; k < 3000; ++k) {
            const Point2 p{rng.uniform(b.xmin - 0.1, b.xmax + 0.1), rng.uniform(b.ymin - 0.1, b.ymax + 0.1)};
            CHECK(tr->locate(p) == tr->locate_brute_force(p));
        }
        // Vertices and edge midpoints exercise the tie-break rule.
        for (const auto& e : tr->edges()) {
            const Point2 a = tr->vertices()[e.a], c = tr->vertices()[e.b];
            const Point2 mid{(a.x + c.x) / 2, (a.y + c.y) / 2};
            CHECK(tr->locate(mid) == tr->locate_brute_force(mid));
            CHECK(tr->locate(a) == tr->locate_brute_force(a));
        }
    }
}

TEST_CASE("located points have nonnegative barycentric coordinates")
{
    const auto tr = load_bundled_mesh("horseshoe_112");
    Rng rng(5);
    const BoundingBox b = tr->bbox();
    for (int k = 0; k < 2000; ++k) {
        const Point2 p{rng.uniform(b.xmin, b.xmax), rng.uniform(b.ymin, b.ymax)};
        if (auto t = tr->locate(p)) {
            const auto bb = barycentric(tr->geometry(*t), p);
            CHECK(std::min({bb[0], bb[1], bb[2]}) >= -kLocateTolerance);
        }
    }
}

TEST_CASE("mesh quality closed forms")
{
    const auto eq = single_triangle({0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2});
    auto q = mesh_quality(eq);
    CHECK(q.mesh_size == doctest::Approx(1.0));
    CHECK(q.min_inradius == doctest::Approx(1.0 / (2.0 * std::sqrt(3.0))));
    CHECK(q.min_angle_deg == doctest::Approx(60.0));

    q = mesh_quality(single_triangle());
    CHECK(q.mesh_size == doctest::Approx(std::sqrt(2.0)));
    CHECK(q.min_inradius == doctest::Approx((2.0 - std::sqrt(2.0)) / 2.0));

    q = mesh_quality(unit_square_2());
    CHECK(q.beta_ratio == doctest::Approx(std::sqrt(2.0) / ((2.0 - std::sqrt(2.0)) / 2.0)));
    CHECK(q.min_angle_deg == doctest::Approx(45.0));
}

TEST_CASE("mesh quality bounds on the bundled meshes")
{
    for (const std::string name : {"unit_square_32", "square6_50", "square6_1568", "horseshoe_112", "horseshoe_356"}) {
        const auto q = mesh_quality(*load_bundled_mesh(name));
        CHECK(q.beta_ratio >= 2.0);
        CHECK(q.min_angle_deg > 0.0);
        CHECK(q.min_angle_deg <= 60.0);
    }
}

TEST_CASE("bundled mesh sizes")
{
    CHECK(load_bundled_mesh("horseshoe_112")->size() == 112);
    CHECK(load_bundled_mesh("horseshoe_356")->size() == 356);
    CHECK(load_bundled_mesh("square6_50")->size() == 50);
    CHECK(load_bundled_mesh("square6_1568")->size() == 1568);
    CHECK(load_bundled_mesh("unit_square_32")->size() == 32);
    CHECK(load_bundled_mesh("square6_50")->total_area() == doctest::Approx(144.0));
}

TEST_CASE("vertex neighbourhood")
{
    const auto sq = unit_square_2();
    CHECK(sq.vertex_neighborhood(0) == std::vector<std::size_t>{0, 1});
    CHECK(single_triangle().vertex_neighborhood(0) == std::vector<std::size_t>{0});

    const auto grid = grid_mesh(4);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::vector<std::size_t> brute;
        const auto& tk = grid.triangles()[k].v;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const auto& tj = grid.triangles()[j].v;
            bool share = false;
            for (auto a : tk)
                for (auto b : tj) share |= a == b;
            if (share) brute.push_back(j);
        }
        CHECK(grid.vertex_neighborhood(k) == brute);
    }
    // An interior triangle of a regular grid touches 12 others plus itself.
    CHECK(grid.vertex_neighborhood(2 * (1 * 4 + 1)).size() == 13u);
}
