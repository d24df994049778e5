#include "bpst/geometry.hpp"

#include "bpst/errors.hpp"
#include "bpst/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <string>

namespace bpst {

namespace {

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double cross(const Point2& o, const Point2& a, const Point2& b)
{
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Strict interior overlap of two triangles by the separating axis test.
// Touching along an edge or a vertex is not an overlap.
bool triangles_overlap(const TriangleGeometry& s, const TriangleGeometry& t, double eps)
{
    const TriangleGeometry* tris[2] = {&s, &t};
    for (const auto* owner : tris) {
        for (int e = 0; e < 3; ++e) {
            const Point2& a = owner->p[e];
            const Point2& b = owner->p[(e + 1) % 3];
            const double nx = -(b.y - a.y), ny = b.x - a.x;
            const double len = std::hypot(nx, ny);
            double min_s = std::numeric_limits<double>::infinity(), max_s = -min_s;
            double min_t = min_s, max_t = -min_s;
            for (int i = 0; i < 3; ++i) {
                const double ps = (s.p[i].x * nx + s.p[i].y * ny) / len;
                const double pt = (t.p[i].x * nx + t.p[i].y * ny) / len;
                min_s = std::min(min_s, ps);
                max_s = std::max(max_s, ps);
                min_t = std::min(min_t, pt);
                max_t = std::max(max_t, pt);
            }
            if (std::min(max_s, max_t) - std::max(min_s, min_t) <= eps) return false;
        }
    }
    return true;
}

BoundingBox box_of(const TriangleGeometry& g, double pad)
{
    BoundingBox b{g.p[0].x, g.p[0].x, g.p[0].y, g.p[0].y};
    for (const auto& q : g.p) {
        b.xmin = std::min(b.xmin, q.x);
        b.xmax = std::max(b.xmax, q.x);
        b.ymin = std::min(b.ymin, q.y);
        b.ymax = std::max(b.ymax, q.y);
    }
    b.xmin -= pad;
    b.xmax += pad;
    b.ymin -= pad;
    b.ymax += pad;
    return b;
}

} // namespace

// ---------------------------------------------------------------------------
// TriangleGeometry

double TriangleGeometry::signed_area() const { return 0.5 * cross(p[0], p[1], p[2]); }

Point2 TriangleGeometry::point_at(const Barycentric& b) const
{
    return {b[0] * p[0].x + b[1] * p[1].x + b[2] * p[2].x, b[0] * p[0].y + b[1] * p[1].y + b[2] * p[2].y};
}

std::array<double, 3> TriangleGeometry::grad_x() const
{
    const double d = cross(p[0], p[1], p[2]);
    const double g2 = (p[2].y - p[0].y) / d;
    const double g3 = -(p[1].y - p[0].y) / d;
    return {-(g2 + g3), g2, g3};
}

std::array<double, 3> TriangleGeometry::grad_y() const
{
    const double d = cross(p[0], p[1], p[2]);
    const double g2 = -(p[2].x - p[0].x) / d;
    const double g3 = (p[1].x - p[0].x) / d;
    return {-(g2 + g3), g2, g3};
}

double TriangleGeometry::longest_edge() const
{
    return std::max({dist(p[0], p[1]), dist(p[1], p[2]), dist(p[2], p[0])});
}

double TriangleGeometry::inradius() const
{
    const double s = 0.5 * (dist(p[0], p[1]) + dist(p[1], p[2]) + dist(p[2], p[0]));
    return area() / s;
}

double TriangleGeometry::min_angle_deg() const
{
    double best = 180.0;
    for (int i = 0; i < 3; ++i) {
        const Point2& o = p[i];
        const Point2& a = p[(i + 1) % 3];
        const Point2& b = p[(i + 2) % 3];
        const double dot = (a.x - o.x) * (b.x - o.x) + (a.y - o.y) * (b.y - o.y);
        const double crs = std::abs(cross(o, a, b));
        best = std::min(best, std::atan2(crs, dot) * 180.0 / std::numbers::pi);
    }
    return best;
}

Barycentric barycentric(const TriangleGeometry& tri, const Point2& p)
{
    const Point2& a = tri.p[0];
    const Point2& b = tri.p[1];
    const Point2& c = tri.p[2];
    const double d = cross(a, b, c);
    const double b2 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / d;
    const double b3 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / d;
    return {1.0 - b2 - b3, b2, b3};
}

// ---------------------------------------------------------------------------
// Triangulation

Triangulation::Triangulation(std::vector<Point2> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles))
{
    if (triangles_.empty()) throw InvalidArgument("triangulation has no triangles");
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        if (!std::isfinite(vertices_[i].x) || !std::isfinite(vertices_[i].y))
            throw InvalidArgument("vertex " + std::to_string(i) + " has non-finite coordinates");
    }
    areas_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        auto& v = triangles_[t].v;
        for (auto idx : v) {
            if (idx >= vertices_.size())
                throw IndexOutOfRange("triangle " + std::to_string(t) + " references vertex " +
                                      std::to_string(idx) + " of " + std::to_string(vertices_.size()));
        }
        if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2])
            throw DegenerateTriangle("triangle " + std::to_string(t) + " repeats a vertex index");
        TriangleGeometry g = geometry(t);
        if (g.signed_area() < 0) {
            std::swap(v[1], v[2]);
            g = geometry(t);
        }
        const double longest = g.longest_edge();
        if (!(g.signed_area() > 1e-12 * longest * longest))
            throw DegenerateTriangle("triangle " + std::to_string(t) + " has zero area");
        areas_[t] = g.signed_area();
        total_area_ += areas_[t];
    }

    bbox_ = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& tri : triangles_) {
        for (auto idx : tri.v) {
            const auto& q = vertices_[idx];
            bbox_.xmin = std::min(bbox_.xmin, q.x);
            bbox_.xmax = std::max(bbox_.xmax, q.x);
            bbox_.ymin = std::min(bbox_.ymin, q.y);
            bbox_.ymax = std::max(bbox_.ymax, q.y);
        }
    }

    vertex_triangles_.assign(vertices_.size(), {});
    for (std::size_t t = 0; t < triangles_.size(); ++t)
        for (auto idx : triangles_[t].v) vertex_triangles_[idx].push_back(t);

    build_edges();
    build_index();
    check_conformity();
}

void Triangulation::build_edges()
{
    std::map<std::pair<std::size_t, std::size_t>, EdgeInfo> edges;
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const auto& v = triangles_[t].v;
        for (int e = 0; e < 3; ++e) {
            const std::size_t a = std::min(v[e], v[(e + 1) % 3]);
            const std::size_t b = std::max(v[e], v[(e + 1) % 3]);
            auto& info = edges[{a, b}];
            info.a = a;
            info.b = b;
            if (info.count == 2)
                throw NonConforming("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                    ") borders more than two triangles");
            info.triangles[info.count++] = t;
        }
    }
    edges_.clear();
    edges_.reserve(edges.size());
    for (auto& [key, info] : edges) edges_.push_back(info);
}

std::size_t Triangulation::interior_edge_count() const
{
    return static_cast<std::size_t>(std::count_if(edges_.begin(), edges_.end(),
                                                  [](const EdgeInfo& e) { return e.interior(); }));
}

TriangleGeometry Triangulation::geometry(std::size_t t) const
{
    const auto& v = triangles_[t].v;
    return {{vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]}};
}

void Triangulation::build_index()
{
    const double w = std::max(bbox_.width(), 1e-300);
    const double h = std::max(bbox_.height(), 1e-300);
    const double n = static_cast<double>(triangles_.size());
    grid_nx_ = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(std::sqrt(n * w / h))), 1, 1024);
    grid_ny_ = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(std::sqrt(n * h / w))), 1, 1024);
    cell_w_ = w / static_cast<double>(grid_nx_);
    cell_h_ = h / static_cast<double>(grid_ny_);
    buckets_.assign(grid_nx_ * grid_ny_, {});
    const double pad = 1e-8 * std::max(w, h);
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const BoundingBox b = box_of(geometry(t), pad);
        const auto clampx = [&](double x) {
            return std::min<std::size_t>(grid_nx_ - 1,
                                         static_cast<std::size_t>(std::max(0.0, (x - bbox_.xmin) / cell_w_)));
        };
        const auto clampy = [&](double y) {
            return std::min<std::size_t>(grid_ny_ - 1,
                                         static_cast<std::size_t>(std::max(0.0, (y - bbox_.ymin) / cell_h_)));
        };
        for (std::size_t j = clampy(b.ymin); j <= clampy(b.ymax); ++j)
            for (std::size_t i = clampx(b.xmin); i <= clampx(b.xmax); ++i) buckets_[j * grid_nx_ + i].push_back(t);
    }
}

std::vector<std::size_t> Triangulation::candidates_in_box(const BoundingBox& box) const
{
    const auto cx = [&](double x) {
        return std::min<std::size_t>(grid_nx_ - 1, static_cast<std::size_t>(std::max(0.0, (x - bbox_.xmin) / cell_w_)));
    };
    const auto cy = [&](double y) {
        return std::min<std::size_t>(grid_ny_ - 1, static_cast<std::size_t>(std::max(0.0, (y - bbox_.ymin) / cell_h_)));
    };
    std::vector<std::size_t> out;
    for (std::size_t j = cy(box.ymin); j <= cy(box.ymax); ++j)
        for (std::size_t i = cx(box.xmin); i <= cx(box.xmax); ++i) {
            const auto& b = buckets_[j * grid_nx_ + i];
            out.insert(out.end(), b.begin(), b.end());
        }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void Triangulation::check_conformity() const
{
    const double scale = std::max(bbox_.width(), bbox_.height());
    for (std::size_t s = 0; s < triangles_.size(); ++s) {
        const TriangleGeometry gs = geometry(s);
        const BoundingBox box = box_of(gs, 0.0);
        for (std::size_t t : candidates_in_box(box)) {
            if (t <= s) continue;
            const TriangleGeometry gt = geometry(t);
            if (triangles_overlap(gs, gt, 1e-10 * scale))
                throw NonConforming("triangles " + std::to_string(s) + " and " + std::to_string(t) + " overlap");
        }
    }
    // A vertex strictly inside another triangle's edge is a T-junction.
    for (std::size_t vi = 0; vi < vertices_.size(); ++vi) {
        if (vertex_triangles_[vi].empty()) continue;
        const Point2& w = vertices_[vi];
        const double pad = 1e-9 * scale;
        for (std::size_t t : candidates_in_box({w.x - pad, w.x + pad, w.y - pad, w.y + pad})) {
            const auto& v = triangles_[t].v;
            for (int e = 0; e < 3; ++e) {
                const std::size_t ia = v[e], ib = v[(e + 1) % 3];
                if (ia == vi || ib == vi) continue;
                const Point2& a = vertices_[ia];
                const Point2& b = vertices_[ib];
                const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
                const double s = ((w.x - a.x) * (b.x - a.x) + (w.y - a.y) * (b.y - a.y)) / len2;
                const double off = std::abs(cross(a, b, w)) / std::sqrt(len2);
                if (s > 1e-9 && s < 1.0 - 1e-9 && off <= 1e-9 * std::sqrt(len2))
                    throw NonConforming("vertex " + std::to_string(vi) + " lies inside an edge of triangle " +
                                        std::to_string(t));
            }
        }
    }
}

std::optional<std::size_t> Triangulation::locate(const Point2& p) const
{
    if (!(p.x >= bbox_.xmin - cell_w_ && p.x <= bbox_.xmax + cell_w_ && p.y >= bbox_.ymin - cell_h_ &&
          p.y <= bbox_.ymax + cell_h_))
        return std::nullopt;
    const auto i = std::min<std::size_t>(grid_nx_ - 1,
                                         static_cast<std::size_t>(std::max(0.0, (p.x - bbox_.xmin) / cell_w_)));
    const auto j = std::min<std::size_t>(grid_ny_ - 1,
                                         static_cast<std::size_t>(std::max(0.0, (p.y - bbox_.ymin) / cell_h_)));
    for (std::size_t t : buckets_[j * grid_nx_ + i]) {
        const Barycentric b = barycentric(geometry(t), p);
        if (b[0] >= -kLocateTolerance && b[1] >= -kLocateTolerance && b[2] >= -kLocateTolerance) return t;
    }
    return std::nullopt;
}

std::optional<std::size_t> Triangulation::locate_brute_force(const Point2& p) const
{
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const Barycentric b = barycentric(geometry(t), p);
        if (b[0] >= -kLocateTolerance && b[1] >= -kLocateTolerance && b[2] >= -kLocateTolerance) return t;
    }
    return std::nullopt;
}

std::vector<std::size_t> Triangulation::vertex_neighborhood(std::size_t k) const
{
    if (k >= triangles_.size()) throw IndexOutOfRange("triangle index " + std::to_string(k));
    std::vector<std::size_t> out;
    for (auto v : triangles_[k].v) out.insert(out.end(), vertex_triangles_[v].begin(), vertex_triangles_[v].end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::size_t> vertex_neighborhood(const Triangulation& tr, std::size_t k)
{
    return tr.vertex_neighborhood(k);
}

MeshQuality mesh_quality(const Triangulation& tr)
{
    MeshQuality q;
    q.min_inradius = std::numeric_limits<double>::infinity();
    q.min_angle_deg = 180.0;
    for (std::size_t t = 0; t < tr.size(); ++t) {
        const auto g = tr.geometry(t);
        q.mesh_size = std::max(q.mesh_size, g.longest_edge());
        q.min_inradius = std::min(q.min_inradius, g.inradius());
        q.min_angle_deg = std::min(q.min_angle_deg, g.min_angle_deg());
    }
    q.beta_ratio = q.mesh_size / q.min_inradius;
    return q;
}

// ---------------------------------------------------------------------------
// Loading

Triangulation load_mesh(std::istream& vertices, std::istream& triangles)
{
    const auto vrows = io::read_numeric_csv(vertices, {"x", "y"}, "vertices");
    const auto trows = io::read_numeric_csv(triangles, {"v1", "v2", "v3"}, "triangles");
    std::vector<Point2> pts;
    pts.reserve(vrows.size());
    for (const auto& r : vrows) pts.push_back({r[0], r[1]});
    std::vector<Triangle> tris;
    tris.reserve(trows.size());
    for (std::size_t i = 0; i < trows.size(); ++i) {
        Triangle t;
        for (int k = 0; k < 3; ++k) {
            const double v = trows[i][k];
            if (v < 0 || v != std::floor(v))
                throw IndexOutOfRange("triangle row " + std::to_string(i) + " has a non-integer or negative index");
            t.v[k] = static_cast<std::size_t>(v);
        }
        tris.push_back(t);
    }
    return Triangulation(std::move(pts), std::move(tris));
}

Triangulation load_mesh(const std::filesystem::path& vertices, const std::filesystem::path& triangles)
{
    std::ifstream vin(vertices);
    if (!vin) throw ParseError("cannot open " + vertices.string());
    std::ifstream tin(triangles);
    if (!tin) throw ParseError("cannot open " + triangles.string());
    return load_mesh(vin, tin);
}

} // namespace bpst
