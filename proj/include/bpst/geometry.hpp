#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace bpst {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

/// Barycentric coordinates (b1, b2, b3) relative to a triangle's vertices.
using Barycentric = std::array<double, 3>;

struct BoundingBox {
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
};

/// Vertex-index triple; counterclockwise once owned by a Triangulation.
struct Triangle {
    std::array<std::size_t, 3> v{};
};

/// Cartesian geometry of one triangle, with the constant gradients of its
/// barycentric coordinate functions.
struct TriangleGeometry {
    std::array<Point2, 3> p;

    double signed_area() const;
    double area() const { return signed_area() < 0 ? -signed_area() : signed_area(); }
    Point2 point_at(const Barycentric& b) const;
    /// d b_i / dx for i = 1..3.
    std::array<double, 3> grad_x() const;
    /// d b_i / dy for i = 1..3.
    std::array<double, 3> grad_y() const;
    double longest_edge() const;
    double inradius() const;
    double min_angle_deg() const;
};

Barycentric barycentric(const TriangleGeometry& tri, const Point2& p);

/// Undirected edge (a < b) and the one or two triangles bordering it.
struct EdgeInfo {
    std::size_t a = 0, b = 0;
    std::array<std::size_t, 2> triangles{};
    int count = 0;
    bool interior() const { return count == 2; }
};

/// Points whose barycentric coordinates are all >= -kLocateTolerance belong
/// to a triangle.
inline constexpr double kLocateTolerance = 1e-10;

/// Immutable, validated, counterclockwise, conforming triangulation.
class Triangulation {
public:
    /// Validates and orients; throws DegenerateTriangle, NonConforming or
    /// IndexOutOfRange.
    Triangulation(std::vector<Point2> vertices, std::vector<Triangle> triangles);

    std::size_t size() const { return triangles_.size(); }
    const std::vector<Point2>& vertices() const { return vertices_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<EdgeInfo>& edges() const { return edges_; }
    std::size_t interior_edge_count() const;

    TriangleGeometry geometry(std::size_t t) const;
    double area(std::size_t t) const { return areas_[t]; }
    double total_area() const { return total_area_; }
    const BoundingBox& bbox() const { return bbox_; }

    /// Lowest-index triangle containing p (within kLocateTolerance), if any.
    /// Uses a uniform bucket grid; agrees with locate_brute_force.
    std::optional<std::size_t> locate(const Point2& p) const;
    std::optional<std::size_t> locate_brute_force(const Point2& p) const;

    /// Triangles sharing at least one vertex with triangle k (k included), sorted.
    std::vector<std::size_t> vertex_neighborhood(std::size_t k) const;

private:
    void build_index();
    void build_edges();
    void check_conformity() const;
    std::vector<std::size_t> candidates_in_box(const BoundingBox& box) const;

    std::vector<Point2> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<double> areas_;
    double total_area_ = 0.0;
    BoundingBox bbox_;
    std::vector<EdgeInfo> edges_;
    std::vector<std::vector<std::size_t>> vertex_triangles_;

    // Bucket grid: cell (i, j) lists every triangle whose padded bounding box
    // touches it, in ascending order.
    std::size_t grid_nx_ = 1, grid_ny_ = 1;
    double cell_w_ = 1.0, cell_h_ = 1.0;
    std::vector<std::vector<std::size_t>> buckets_;
};

struct MeshQuality {
    double mesh_size = 0.0;     // longest edge over all triangles
    double min_inradius = 0.0;
    double beta_ratio = 0.0;    // mesh_size / min_inradius
    double min_angle_deg = 0.0;
};

MeshQuality mesh_quality(const Triangulation& tr);

std::vector<std::size_t> vertex_neighborhood(const Triangulation& tr, std::size_t k);

/// Reads a vertex CSV (header `x,y`) and a triangle CSV (header `v1,v2,v3`).
Triangulation load_mesh(std::istream& vertices, std::istream& triangles);
Triangulation load_mesh(const std::filesystem::path& vertices, const std::filesystem::path& triangles);

} // namespace bpst
