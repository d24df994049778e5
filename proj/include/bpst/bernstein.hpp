#pragma once

#include "bpst/geometry.hpp"

#include <Eigen/SparseCore>

#include <cstddef>
#include <span>
#include <vector>

namespace bpst {

/// Degree m and smoothness r of the spline space S^r_m over a triangulation.
struct SplineSpec {
    int degree = 3;
    int smoothness = 1;

    int per_triangle_dim() const { return (degree + 1) * (degree + 2) / 2; }
    std::size_t total_dim(std::size_t triangles) const
    {
        return triangles * static_cast<std::size_t>(per_triangle_dim());
    }
};

/// Exponents (i, j, k) of b1, b2, b3; i + j + k = degree.
struct MultiIndex {
    int i = 0, j = 0, k = 0;
};

inline constexpr int kMaxDegree = 12;

/// All multi-indices of a degree in canonical order: i descending, then j descending.
const std::vector<MultiIndex>& multi_indices(int degree);

/// Position of (i, j, k) in the canonical order.
inline int multi_index_position(int degree, int i, int j)
{
    const int a = degree - i;
    return a * (a + 1) / 2 + (a - j);
}

/// B^m_{ijk}(b) = m!/(i!j!k!) b1^i b2^j b3^k for every index, canonical order.
std::vector<double> local_eval(int degree, const Barycentric& b);

/// Cartesian partial d^{ax}/dx^{ax} d^{ay}/dy^{ay} of every B^m_{ijk} at b.
std::vector<double> local_derivative(int degree, const TriangleGeometry& tri, int ax, int ay, const Barycentric& b);

/// Sparse evaluation matrix (points x total_dim); row i lives in the column
/// block of `row_triangle[i]`.
struct EvalMatrix {
    Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
    std::vector<std::size_t> row_triangle;
};

/// Throws PointOutsideDomain listing every point not covered by the mesh.
EvalMatrix assemble_B(const Triangulation& tr, const SplineSpec& spec, std::span<const Point2> points);

} // namespace bpst
