#pragma once

#include "bpst/bernstein.hpp"
#include "bpst/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <functional>
#include <iosfwd>

namespace bpst {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Smoothness conditions H (H gamma = 0 iff the spline is C^r), their rank and
/// an orthonormal basis Q2 of null(H).
struct ConstraintSystem {
    SparseMatrix H;
    Eigen::Index rank = 0;
    Eigen::MatrixXd Q2;
};

/// Bernstein-Bezier C^r conditions across every edge shared by two
/// triangles, orders 0..r. Rows may be linearly dependent.
SparseMatrix build_H(const Triangulation& tr, const SplineSpec& spec);

struct NullSpace {
    Eigen::MatrixXd Q2;
    Eigen::Index rank = 0;
};

/// Null space from a column-pivoted QR of H^T; pivots below 1e-9 times the
/// largest pivot count as zero.
NullSpace nullspace(const SparseMatrix& H);

ConstraintSystem build_constraints(const Triangulation& tr, const SplineSpec& spec);

/// Block-diagonal thin-plate energy matrix:
/// gamma^T K gamma = int (g_xx^2 + 2 g_xy^2 + g_yy^2) for g = B gamma.
SparseMatrix build_K(const Triangulation& tr, const SplineSpec& spec);

/// The dense K_T block of one triangle.
Eigen::MatrixXd penalty_block(const TriangleGeometry& tri, int degree);

/// Coefficients reproducing `f` at the domain points of every triangle.
/// Exact (per piece) when f is a polynomial of degree <= spec.degree.
Eigen::VectorXd interpolate_coefficients(const Triangulation& tr, const SplineSpec& spec,
                                         const std::function<double(const Point2&)>& f);

/// Value of the piecewise polynomial with coefficients gamma on triangle t (no location step).
double spline_value(const Triangulation& tr, const SplineSpec& spec, const Eigen::VectorXd& gamma, std::size_t t,
                    const Point2& p);

/// Cartesian partial derivative of the same piece.
double spline_derivative(const Triangulation& tr, const SplineSpec& spec, const Eigen::VectorXd& gamma,
                         std::size_t t, int ax, int ay, const Point2& p);

/// Coordinate (row col value) listing for cross-checking matrices externally.
void dump_coordinate(std::ostream& out, const SparseMatrix& m);
void dump_coordinate(std::ostream& out, const Eigen::MatrixXd& m);

} // namespace bpst
