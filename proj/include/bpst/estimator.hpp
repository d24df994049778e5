#pragma once

#include "bpst/bernstein.hpp"
#include "bpst/geometry.hpp"
#include "bpst/quadrature.hpp"
#include "bpst/spline_space.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bpst {

/// Optimizer and initialization settings for one penalized-likelihood fit.
struct FitConfig {
    double lambda = 1e-3;
    int max_iters = 100;
    double grad_tol = 1e-9;  // sup-norm of the gradient
    double step_tol = 1e-12; // sup-norm of the accepted step
    double obj_tol = 1e-13;  // absolute objective decrease
    double lss_threshold = 5.0; // mean points per triangle below which the LSS initializer is used
    double lambda_init = 1e-4;
};

/// Everything about a fit that does not depend on the data: the mesh, the
/// constrained basis Q2, the reduced penalty P = Q2' K Q2 and the basis
/// evaluated at the quadrature points of every triangle.
/// Immutable once built; share it across folds, lambdas and replications.
class FitContext {
public:
    /// `rule` drives every likelihood-side integral (the 9-node rule unless
    /// overridden) and must outlive the context.
    FitContext(std::shared_ptr<const Triangulation> mesh, SplineSpec spec,
               std::shared_ptr<const Triangulation> initial_mesh = nullptr, const QuadRule& rule = rule_9());

    const Triangulation& mesh() const { return *mesh_; }
    std::shared_ptr<const Triangulation> mesh_ptr() const { return mesh_; }
    /// Mesh of the initial histogram; the fitting mesh unless a finer one was given.
    const Triangulation& initial_mesh() const { return *initial_mesh_; }
    bool separate_initial_mesh() const { return initial_mesh_ != mesh_; }
    const SplineSpec& spec() const { return spec_; }
    const ConstraintSystem& constraints() const { return constraints_; }
    const SparseMatrix& K() const { return K_; }
    const Eigen::MatrixXd& penalty() const { return P_; }
    const QuadRule& rule() const { return *rule_; }
    /// Rows: quadrature nodes (triangle-major); columns: reduced coefficients.
    const Eigen::MatrixXd& node_design() const { return node_design_; }
    /// Area-scaled quadrature weights matching node_design rows.
    const Eigen::VectorXd& node_weights() const { return node_weights_; }
    const std::vector<Point2>& node_points() const { return node_points_; }
    Eigen::Index dimension() const { return constraints_.Q2.cols(); }

    /// Row vector B(p) Q2 for a point inside triangle t.
    Eigen::RowVectorXd design_row(std::size_t t, const Point2& p) const;

private:
    std::shared_ptr<const Triangulation> mesh_;
    std::shared_ptr<const Triangulation> initial_mesh_;
    SplineSpec spec_;
    const QuadRule* rule_;
    ConstraintSystem constraints_;
    SparseMatrix K_;
    Eigen::MatrixXd P_;
    Eigen::MatrixXd node_design_;
    Eigen::VectorXd node_weights_;
    std::vector<Point2> node_points_;
};

/// Data located in the fitting mesh (and in the initial mesh), with the
/// design rows B(x_i) Q2 cached.
struct LocatedData {
    std::vector<Point2> points;
    std::vector<std::size_t> triangle;
    std::vector<std::size_t> initial_triangle;
    Eigen::MatrixXd design;

    std::size_t size() const { return points.size(); }
};

/// Throws PointOutsideDomain with the offending indices.
LocatedData locate_data(const FitContext& ctx, std::span<const Point2> points);

/// Piecewise-constant starting density.
struct InitialDensity {
    enum class Variant { histogram, lss };
    std::vector<double> per_triangle_value;
    Variant variant = Variant::histogram;
};

const char* to_string(InitialDensity::Variant v);

/// nu_k / (n A_k); `triangles[i]` is the triangle holding point i.
InitialDensity initial_histogram(const Triangulation& tr, std::span<const std::size_t> triangles);
InitialDensity initial_histogram(const Triangulation& tr, std::span<const Point2> points);

/// Counts and areas pooled over the vertex neighbourhood of each triangle.
InitialDensity initial_lss(const Triangulation& tr, std::span<const std::size_t> triangles);
InitialDensity initial_lss(const Triangulation& tr, std::span<const Point2> points);

/// Penalized least-squares fit of log(max(initial, floor)) at the quadrature
/// nodes; floor = 1e-8 / |Omega|.
Eigen::VectorXd init_theta(const FitContext& ctx, const InitialDensity& initial, double lambda_init = 1e-4);

/// Reduced objective
///   L(theta) = -mean_i B(x_i)Q2 theta + sum_nodes w exp(B_T Q2 theta) + lambda theta' P theta
/// with analytic gradient and Hessian.
class PenalizedLikelihood {
public:
    /// `data_mean_row` is (1/n) sum_i B(x_i) Q2.
    PenalizedLikelihood(const FitContext& ctx, Eigen::VectorXd data_mean_row, double lambda);

    double value(const Eigen::VectorXd& theta) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
    Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const;

    double lambda() const { return lambda_; }
    const Eigen::VectorXd& data_mean_row() const { return data_mean_; }

    /// Exponent cap; beyond it value() returns +infinity.
    static constexpr double kMaxExponent = 700.0;

private:
    const FitContext* ctx_;
    Eigen::VectorXd data_mean_;
    double lambda_;
};

struct DensityFit {
    Eigen::VectorXd theta;
    Eigen::VectorXd gamma;
    double lambda = 0.0;
    double log_norm_const = 0.0;  // log of the quadrature integral of exp(g) at the final iterate
    std::vector<double> objective_trace;
    bool converged = false;
    int iterations = 0;
    double gradient_sup_norm = 0.0;
    std::string stop_reason;
    InitialDensity::Variant initial_variant = InitialDensity::Variant::histogram;
    int gradient_fallbacks = 0;   // iterations where the Hessian was not positive definite

    double final_objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
    double integral_before_renormalization() const;
};

/// Line-search Newton minimization of the reduced objective (Armijo c = 1e-4,
/// halving, unit initial step). `subset` selects rows of `data`; empty means all.
DensityFit fit(const FitContext& ctx, const LocatedData& data, const FitConfig& config,
               std::span<const std::size_t> subset = {});
DensityFit fit(const FitContext& ctx, std::span<const Point2> points, const FitConfig& config);

/// Newton minimization from a given starting point (used by fit; exposed for tests).
DensityFit minimize(const PenalizedLikelihood& objective, Eigen::VectorXd theta0, const FitConfig& config);

struct DensityValues {
    std::vector<double> values;
    std::vector<bool> inside;
};

/// exp(B(p) gamma - log_norm_const); zero with inside = false outside the mesh.
DensityValues eval_density(const FitContext& ctx, const DensityFit& fit, std::span<const Point2> points);

/// Renormalized density at the rows of a design matrix.
Eigen::VectorXd density_at_rows(const DensityFit& fit, const Eigen::MatrixXd& design);

/// Quadrature integral of the renormalized density squared.
double integral_of_square(const FitContext& ctx, const DensityFit& fit);

} // namespace bpst
