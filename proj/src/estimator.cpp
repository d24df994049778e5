#include "bpst/estimator.hpp"

#include "bpst/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bpst {

// ---------------------------------------------------------------------------
// FitContext

FitContext::FitContext(std::shared_ptr<const Triangulation> mesh, SplineSpec spec,
                       std::shared_ptr<const Triangulation> initial_mesh, const QuadRule& likelihood_rule)
    : mesh_(std::move(mesh)), initial_mesh_(initial_mesh ? std::move(initial_mesh) : mesh_), spec_(spec), rule_(&likelihood_rule)
{
    if (!mesh_) throw InvalidArgument("FitContext needs a mesh");
    if (spec_.degree < 0 || spec_.degree > kMaxDegree) throw InvalidArgument("unsupported spline degree");
    constraints_ = build_constraints(*mesh_, spec_);
    K_ = build_K(*mesh_, spec_);
    const Eigen::MatrixXd& Q2 = constraints_.Q2;
    P_ = Q2.transpose() * (K_ * Q2);
    P_ = 0.5 * (P_ + P_.transpose()).eval();

    const QuadRule& r = rule();
    const int dim = spec_.per_triangle_dim();
    const auto nodes = static_cast<Eigen::Index>(mesh_->size() * r.size());
    node_design_.resize(nodes, Q2.cols());
    node_weights_.resize(nodes);
    node_points_.resize(static_cast<std::size_t>(nodes));
    Eigen::MatrixXd local(static_cast<Eigen::Index>(r.size()), dim);
    for (std::size_t t = 0; t < mesh_->size(); ++t) {
        const auto g = mesh_->geometry(t);
        for (std::size_t q = 0; q < r.size(); ++q) {
            const auto vals = local_eval(spec_.degree, r.nodes[q]);
            for (int a = 0; a < dim; ++a) local(static_cast<Eigen::Index>(q), a) = vals[a];
            const auto row = static_cast<Eigen::Index>(t * r.size() + q);
            node_weights_(row) = mesh_->area(t) * r.weights[q];
            node_points_[static_cast<std::size_t>(row)] = g.point_at(r.nodes[q]);
        }
        node_design_.middleRows(static_cast<Eigen::Index>(t * r.size()), static_cast<Eigen::Index>(r.size())) =
            local * Q2.middleRows(static_cast<Eigen::Index>(t * dim), dim);
    }
}

Eigen::RowVectorXd FitContext::design_row(std::size_t t, const Point2& p) const
{
    const int dim = spec_.per_triangle_dim();
    const auto vals = local_eval(spec_.degree, barycentric(mesh_->geometry(t), p));
    const Eigen::Map<const Eigen::RowVectorXd> local(vals.data(), dim);
    return local * constraints_.Q2.middleRows(static_cast<Eigen::Index>(t * dim), dim);
}

LocatedData locate_data(const FitContext& ctx, std::span<const Point2> points)
{
    LocatedData d;
    d.points.assign(points.begin(), points.end());
    d.triangle.resize(points.size());
    d.initial_triangle.resize(points.size());
    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto t = ctx.mesh().locate(points[i]);
        if (!t) {
            outside.push_back(i);
            continue;
        }
        d.triangle[i] = *t;
        if (ctx.separate_initial_mesh()) {
            const auto ti = ctx.initial_mesh().locate(points[i]);
            if (!ti) {
                outside.push_back(i);
                continue;
            }
            d.initial_triangle[i] = *ti;
        } else {
            d.initial_triangle[i] = *t;
        }
    }
    if (!outside.empty()) throw PointOutsideDomain(std::move(outside));
    d.design.resize(static_cast<Eigen::Index>(points.size()), ctx.dimension());
    for (std::size_t i = 0; i < points.size(); ++i)
        d.design.row(static_cast<Eigen::Index>(i)) = ctx.design_row(d.triangle[i], points[i]);
    return d;
}

// ---------------------------------------------------------------------------
// Initial densities

const char* to_string(InitialDensity::Variant v)
{
    return v == InitialDensity::Variant::lss ? "lss" : "histogram";
}

namespace {

std::vector<std::size_t> locate_all(const Triangulation& tr, std::span<const Point2> points)
{
    std::vector<std::size_t> tri(points.size());
    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto t = tr.locate(points[i]);
        if (!t) outside.push_back(i);
        else tri[i] = *t;
    }
    if (!outside.empty()) throw PointOutsideDomain(std::move(outside));
    return tri;
}

std::vector<double> counts_per_triangle(const Triangulation& tr, std::span<const std::size_t> triangles)
{
    std::vector<double> counts(tr.size(), 0.0);
    for (auto t : triangles) {
        if (t >= tr.size()) throw IndexOutOfRange("triangle index " + std::to_string(t));
        counts[t] += 1.0;
    }
    return counts;
}

} // namespace

InitialDensity initial_histogram(const Triangulation& tr, std::span<const std::size_t> triangles)
{
    if (triangles.empty()) throw InvalidArgument("initial density needs at least one point");
    const auto counts = counts_per_triangle(tr, triangles);
    const double n = static_cast<double>(triangles.size());
    InitialDensity out;
    out.variant = InitialDensity::Variant::histogram;
    out.per_triangle_value.resize(tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) out.per_triangle_value[k] = counts[k] / (n * tr.area(k));
    return out;
}

InitialDensity initial_histogram(const Triangulation& tr, std::span<const Point2> points)
{
    const auto tri = locate_all(tr, points);
    return initial_histogram(tr, std::span<const std::size_t>(tri));
}

InitialDensity initial_lss(const Triangulation& tr, std::span<const std::size_t> triangles)
{
    if (triangles.empty()) throw InvalidArgument("initial density needs at least one point");
    const auto counts = counts_per_triangle(tr, triangles);
    const double n = static_cast<double>(triangles.size());
    InitialDensity out;
    out.variant = InitialDensity::Variant::lss;
    out.per_triangle_value.resize(tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
        double pooled_count = 0.0, pooled_area = 0.0;
        for (auto j : tr.vertex_neighborhood(k)) {
            pooled_count += counts[j];
            pooled_area += tr.area(j);
        }
        out.per_triangle_value[k] = pooled_count / (n * pooled_area);
    }
    return out;
}

InitialDensity initial_lss(const Triangulation& tr, std::span<const Point2> points)
{
    const auto tri = locate_all(tr, points);
    return initial_lss(tr, std::span<const std::size_t>(tri));
}

Eigen::VectorXd init_theta(const FitContext& ctx, const InitialDensity& initial, double lambda_init)
{
    const Triangulation& imesh = ctx.initial_mesh();
    if (initial.per_triangle_value.size() != imesh.size())
        throw InvalidArgument("initial density does not match the initial mesh");
    if (std::none_of(initial.per_triangle_value.begin(), initial.per_triangle_value.end(),
                     [](double v) { return v > 0.0; }))
        throw InvalidArgument("initial density is identically zero");

    const double floor = 1e-8 / ctx.mesh().total_area();
    const auto& nodes = ctx.node_points();
    const std::size_t per_tri = ctx.rule().size();
    Eigen::VectorXd y(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        std::size_t t = q / per_tri;
        if (ctx.separate_initial_mesh()) {
            const auto ti = imesh.locate(nodes[q]);
            if (!ti) throw PointOutsideDomain({q});
            t = *ti;
        }
        y(static_cast<Eigen::Index>(q)) = std::log(std::max(initial.per_triangle_value[t], floor));
    }
    const Eigen::MatrixXd& A = ctx.node_design();
    Eigen::MatrixXd normal = A.transpose() * A;
    normal += lambda_init * ctx.penalty();
    const Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) throw SingularSystem("initial least-squares system is not positive definite");
    Eigen::VectorXd theta = llt.solve(A.transpose() * y);
    if (!theta.allFinite()) throw SingularSystem("initial least-squares solution is not finite");
    return theta;
}

// ---------------------------------------------------------------------------
// Objective

PenalizedLikelihood::PenalizedLikelihood(const FitContext& ctx, Eigen::VectorXd data_mean_row, double lambda)
    : ctx_(&ctx), data_mean_(std::move(data_mean_row)), lambda_(lambda)
{
    if (data_mean_.size() != ctx.dimension()) throw InvalidArgument("data term has the wrong dimension");
    if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
}

double PenalizedLikelihood::value(const Eigen::VectorXd& theta) const
{
    const Eigen::VectorXd eta = ctx_->node_design() * theta;
    if (!(eta.maxCoeff() <= kMaxExponent)) return std::numeric_limits<double>::infinity();
    const double unity = ctx_->node_weights().dot(eta.array().exp().matrix());
    return -data_mean_.dot(theta) + unity + lambda_ * theta.dot(ctx_->penalty() * theta);
}

Eigen::VectorXd PenalizedLikelihood::gradient(const Eigen::VectorXd& theta) const
{
    const Eigen::VectorXd eta = ctx_->node_design() * theta;
    const Eigen::VectorXd we = ctx_->node_weights().cwiseProduct(eta.array().exp().matrix());
    return -data_mean_ + ctx_->node_design().transpose() * we + 2.0 * lambda_ * (ctx_->penalty() * theta);
}

Eigen::MatrixXd PenalizedLikelihood::hessian(const Eigen::VectorXd& theta) const
{
    const Eigen::VectorXd eta = ctx_->node_design() * theta;
    const Eigen::VectorXd root = ctx_->node_weights().cwiseProduct(eta.array().exp().matrix()).cwiseSqrt();
    const Eigen::MatrixXd scaled = root.asDiagonal() * ctx_->node_design();
    Eigen::MatrixXd h = scaled.transpose() * scaled;
    h += 2.0 * lambda_ * ctx_->penalty();
    return h;
}

// ---------------------------------------------------------------------------
// Fitting

double DensityFit::integral_before_renormalization() const { return std::exp(log_norm_const); }

DensityFit minimize(const PenalizedLikelihood& objective, Eigen::VectorXd theta0, const FitConfig& config)
{
    constexpr double kArmijo = 1e-4;
    constexpr double kShrink = 0.5;
    constexpr int kMaxHalvings = 60;

    DensityFit out;
    out.lambda = objective.lambda();
    Eigen::VectorXd theta = std::move(theta0);
    double f = objective.value(theta);
    if (!std::isfinite(f)) {
        // Start from the constant-zero log-density when the seed overflows.
        theta.setZero();
        f = objective.value(theta);
    }
    out.objective_trace.push_back(f);
    out.stop_reason = "max_iters";

    Eigen::VectorXd g = objective.gradient(theta);
    for (int it = 0; it < config.max_iters; ++it) {
        if (g.lpNorm<Eigen::Infinity>() <= config.grad_tol) {
            out.converged = true;
            out.stop_reason = "gradient";
            break;
        }
        Eigen::VectorXd p;
        const Eigen::LLT<Eigen::MatrixXd> llt(objective.hessian(theta));
        if (llt.info() == Eigen::Success) p = -llt.solve(g);
        if (p.size() == 0 || !p.allFinite() || g.dot(p) >= 0.0) {
            p = -g;
            ++out.gradient_fallbacks;
        }
        const double slope = g.dot(p);
        double alpha = 1.0;
        double f_new = f;
        Eigen::VectorXd theta_new;
        bool accepted = false;
        for (int h = 0; h < kMaxHalvings; ++h, alpha *= kShrink) {
            theta_new = theta + alpha * p;
            f_new = objective.value(theta_new);
            if (std::isfinite(f_new) && f_new <= f + kArmijo * alpha * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted || !(f_new < f)) {
            out.stop_reason = "line_search";
            break;
        }
        const double step = (alpha * p).lpNorm<Eigen::Infinity>();
        const double decrease = f - f_new;
        theta = std::move(theta_new);
        f = f_new;
        g = objective.gradient(theta);
        out.objective_trace.push_back(f);
        ++out.iterations;
        if (g.lpNorm<Eigen::Infinity>() <= config.grad_tol) {
            out.converged = true;
            out.stop_reason = "gradient";
            break;
        }
        if (decrease <= config.obj_tol) {
            out.converged = true;
            out.stop_reason = "objective";
            break;
        }
        if (step <= config.step_tol) {
            out.converged = true;
            out.stop_reason = "step";
            break;
        }
    }
    out.gradient_sup_norm = g.lpNorm<Eigen::Infinity>();
    out.theta = std::move(theta);
    return out;
}

namespace {

void finish_fit(const FitContext& ctx, DensityFit& fit)
{
    fit.gamma = ctx.constraints().Q2 * fit.theta;
    const Eigen::VectorXd eta = ctx.node_design() * fit.theta;
    // log of sum w exp(eta), shifted for overflow safety.
    const double shift = eta.maxCoeff();
    const double s = ctx.node_weights().dot((eta.array() - shift).exp().matrix());
    fit.log_norm_const = shift + std::log(s);
}

} // namespace

DensityFit fit(const FitContext& ctx, const LocatedData& data, const FitConfig& config,
               std::span<const std::size_t> subset)
{
    std::vector<std::size_t> all;
    if (subset.empty()) {
        all.resize(data.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        subset = all;
    }
    if (subset.empty()) throw InvalidArgument("fit needs at least one data point");

    Eigen::VectorXd mean_row = Eigen::VectorXd::Zero(ctx.dimension());
    std::vector<std::size_t> init_tri;
    init_tri.reserve(subset.size());
    for (auto i : subset) {
        mean_row += data.design.row(static_cast<Eigen::Index>(i)).transpose();
        init_tri.push_back(data.initial_triangle[i]);
    }
    mean_row /= static_cast<double>(subset.size());

    const Triangulation& imesh = ctx.initial_mesh();
    const double per_triangle = static_cast<double>(subset.size()) / static_cast<double>(imesh.size());
    const InitialDensity initial = per_triangle < config.lss_threshold ? initial_lss(imesh, init_tri)
                                                                       : initial_histogram(imesh, init_tri);
    Eigen::VectorXd theta0 = init_theta(ctx, initial, config.lambda_init);

    const PenalizedLikelihood objective(ctx, std::move(mean_row), config.lambda);
    DensityFit result = minimize(objective, std::move(theta0), config);
    result.initial_variant = initial.variant;
    finish_fit(ctx, result);
    return result;
}

DensityFit fit(const FitContext& ctx, std::span<const Point2> points, const FitConfig& config)
{
    const LocatedData data = locate_data(ctx, points);
    return fit(ctx, data, config);
}

DensityValues eval_density(const FitContext& ctx, const DensityFit& fit, std::span<const Point2> points)
{
    DensityValues out;
    out.values.assign(points.size(), 0.0);
    out.inside.assign(points.size(), false);
    const int dim = ctx.spec().per_triangle_dim();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto t = ctx.mesh().locate(points[i]);
        if (!t) continue;
        const auto vals = local_eval(ctx.spec().degree, barycentric(ctx.mesh().geometry(*t), points[i]));
        double g = 0.0;
        for (int a = 0; a < dim; ++a) g += vals[a] * fit.gamma(static_cast<Eigen::Index>(*t * dim + a));
        out.values[i] = std::exp(g - fit.log_norm_const);
        out.inside[i] = true;
    }
    return out;
}

Eigen::VectorXd density_at_rows(const DensityFit& fit, const Eigen::MatrixXd& design)
{
    return ((design * fit.theta).array() - fit.log_norm_const).exp().matrix();
}

double integral_of_square(const FitContext& ctx, const DensityFit& fit)
{
    const Eigen::VectorXd f = density_at_rows(fit, ctx.node_design());
    return ctx.node_weights().dot(f.cwiseProduct(f));
}

} // namespace bpst
