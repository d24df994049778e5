#pragma once

#include "bpst/estimator.hpp"
#include "bpst/geometry.hpp"
#include "bpst/model_selection.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bpst {

struct GaussComponent {
    Point2 mean;
    Eigen::Matrix2d cov;
    double weight = 1.0;
};

struct SkewNormalComponent {
    Point2 xi;
    Eigen::Matrix2d omega;
    Eigen::Vector2d alpha;
    double tau = 0.0;
    double weight = 1.0;
};

/// Bivariate normal density (unweighted).
double gauss_pdf(const GaussComponent& c, const Point2& p);

/// 2 phi_2(u - xi; Omega) Phi(alpha' w^{-1} (u - xi)), w = sqrt(diag Omega).
/// Only tau = 0 is supported.
double skew_normal_pdf(const SkewNormalComponent& c, const Point2& p);

/// Horseshoe ridge function on the U-shaped domain: arc-length position
/// along the spine plus squared distance from it.
///   x >= 0, y > 0:  (q + x) + (y - r)^2
///   x >= 0, y <= 0: (-q - x) + (-y - r)^2
///   x < 0:          -r atan(y/x) + (sqrt(x^2 + y^2) - r)^2
/// with r = 0.5, q = pi r / 2.
double horseshoe_function(double x, double y);

/// The lower arm (x >= 0, y < 0), where the shifted horseshoe density is smallest.
bool in_low_density_arm(const Point2& p);

/// A benchmark density truncated to a triangulated domain.
struct Scenario {
    std::string name;
    std::shared_ptr<const Triangulation> mesh;         // fitting mesh; also the domain
    std::shared_ptr<const Triangulation> initial_mesh; // finer mesh for the initial histogram
    std::function<double(const Point2&)> unnormalized;
    double normalizer = 1.0;
    std::vector<GaussComponent> gaussians;
    std::optional<SkewNormalComponent> skew;

    /// Normalized density; zero outside the domain.
    double density(const Point2& p) const;
    /// Normalized formula without the domain test.
    double density_unchecked(const Point2& p) const { return unnormalized(p) / normalizer; }
};

/// Directory of the bundled meshes; BPST_ASSET_DIR in the environment overrides the build-time path.
std::filesystem::path asset_dir();
std::shared_ptr<const Triangulation> load_bundled_mesh(const std::string& name);

Scenario scenario_sim1();
Scenario scenario_sim2();
Scenario scenario_sim3();
/// "sim1", "sim2" or "sim3"; InvalidArgument otherwise.
Scenario scenario_by_name(const std::string& name);

/// Integral over the domain with a degree-15 conical rule on the finer mesh.
double integrate_over_domain(const Scenario& s, const std::function<double(const Point2&)>& f);

/// Rejection sampling from a uniform proposal on the bounding box.
struct SampleStats {
    double envelope = 0.0;
    int envelope_rebuilds = 0;
    std::uint64_t proposals = 0;
};
std::vector<Point2> sample(const Scenario& s, std::size_t n, std::uint64_t seed, SampleStats* stats = nullptr);

/// Cell-centre grid over the domain's bounding box; only centres inside the
/// domain are kept, in row-major order (x fastest).
struct EvalGrid {
    BoundingBox box;
    int nx = 0, ny = 0;
    double cell_area = 0.0;
    std::vector<Point2> points; // in-domain centres
};
EvalGrid make_eval_grid(const Triangulation& tr, int resolution);

/// Riemann sum of (estimate - truth)^2 over the grid cells.
double mise(const EvalGrid& grid, std::span<const double> estimate, std::span<const double> truth);

/// Riemann sum of `values` over the cells whose centres satisfy `region`.
double region_mass(const EvalGrid& grid, std::span<const double> values,
                   const std::function<bool(const Point2&)>& region);

std::vector<double> evaluate_on(const EvalGrid& grid, const std::function<double(const Point2&)>& f);

/// Gaussian kernel estimate with a full bandwidth matrix H (the kernel covariance).
/// Not domain-aware: the mass integrates to one over the whole plane.
class GaussianKde {
public:
    GaussianKde(std::vector<Point2> data, const Eigen::Matrix2d& H);
    double operator()(const Point2& p) const;
    const Eigen::Matrix2d& bandwidth() const { return H_; }

private:
    std::vector<Point2> data_;
    Eigen::Matrix2d H_;
    Eigen::Matrix2d Hinv_;
    double norm_ = 0.0;
};

/// 27 candidates around the normal-reference bandwidth n^{-1/3} S: per-axis
/// standard-deviation multipliers {1/2, 1, 2} along the sample principal
/// axes, each rotated by {-pi/8, 0, pi/8}. Throws SingularBandwidth when the
/// sample covariance is not positive definite.
std::vector<Eigen::Matrix2d> kde_bandwidth_grid(std::span<const Point2> data);

/// CV criterion for a KDE; the squared-density integral is taken over the
/// plane in closed form.
double kde_cv_error(std::span<const Point2> data, const Eigen::Matrix2d& H, std::span<const int> fold_of, int folds);

struct KdeSelection {
    std::vector<Eigen::Matrix2d> grid;
    std::vector<double> cv_errors;
    std::size_t best_index = 0;
    Eigen::Matrix2d H;
};
KdeSelection select_kde_bandwidth(std::span<const Point2> data, int folds, std::uint64_t seed, int threads = 1);

struct BenchmarkConfig {
    std::size_t n = 200;
    int reps = 20;
    std::vector<std::string> methods{"bpst", "kde"};
    std::uint64_t seed = 1;
    int threads = 1;
    int grid_resolution = 200;
    int folds = 10;     // BPST lambda selection
    int kde_folds = 5;  // KDE bandwidth selection
    std::vector<double> lambda_grid = default_lambda_grid();
    SplineSpec spec{};
};

/// Result of one method on one replication.
struct MethodOutcome {
    std::string method;
    bool ok = false;
    std::string error;
    double mise = 0.0;
    double low_arm_mass = 0.0;    // only meaningful on the horseshoe
    double lambda = 0.0;          // bpst
    bool converged = false;       // bpst
    Eigen::Matrix2d bandwidth = Eigen::Matrix2d::Zero(); // kde
    std::vector<double> grid_values; // estimate on the evaluation grid
};

struct Replication {
    int index = 0;
    std::uint64_t seed = 0;
    std::vector<MethodOutcome> outcomes; // in config.methods order
};

struct MiseResult {
    std::string method;
    std::vector<double> per_replication; // NaN for failed replications
    double mean = 0.0;
    double sd = 0.0;
    bool sd_defined = false;
    int failures = 0;
};

struct BenchmarkReport {
    std::string scenario;
    BenchmarkConfig config;
    std::vector<Replication> replications;
    std::vector<MiseResult> results;
    std::vector<double> truth_on_grid;
    EvalGrid grid;
};

/// Samples, fits every requested method and scores it against the truth.
/// `keep_grid_values` retains each estimate on the evaluation grid.
Replication run_replication(const Scenario& s, const FitContext& ctx, const EvalGrid& grid,
                            std::span<const double> truth, const BenchmarkConfig& config, int rep,
                            bool keep_grid_values = false, int inner_threads = 1);

BenchmarkReport run_benchmark(const Scenario& s, const BenchmarkConfig& config, bool keep_grid_values = false);

MiseResult aggregate(const std::string& method, const std::vector<Replication>& reps, std::size_t method_index);

} // namespace bpst
