#pragma once

#include "bpst/estimator.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bpst {

/// Fold id (0..k-1) for each of n points: a seeded uniform permutation cut
/// into k contiguous chunks whose sizes differ by at most one.
std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed);

/// One fold term of the CV criterion: int fhat^2 - (2/|test|) sum_test fhat.
double cv_term(double integral_of_square, std::span<const double> test_values);

/// Average of the fold terms. `fold_term(k)` returns the term for fold k or
/// NaN when that fold could not be fitted; failed folds are skipped and
/// reported in `failed`. Returns +inf when every fold failed.
double cv_average(int folds, const std::function<double(int)>& fold_term, std::vector<int>* failed = nullptr);

struct CvOptions {
    int folds = 10;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct CvCell {
    double lambda = 0.0;
    double cv_error = 0.0;
    std::vector<int> failed_folds;
    bool all_failed = false;
};

struct CvReport {
    std::vector<double> lambda_grid;
    std::vector<double> cv_errors;
    double best_lambda = 0.0;
    std::size_t best_index = 0;
    std::vector<int> fold_assignments;
    std::uint64_t seed = 0;
    int folds = 0;
    std::vector<std::vector<int>> failed_folds; // per grid cell
    std::vector<bool> all_failed;               // per grid cell
};

/// 9 log-spaced values in [1e-6, 1].
std::vector<double> default_lambda_grid();

/// Log-spaced grid of `count` values in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int count);

/// CV error of one lambda using a fixed fold assignment.
CvCell cv_error(const FitContext& ctx, const LocatedData& data, const FitConfig& config,
                std::span<const int> fold_of, int folds, int threads = 1);

/// Convenience overload that draws the folds from `seed`.
double cv_error(const FitContext& ctx, const LocatedData& data, const FitConfig& config, int folds,
                std::uint64_t seed);

/// CV over the grid; ties go to the larger lambda. Throws InvalidArgument on
/// an empty grid and SingularSystem when every cell failed.
CvReport select_lambda(const FitContext& ctx, const LocatedData& data, const FitConfig& base_config,
                       std::span<const double> lambda_grid, const CvOptions& options);

} // namespace bpst
