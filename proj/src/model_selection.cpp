#include "bpst/model_selection.hpp"

#include "bpst/errors.hpp"
#include "bpst/parallel.hpp"
#include "bpst/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace bpst {

std::vector<int> assign_folds(std::size_t n, int folds, std::uint64_t seed)
{
    if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
    if (n < static_cast<std::size_t>(folds)) throw InvalidArgument("fewer points than folds");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);
    std::vector<int> fold_of(n);
    const std::size_t k = static_cast<std::size_t>(folds);
    const std::size_t base = n / k, extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        for (std::size_t j = 0; j < len; ++j) fold_of[perm[pos++]] = static_cast<int>(f);
    }
    return fold_of;
}

double cv_term(double integral_of_square, std::span<const double> test_values)
{
    if (test_values.empty()) throw InvalidArgument("empty test fold");
    double s = 0.0;
    for (double v : test_values) s += v;
    return integral_of_square - 2.0 * s / static_cast<double>(test_values.size());
}

double cv_average(int folds, const std::function<double(int)>& fold_term, std::vector<int>* failed)
{
    double sum = 0.0;
    int ok = 0;
    for (int k = 0; k < folds; ++k) {
        const double t = fold_term(k);
        if (std::isfinite(t)) {
            sum += t;
            ++ok;
        } else if (failed) {
            failed->push_back(k);
        }
    }
    return ok == 0 ? std::numeric_limits<double>::infinity() : sum / ok;
}

std::vector<double> log_grid(double lo, double hi, int count)
{
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("invalid log grid");
    std::vector<double> g(static_cast<std::size_t>(count));
    if (count == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> default_lambda_grid() { return log_grid(1e-6, 1.0, 9); }

namespace {

// Term of fold k for one lambda, NaN if the training fit failed.
double fold_term(const FitContext& ctx, const LocatedData& data, const FitConfig& config,
                 std::span<const int> fold_of, int k)
{
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == k ? test : train).push_back(i);
    if (train.empty() || test.empty()) return std::numeric_limits<double>::quiet_NaN();
    try {
        const DensityFit f = fit(ctx, data, config, train);
        if (!f.converged || !std::isfinite(f.log_norm_const)) return std::numeric_limits<double>::quiet_NaN();
        std::vector<double> vals(test.size());
        for (std::size_t j = 0; j < test.size(); ++j) {
            const double eta = data.design.row(static_cast<Eigen::Index>(test[j])).dot(f.theta);
            vals[j] = std::exp(eta - f.log_norm_const);
        }
        const double t = cv_term(integral_of_square(ctx, f), vals);
        return std::isfinite(t) ? t : std::numeric_limits<double>::quiet_NaN();
    } catch (const SingularSystem&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

} // namespace

CvCell cv_error(const FitContext& ctx, const LocatedData& data, const FitConfig& config,
                std::span<const int> fold_of, int folds, int threads)
{
    if (fold_of.size() != data.size()) throw InvalidArgument("fold assignment does not match the data");
    std::vector<double> terms(static_cast<std::size_t>(folds));
    parallel_for(terms.size(), threads,
                 [&](std::size_t k) { terms[k] = fold_term(ctx, data, config, fold_of, static_cast<int>(k)); });
    CvCell cell;
    cell.lambda = config.lambda;
    cell.cv_error = cv_average(folds, [&](int k) { return terms[static_cast<std::size_t>(k)]; }, &cell.failed_folds);
    cell.all_failed = static_cast<int>(cell.failed_folds.size()) == folds;
    return cell;
}

double cv_error(const FitContext& ctx, const LocatedData& data, const FitConfig& config, int folds,
                std::uint64_t seed)
{
    const auto fold_of = assign_folds(data.size(), folds, seed);
    return cv_error(ctx, data, config, fold_of, folds).cv_error;
}

CvReport select_lambda(const FitContext& ctx, const LocatedData& data, const FitConfig& base_config,
                       std::span<const double> lambda_grid, const CvOptions& options)
{
    if (lambda_grid.empty()) throw InvalidArgument("empty lambda grid");
    for (double l : lambda_grid)
        if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("lambda grid values must be finite and >= 0");

    CvReport rep;
    rep.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
    rep.seed = options.seed;
    rep.folds = options.folds;
    rep.fold_assignments = assign_folds(data.size(), options.folds, options.seed);

    const std::size_t cells = lambda_grid.size();
    const std::size_t k = static_cast<std::size_t>(options.folds);
    std::vector<double> terms(cells * k);
    parallel_for(cells * k, options.threads, [&](std::size_t job) {
        FitConfig cfg = base_config;
        cfg.lambda = lambda_grid[job / k];
        terms[job] = fold_term(ctx, data, cfg, rep.fold_assignments, static_cast<int>(job % k));
    });

    rep.cv_errors.resize(cells);
    rep.failed_folds.resize(cells);
    rep.all_failed.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        rep.cv_errors[c] = cv_average(options.folds, [&](int f) { return terms[c * k + static_cast<std::size_t>(f)]; },
                                      &rep.failed_folds[c]);
        rep.all_failed[c] = rep.failed_folds[c].size() == k;
    }

    bool found = false;
    for (std::size_t c = 0; c < cells; ++c) {
        if (rep.all_failed[c]) continue;
        const double e = rep.cv_errors[c];
        const double best = found ? rep.cv_errors[rep.best_index] : 0.0;
        if (!found || e < best || (e == best && lambda_grid[c] > lambda_grid[rep.best_index])) {
            rep.best_index = c;
            found = true;
        }
    }
    if (!found) throw SingularSystem("every lambda in the grid failed on every fold");
    rep.best_lambda = lambda_grid[rep.best_index];
    return rep;
}

} // namespace bpst
