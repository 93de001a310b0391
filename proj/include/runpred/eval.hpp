#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "runpred/predictors.hpp"
#include "runpred/table.hpp"

namespace runpred {

enum class LooMode { all_remaining, causal_past };

struct ValidationSpec {
    std::size_t n_holdouts = 1000;
    LooMode mode = LooMode::all_remaining;
    std::uint64_t seed = 0;
    int n_boot = 200;
    // Restrict holdout candidates to the fastest fraction of each column
    // (1.0 keeps everything; 0.95 drops the slowest five percent).
    double fastest_fraction = 1.0;
    int threads = 1;
};

struct Holdout {
    std::size_t row = 0;
    std::size_t col = 0;
};

struct HoldoutRecord {
    std::size_t row = 0;
    std::size_t col = 0;
    double truth = 0.0;       // in the table's parameterization
    double prediction = 0.0;
    bool skipped = false;
    std::string skip_reason;
};

struct EventMetrics {
    std::size_t col = 0;
    std::size_t n = 0;
    double rmse = 0.0;
    double mae = 0.0;
};

struct ValidationReport {
    std::string method;
    std::vector<HoldoutRecord> holdouts;
    std::size_t n_evaluated = 0;
    std::size_t n_skipped = 0;
    double rmse = 0.0, mae = 0.0;
    double rmse_se = 0.0, mae_se = 0.0;
    double rel_rmse = 0.0, rel_mae = 0.0;      // errors relative to true time
    double rel_rmse_se = 0.0, rel_mae_se = 0.0;
    std::vector<EventMetrics> per_event;
    std::uint64_t seed = 0;

    std::vector<double> residuals() const;  // prediction - truth, evaluated only
};

// Deterministic holdout sample: present entries, uniform without replacement.
std::vector<Holdout> sample_holdouts(const PerformanceTable& table, const ValidationSpec& spec);

ValidationReport loo_validate(const PerformanceTable& table, Predictor& predictor,
                              const ValidationSpec& spec);
ValidationReport loo_validate(const PerformanceTable& table, Predictor& predictor,
                              const ValidationSpec& spec, const std::vector<Holdout>& holdouts);

// rmse = sqrt(mean r^2), mae = mean |r|.
std::pair<double, double> metrics(const std::vector<double>& residuals);

// Errors divided by the true value before aggregating.
std::pair<double, double> relative_metrics(const std::vector<double>& predictions,
                                           const std::vector<double>& truths);

double bootstrap_se(const std::vector<double>& samples,
                    const std::function<double(const std::vector<double>&)>& statistic,
                    int n_boot, std::uint64_t seed);

struct WilcoxonResult {
    double statistic = 0.0;  // W+ with Pratt zero handling and mid-rank ties
    double p_value = 1.0;    // two-sided
    std::size_t n_nonzero = 0;
};

// Exact null distribution (dynamic program over sign assignments) up to 25
// non-missing pairs, normal approximation with tie correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

struct MethodCell {
    std::string method;
    ValidationReport report;
    double p_vs_reference = 1.0;
    std::size_t paired_n = 0;
};

struct MethodComparison {
    std::vector<Holdout> holdouts;  // shared across methods
    std::vector<MethodCell> cells;
    std::size_t reference = 0;
};

// Paired comparison: every method sees the identical holdout list; holdouts
// skipped by either side of a pair are excluded from that pair's test.
MethodComparison compare_methods(const PerformanceTable& table,
                                 const std::vector<Predictor*>& predictors,
                                 const ValidationSpec& spec, std::size_t reference = 0);

}  // namespace runpred
