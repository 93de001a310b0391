#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "runpred/table.hpp"

namespace runpred {

// Mean of the column's present entries, excluding the query row.
double predict_mean(const PerformanceTable& table, std::size_t row, std::size_t col);

// Mean of the target entries of the k nearest athletes. Similarity is the
// root mean square difference over commonly present events after dividing
// each column by its mean present value.
double predict_knn(const PerformanceTable& table, std::size_t row, std::size_t col, int k);

// t2 = t1 * (d2/d1)^1.06
double predict_riegel(double source_dist, double source_time, double target_dist);

struct PowerLawFit {
    bool per_athlete = false;
    double shared_exponent = 0.0;                  // global fit
    std::vector<std::optional<double>> exponents;  // individual fit only
    std::vector<std::optional<double>> log_coeff;  // log c per athlete
    double rss = 0.0;
};

// Least squares on log t = log c + alpha * log s over a table in time
// parameterization. The global fit shares the exponent across athletes with
// per-athlete intercepts profiled out in closed form.
PowerLawFit fit_power_law(const PerformanceTable& table, bool per_athlete);

// Prediction at `col` for `row` from a fit (time parameterization).
double predict_power_law(const PerformanceTable& table, std::size_t row, std::size_t col,
                         bool per_athlete);

struct EmResult {
    PerformanceTable table;
    std::vector<double> loglik;  // observed-data log-likelihood per iteration
    int iterations = 0;
    bool converged = false;
};

// Multivariate-Gaussian EM imputation. Missing entries start at the column
// means; iteration stops when the relative log-likelihood increase drops
// below rel_tol (0.1% by default) or at the iteration cap. Near-singular
// covariances are ridge-regularized by 1e-8 * trace/dim.
EmResult em_impute(const PerformanceTable& table, double rel_tol = 1e-3, int max_iter = 500);

struct SoftImputeResult {
    PerformanceTable table;
    std::vector<double> objective;  // 0.5*||P_obs(X - M)||^2 + lambda*||X||_*
    bool converged = false;
    double lambda = 0.0;
};

// Nuclear-norm-regularized completion by iterative singular-value
// soft-thresholding on the column-centered matrix. When lambda is not given
// it is chosen by 5-fold cross-validation over the observed entries on a
// logarithmic grid.
SoftImputeResult nuclear_norm_impute(const PerformanceTable& table,
                                     std::optional<double> lambda = std::nullopt,
                                     double rel_tol = 1e-6, int max_iter = 500,
                                     std::uint64_t seed = 0);

double select_nuclear_lambda(const PerformanceTable& table, std::uint64_t seed = 0);

}  // namespace runpred
