#pragma once

#include <vector>

#include <Eigen/Dense>

#include "runpred/table.hpp"

namespace runpred {

// Rank-r component model: log t(athlete, s) = sum_i lambda_i f_i(s).
// Components are the right singular vectors (unit norm, mutually orthogonal)
// with a deterministic sign convention; coefficients are the corresponding
// left-singular-vector entries, scaled by the singular values by default so
// the reconstruction is exact.
struct ComponentModel {
    EventCatalog catalog;
    Eigen::MatrixXd components;      // r x n_events, row i = f_i
    Eigen::VectorXd singular_values; // length r
    Eigen::MatrixXd coefficients;    // n_athletes x r
    bool scale_in_coefficients = true;
    Parameterization parameterization = Parameterization::log_time;
};

struct ThreeNumberSummary {
    double lambda1 = 0.0;  // individual-exponent proxy
    double lambda2 = 0.0;  // speed vs endurance balance
    double lambda3 = 0.0;  // middle-distance specialization
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct WorldRecordFit {
    Eigen::VectorXd coefficients;  // length r
    Eigen::VectorXd fitted;        // per event
    Eigen::VectorXd residuals;     // per event
    double residual_norm = 0.0;
};

// SVD of a complete table. `scale_in_coefficients` folds the singular values
// into the coefficients (lambda = U*S) so the reconstruction is exact; the
// pure-U variant is kept for comparisons.
ComponentModel extract_components(const PerformanceTable& table, int r,
                                  bool scale_in_coefficients = true);

// OLS of f_1 against log-distance; R^2 near one indicates the individual
// power law.
LinearFit individual_exponent_diagnostic(const Eigen::VectorXd& f1, const EventCatalog& catalog);

// Least squares fit of a log-time world-record vector on the first r
// components.
WorldRecordFit fit_world_records(const Eigen::VectorXd& wr_log_times, const ComponentModel& model,
                                 int r);

ThreeNumberSummary three_number_summary(const ComponentModel& model, std::size_t athlete_row);

// lambda_1 rescaled to power-law-exponent units via the slope of f_1 against
// log-distance.
double individual_exponent(const ComponentModel& model, std::size_t athlete_row);

}  // namespace runpred
