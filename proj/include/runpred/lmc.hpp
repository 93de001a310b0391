#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "runpred/table.hpp"

namespace runpred {

enum class EventSelection { log_closest, bagged };

struct LmcConfig {
    int rank = 3;            // supported 1..4
    int n_circuits = 400;
    double degeneracy_tol = 1e-12;  // relative to the circuit minor's scale
    std::uint64_t seed = 0;
    EventSelection event_selection = EventSelection::log_closest;
};

struct CircuitSolution {
    double estimate = 0.0;
    double weight = 0.0;
};

// Solves det(A) = 0 for the single unknown entry at (miss_row, miss_col).
// The determinant is affine in the unknown; with A0 (unknown := 0) and A1
// (unknown := 1) the root is det A0 / (det A0 - det A1) and the weight is
// 1/|det A0 + det A1| + |det A0| / (det A0 - det A1)^2.
// Returns nullopt when the denominator is below tol times the scale of the
// complementary minor (degenerate sample: linearly dependent rows).
std::optional<CircuitSolution> solve_circuit(const Eigen::MatrixXd& a, int miss_row, int miss_col,
                                             double tol = 1e-12);

struct LmcOutcome {
    double estimate = 0.0;
    int rank_used = 0;               // 0 means column-mean fallback
    bool column_mean_fallback = false;
    int circuits_accepted = 0;
};

// Local matrix completion of one entry: restrict to the query athlete's rank
// log-closest events, sample circuits over donor rows complete on those
// columns, and average the circuit roots with variance-derived weights.
// Falls back to lower ranks when donor support is insufficient, and to the
// column mean as a last resort. Throws DataError if the athlete has no other
// present event.
LmcOutcome lmc_predict_detailed(const PerformanceTable& table, std::size_t row, std::size_t col,
                                const LmcConfig& config);

double lmc_predict(const PerformanceTable& table, std::size_t row, std::size_t col,
                   const LmcConfig& config);

// Bagged variant: runs the fixed-subset predictor over every size-r subset of
// the athlete's present events and combines the answers with weights from
// 5-fold cross-validation on the donor rows.
double lmc_predict_bagged(const PerformanceTable& table, std::size_t row, std::size_t col,
                          const LmcConfig& config);

struct ImputedEntry {
    std::size_t row = 0;
    std::size_t col = 0;
    int rank_used = 0;
    bool column_mean_fallback = false;
};

struct ImputeReport {
    std::vector<ImputedEntry> entries;
    std::size_t n_imputed = 0;
    std::size_t n_column_mean = 0;
    std::vector<std::size_t> imputed_per_rank;  // index = rank used
};

// Completes every missing entry. A first pass predicts at the configured
// rank from the original entries; a second pass retries failures against the
// augmented table before descending in rank and finally to column means.
std::pair<PerformanceTable, ImputeReport> impute_all(const PerformanceTable& table,
                                                     const LmcConfig& config, int threads = 1);

}  // namespace runpred
