#pragma once

#include <cstdint>
#include <vector>

#include "runpred/lmc.hpp"
#include "runpred/predictors.hpp"
#include "runpred/table.hpp"

namespace runpred {

struct FairRaceResult {
    double distance_m = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t shorter_event = 0;  // catalog indices bracketing the crossing
    std::size_t longer_event = 0;
    bool multiple_crossings = false;
    std::size_t bootstrap_samples = 0;
};

// Fair racing distance between two athletes: predict both performance curves
// at every event, locate the shortest sign change, and interpolate log-time
// against log-distance on the bracketing segment. Confidence bounds come
// from re-running the procedure on bootstrap resamples of the donor rows
// (the two athletes stay fixed). Symmetric in the two athletes.
FairRaceResult fair_race(const PerformanceTable& table, std::size_t athlete_a,
                         std::size_t athlete_b, Predictor& predictor, int n_boot,
                         std::uint64_t seed = 0);

struct PivotTriple {
    std::size_t lower = 0;   // catalog indices
    std::size_t pivot = 0;
    std::size_t upper = 0;
    std::vector<double> rel_change;  // per epsilon, (perturbed - base)/base in time
};

struct PivotResult {
    std::vector<double> epsilons;
    std::vector<double> benchmark_log_times;  // equivalent performances per event
    std::vector<PivotTriple> triples;
};

// Builds marathon-anchored equivalent performances by chaining rank-1 LMC in
// log-time down the catalog, then measures how perturbing the shorter leg of
// each consecutive triple (Mile excluded) moves the rank-2 prediction of the
// longer leg.
PivotResult pivot_experiment(const PerformanceTable& log_time_table, double marathon_seconds,
                             const LmcConfig& config);

struct OptimalDistanceResult {
    std::size_t best_event = 0;
    std::vector<double> percentile_per_event;
    std::vector<double> predicted_value;  // table parameterization
};

// Predicted percentile profile of one athlete over all events; the best event
// is the argmax (ties prefer the shorter distance).
OptimalDistanceResult optimal_distance(const PerformanceTable& table, std::size_t athlete,
                                       Predictor& predictor);

}  // namespace runpred
