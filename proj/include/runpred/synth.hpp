#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "runpred/table.hpp"

namespace runpred {

// Synthetic population: per athlete, coefficients are independent Gaussians
// and entries are sum_i lambda_i f_i(s) plus white noise, in log-time.
struct SynthSpec {
    std::size_t n_athletes = 1000;
    EventCatalog catalog = EventCatalog::standard();
    Eigen::MatrixXd components;   // r x n_events, orthonormal rows
    Eigen::VectorXd coeff_mean;   // length r
    Eigen::VectorXd coeff_std;    // length r
    double noise_std = 0.0;       // log-time units
    std::uint64_t seed = 0;
};

// Reference component shapes: f1 is normalized log-distance, f2 changes sign
// near 800m, f3 has a middle-distance extremum; f2 and f3 are orthonormalized
// against the earlier components. Coefficient moments are set so the implied
// exponent distribution has median about 1.12 with a 1.10-1.15 central band.
SynthSpec default_synth_spec(std::size_t n_athletes, double noise_std, std::uint64_t seed);

struct SynthResult {
    PerformanceTable table;       // complete, log_time
    Eigen::MatrixXd coefficients; // n_athletes x r, the drawn lambdas
};

SynthResult generate(const SynthSpec& spec);

enum class MissingScheme { uniform_k, consecutive_k };

// uniform_k: exactly k entries per row removed uniformly at random.
// consecutive_k: a uniformly placed window of k consecutive events is kept,
// everything else removed.
PerformanceTable apply_missingness(const PerformanceTable& table, MissingScheme scheme,
                                   std::size_t k, std::uint64_t seed);

// Copies the template's missingness mask onto `target` (same dimensions).
PerformanceTable replicate_pattern(const PerformanceTable& pattern_template,
                                   const PerformanceTable& target);

}  // namespace runpred
