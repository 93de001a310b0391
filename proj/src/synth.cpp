#include "runpred/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "runpred/rng.hpp"

namespace runpred {

SynthSpec default_synth_spec(std::size_t n_athletes, double noise_std, std::uint64_t seed) {
    SynthSpec spec;
    spec.n_athletes = n_athletes;
    spec.noise_std = noise_std;
    spec.seed = seed;

    const auto d = static_cast<Eigen::Index>(spec.catalog.size());
    Eigen::VectorXd log_dist(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        log_dist(j) = std::log(spec.catalog.distance(static_cast<std::size_t>(j)));
    }

    Eigen::VectorXd f1 = log_dist.normalized();

    // Sign change near 800m; the width keeps curvature moderate so local
    // 3-point solves stay reasonably conditioned.
    Eigen::VectorXd f2(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        f2(j) = std::tanh((log_dist(j) - std::log(800.0)) / 1.2);
    }
    f2 -= f1 * f1.dot(f2);
    f2.normalize();

    // Middle-distance extremum, positive towards the extremes.
    Eigen::VectorXd f3(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double u = (log_dist(j) - std::log(1500.0)) / 2.0;
        f3(j) = u * u;
    }
    f3 -= f1 * f1.dot(f3);
    f3 -= f2 * f2.dot(f3);
    f3.normalize();
    if (f3(d - 1) < 0.0) f3 = -f3;

    spec.components.resize(3, d);
    spec.components.row(0) = f1.transpose();
    spec.components.row(1) = f2.transpose();
    spec.components.row(2) = f3.transpose();

    // exponent = lambda1 / ||log s||; target median 1.12, 5th-95th 1.10-1.15.
    const double log_norm = log_dist.norm();
    spec.coeff_mean.resize(3);
    spec.coeff_std.resize(3);
    spec.coeff_mean << 1.12 * log_norm, 0.0, 0.0;
    spec.coeff_std << (0.05 / 3.29) * log_norm, 0.20, 0.08;
    return spec;
}

SynthResult generate(const SynthSpec& spec) {
    const auto r = spec.components.rows();
    const auto d = static_cast<Eigen::Index>(spec.catalog.size());
    if (spec.components.cols() != d) throw DataError("generate: components do not match catalog");
    if (spec.coeff_mean.size() != r || spec.coeff_std.size() != r) {
        throw DataError("generate: coefficient moments do not match component count");
    }
    if (spec.noise_std < 0.0) throw DataError("generate: negative noise std");

    PerformanceTable table(spec.catalog, spec.n_athletes);
    table.set_parameterization(Parameterization::log_time);
    Eigen::MatrixXd lambdas(static_cast<Eigen::Index>(spec.n_athletes), r);

    for (std::size_t row = 0; row < spec.n_athletes; ++row) {
        auto rng = make_rng(derive_seed(spec.seed, hash_tag("synth_row"), row));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd lambda(r);
        for (Eigen::Index i = 0; i < r; ++i) {
            lambda(i) = spec.coeff_mean(i) + spec.coeff_std(i) * gauss(rng);
        }
        lambdas.row(static_cast<Eigen::Index>(row)) = lambda.transpose();
        Eigen::VectorXd entries = spec.components.transpose() * lambda;
        for (Eigen::Index j = 0; j < d; ++j) {
            double v = entries(j);
            if (spec.noise_std > 0.0) v += spec.noise_std * gauss(rng);
            table.set(row, static_cast<std::size_t>(j), v);
        }
        table.meta(row).id = static_cast<std::int64_t>(row + 1);
    }
    return SynthResult{std::move(table), std::move(lambdas)};
}

PerformanceTable apply_missingness(const PerformanceTable& table, MissingScheme scheme,
                                   std::size_t k, std::uint64_t seed) {
    const std::size_t d = table.cols();
    if (k > d) throw DataError("apply_missingness: k exceeds the number of events");

    PerformanceTable out = table;
    for (std::size_t row = 0; row < table.rows(); ++row) {
        auto rng = make_rng(derive_seed(seed, hash_tag("missing_row"), row));
        if (scheme == MissingScheme::uniform_k) {
            // Remove exactly k positions per row.
            std::vector<std::size_t> cols(d);
            std::iota(cols.begin(), cols.end(), 0);
            std::shuffle(cols.begin(), cols.end(), rng);
            for (std::size_t i = 0; i < k; ++i) out.clear(row, cols[i]);
        } else {
            // Keep a window of k consecutive events.
            if (k == d) continue;
            std::uniform_int_distribution<std::size_t> start(0, d - k);
            const std::size_t lo = start(rng);
            for (std::size_t c = 0; c < d; ++c) {
                if (c < lo || c >= lo + k) out.clear(row, c);
            }
        }
    }
    return out;
}

PerformanceTable replicate_pattern(const PerformanceTable& pattern_template,
                                   const PerformanceTable& target) {
    if (pattern_template.rows() != target.rows() || pattern_template.cols() != target.cols()) {
        throw DataError("replicate_pattern: dimension mismatch");
    }
    PerformanceTable out = target;
    for (std::size_t r = 0; r < target.rows(); ++r) {
        for (std::size_t c = 0; c < target.cols(); ++c) {
            if (!pattern_template.present(r, c)) out.clear(r, c);
        }
    }
    return out;
}

}  // namespace runpred
