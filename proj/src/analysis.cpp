#include "runpred/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "runpred/rng.hpp"

namespace runpred {

namespace {

// Log-time prediction curve for one athlete, each event predicted with the
// athlete's own entry hidden.
std::vector<double> predicted_log_curve(const PerformanceTable& table, std::size_t row,
                                        Predictor& predictor) {
    std::vector<double> curve(table.cols());
    for (std::size_t c = 0; c < table.cols(); ++c) {
        PerformanceTable masked = table;
        masked.clear(row, c);
        const double pred = predictor.predict(masked, row, c);
        curve[c] = std::log(entry_to_time(table, c, pred));
    }
    return curve;
}

struct Crossing {
    double log_distance = 0.0;
    std::size_t lo = 0, hi = 0;
    bool multiple = false;
};

// Shortest sign change of (curve_a - curve_b) with linear interpolation in
// (log distance, log time).
std::optional<Crossing> find_crossing(const std::vector<double>& curve_a,
                                      const std::vector<double>& curve_b,
                                      const EventCatalog& catalog) {
    const std::size_t d = curve_a.size();
    std::vector<double> diff(d);
    bool any_pos = false, any_neg = false;
    for (std::size_t j = 0; j < d; ++j) {
        diff[j] = curve_a[j] - curve_b[j];
        any_pos |= diff[j] > 0.0;
        any_neg |= diff[j] < 0.0;
    }
    if (!any_pos || !any_neg) return std::nullopt;

    std::optional<Crossing> first;
    std::size_t n_crossings = 0;
    for (std::size_t j = 0; j + 1 < d; ++j) {
        if (diff[j] == 0.0 || diff[j + 1] == 0.0) continue;
        if ((diff[j] > 0.0) == (diff[j + 1] > 0.0)) continue;
        ++n_crossings;
        if (!first) {
            const double x0 = std::log(catalog.distance(j));
            const double x1 = std::log(catalog.distance(j + 1));
            Crossing cr;
            cr.log_distance = x0 + diff[j] * (x1 - x0) / (diff[j] - diff[j + 1]);
            cr.lo = j;
            cr.hi = j + 1;
            first = cr;
        }
    }
    if (!first) return std::nullopt;
    first->multiple = n_crossings > 1;
    return first;
}

}  // namespace

FairRaceResult fair_race(const PerformanceTable& table, std::size_t athlete_a,
                         std::size_t athlete_b, Predictor& predictor, int n_boot,
                         std::uint64_t seed) {
    if (athlete_a == athlete_b) throw DataError("fair_race: need two distinct athletes");

    auto curve_a = predicted_log_curve(table, athlete_a, predictor);
    auto curve_b = predicted_log_curve(table, athlete_b, predictor);
    auto crossing = find_crossing(curve_a, curve_b, table.catalog());
    if (!crossing) throw DataError("no fair race exists");

    FairRaceResult result;
    result.distance_m = std::exp(crossing->log_distance);
    result.shorter_event = crossing->lo;
    result.longer_event = crossing->hi;
    result.multiple_crossings = crossing->multiple;

    // Bootstrap over donor rows; the two athletes stay fixed and are placed
    // in a label-independent order so the result is symmetric.
    std::vector<std::size_t> donors;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (r != athlete_a && r != athlete_b) donors.push_back(r);
    }
    const std::size_t lo_row = std::min(athlete_a, athlete_b);
    const std::size_t hi_row = std::max(athlete_a, athlete_b);
    const std::size_t pos_a = athlete_a == lo_row ? 0 : 1;
    const std::size_t pos_b = 1 - pos_a;

    std::vector<double> crossings;
    if (!donors.empty()) {
        for (int it = 0; it < n_boot; ++it) {
            auto rng = make_rng(derive_seed(seed, hash_tag("fair_race_boot"), static_cast<std::uint64_t>(it)));
            std::uniform_int_distribution<std::size_t> pick(0, donors.size() - 1);
            std::vector<std::size_t> rows = {lo_row, hi_row};
            for (std::size_t k = 0; k < donors.size(); ++k) rows.push_back(donors[pick(rng)]);
            PerformanceTable sample = table.select_rows(rows);
            try {
                auto ca = predicted_log_curve(sample, pos_a, predictor);
                auto cb = predicted_log_curve(sample, pos_b, predictor);
                auto cr = find_crossing(ca, cb, table.catalog());
                if (cr) crossings.push_back(std::exp(cr->log_distance));
            } catch (const DataError&) {
                // Resample without a usable crossing contributes nothing.
            }
        }
    }
    result.bootstrap_samples = crossings.size();
    if (crossings.size() >= 2) {
        std::sort(crossings.begin(), crossings.end());
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(crossings.size() - 1);
            const std::size_t i = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(i);
            if (i + 1 >= crossings.size()) return crossings.back();
            return crossings[i] * (1.0 - frac) + crossings[i + 1] * frac;
        };
        result.ci_low = quantile(0.05);
        result.ci_high = quantile(0.95);
    } else {
        result.ci_low = result.ci_high = result.distance_m;
    }
    // The interval always brackets the point estimate.
    result.ci_low = std::min(result.ci_low, result.distance_m);
    result.ci_high = std::max(result.ci_high, result.distance_m);
    return result;
}

PivotResult pivot_experiment(const PerformanceTable& log_time_table, double marathon_seconds,
                             const LmcConfig& config) {
    if (log_time_table.parameterization() != Parameterization::log_time) {
        throw DataError("pivot_experiment: table must be in log_time parameterization");
    }
    if (!(marathon_seconds > 0.0)) throw DataError("pivot_experiment: benchmark must be positive");
    const auto& catalog = log_time_table.catalog();
    const std::size_t d = catalog.size();

    PivotResult result;
    for (int e = -10; e <= 10; ++e) result.epsilons.push_back(static_cast<double>(e) / 100.0);

    // Equivalent performances: chain rank-1 predictions down from the
    // marathon, each step predicting the next shorter event from the last.
    std::vector<double> bench(d, 0.0);
    bench[d - 1] = std::log(marathon_seconds);
    for (std::size_t j = d - 1; j-- > 0;) {
        PerformanceTable t = log_time_table;
        const std::size_t virt = t.rows();
        PerformanceTable grown(t.catalog(), virt + 1);
        grown.set_parameterization(Parameterization::log_time);
        for (std::size_t r = 0; r < t.rows(); ++r) {
            grown.meta(r) = t.meta(r);
            for (std::size_t c = 0; c < d; ++c) {
                if (auto v = t.value(r, c)) grown.set(r, c, *v, t.cell(r, c)->date);
            }
        }
        grown.set(virt, j + 1, bench[j + 1]);
        LmcConfig chain = config;
        chain.rank = 1;
        chain.seed = derive_seed(config.seed, hash_tag("pivot_chain"), j);
        bench[j] = lmc_predict_detailed(grown, virt, j, chain).estimate;
    }
    result.benchmark_log_times = bench;

    // Triples of consecutive distances, skipping the Mile.
    std::vector<std::size_t> events;
    for (std::size_t c = 0; c < d; ++c) {
        if (catalog[c].label != "Mile") events.push_back(c);
    }

    for (std::size_t i = 0; i + 2 < events.size(); ++i) {
        PivotTriple triple;
        triple.lower = events[i];
        triple.pivot = events[i + 1];
        triple.upper = events[i + 2];

        auto predict_upper = [&](double lower_log_time) {
            PerformanceTable grown(catalog, log_time_table.rows() + 1);
            grown.set_parameterization(Parameterization::log_time);
            for (std::size_t r = 0; r < log_time_table.rows(); ++r) {
                grown.meta(r) = log_time_table.meta(r);
                for (std::size_t c = 0; c < d; ++c) {
                    if (auto v = log_time_table.value(r, c)) grown.set(r, c, *v);
                }
            }
            const std::size_t virt = log_time_table.rows();
            grown.set(virt, triple.lower, lower_log_time);
            grown.set(virt, triple.pivot, bench[triple.pivot]);
            LmcConfig cfg = config;
            cfg.rank = 2;
            cfg.seed = derive_seed(config.seed, hash_tag("pivot_predict"), triple.pivot);
            return lmc_predict_detailed(grown, virt, triple.upper, cfg).estimate;
        };

        const double base = predict_upper(bench[triple.lower]);
        for (double eps : result.epsilons) {
            const double perturbed = predict_upper(bench[triple.lower] + std::log1p(eps));
            triple.rel_change.push_back((std::exp(perturbed) - std::exp(base)) / std::exp(base));
        }
        result.triples.push_back(std::move(triple));
    }
    return result;
}

OptimalDistanceResult optimal_distance(const PerformanceTable& table, std::size_t athlete,
                                       Predictor& predictor) {
    const bool larger_is_worse = table.parameterization() != Parameterization::speed;
    OptimalDistanceResult result;
    result.percentile_per_event.resize(table.cols());
    result.predicted_value.resize(table.cols());

    for (std::size_t c = 0; c < table.cols(); ++c) {
        PerformanceTable masked = table;
        masked.clear(athlete, c);
        const double pred = predictor.predict(masked, athlete, c);
        result.predicted_value[c] = pred;
        // Percentile against the other athletes' entries in this column.
        std::vector<std::optional<double>> column;
        column.reserve(table.rows());
        for (std::size_t r = 0; r < table.rows(); ++r) {
            if (r == athlete) continue;
            column.push_back(table.value(r, c));
        }
        result.percentile_per_event[c] = percentile_of_value(column, pred, larger_is_worse);
    }

    std::size_t best = 0;
    for (std::size_t c = 1; c < table.cols(); ++c) {
        if (result.percentile_per_event[c] > result.percentile_per_event[best]) best = c;
    }
    result.best_event = best;
    return result;
}

}  // namespace runpred
