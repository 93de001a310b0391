#include "runpred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "runpred/rng.hpp"
#include "runpred/thread_pool.hpp"

namespace runpred {

std::vector<double> ValidationReport::residuals() const {
    std::vector<double> r;
    r.reserve(holdouts.size());
    for (const auto& h : holdouts) {
        if (!h.skipped) r.push_back(h.prediction - h.truth);
    }
    return r;
}

std::vector<Holdout> sample_holdouts(const PerformanceTable& table, const ValidationSpec& spec) {
    std::vector<Holdout> candidates;
    const bool larger_is_worse = table.parameterization() != Parameterization::speed;

    std::vector<std::vector<std::optional<double>>> pct_cols;
    if (spec.fastest_fraction < 1.0) {
        pct_cols.resize(table.cols());
        std::vector<std::optional<double>> column(table.rows());
        for (std::size_t c = 0; c < table.cols(); ++c) {
            for (std::size_t r = 0; r < table.rows(); ++r) column[r] = table.value(r, c);
            pct_cols[c] = percentiles_of(column, larger_is_worse);
        }
    }

    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (!table.present(r, c)) continue;
            if (spec.fastest_fraction < 1.0) {
                const auto& p = pct_cols[c][r];
                if (p && *p < 100.0 * (1.0 - spec.fastest_fraction)) continue;
            }
            candidates.push_back({r, c});
        }
    }

    auto rng = make_rng(derive_seed(spec.seed, hash_tag("holdouts")));
    std::shuffle(candidates.begin(), candidates.end(), rng);
    if (candidates.size() > spec.n_holdouts) candidates.resize(spec.n_holdouts);
    return candidates;
}

namespace {

// Table as one holdout sees it: target entry hidden; in causal mode the
// query row keeps only entries dated strictly before the hidden one.
PerformanceTable mask_for_holdout(const PerformanceTable& table, const Holdout& h, LooMode mode) {
    PerformanceTable masked = table;
    const auto hidden_date = table.cell(h.row, h.col)->date;
    masked.clear(h.row, h.col);
    if (mode == LooMode::causal_past) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (c == h.col || !masked.present(h.row, c)) continue;
            const auto& d = masked.cell(h.row, c)->date;
            const bool keep = hidden_date && d && *d < *hidden_date;
            if (!keep) masked.clear(h.row, c);
        }
    }
    return masked;
}

void finalize_report(const PerformanceTable& table, ValidationReport& report, int n_boot,
                     std::uint64_t seed) {
    std::vector<double> res, preds, truths;
    std::map<std::size_t, std::vector<double>> res_by_event;
    for (const auto& h : report.holdouts) {
        if (h.skipped) {
            ++report.n_skipped;
            continue;
        }
        ++report.n_evaluated;
        res.push_back(h.prediction - h.truth);
        preds.push_back(h.prediction);
        truths.push_back(h.truth);
        res_by_event[h.col].push_back(h.prediction - h.truth);
    }
    if (res.empty()) return;

    std::tie(report.rmse, report.mae) = metrics(res);

    auto rmse_stat = [](const std::vector<double>& s) {
        double q = 0.0;
        for (double v : s) q += v * v;
        return std::sqrt(q / static_cast<double>(s.size()));
    };
    auto mae_stat = [](const std::vector<double>& s) {
        double q = 0.0;
        for (double v : s) q += std::abs(v);
        return q / static_cast<double>(s.size());
    };
    report.rmse_se = bootstrap_se(res, rmse_stat, n_boot, derive_seed(seed, hash_tag("se_rmse")));
    report.mae_se = bootstrap_se(res, mae_stat, n_boot, derive_seed(seed, hash_tag("se_mae")));

    // Relative errors in time units.
    std::vector<double> rel;
    for (const auto& h : report.holdouts) {
        if (h.skipped) continue;
        const double t_true = entry_to_time(table, h.col, h.truth);
        const double t_pred = entry_to_time(table, h.col, h.prediction);
        if (std::isfinite(t_true) && std::isfinite(t_pred) && t_true > 0.0) {
            rel.push_back((t_pred - t_true) / t_true);
        }
    }
    if (!rel.empty()) {
        std::tie(report.rel_rmse, report.rel_mae) = metrics(rel);
        report.rel_rmse_se =
            bootstrap_se(rel, rmse_stat, n_boot, derive_seed(seed, hash_tag("se_rel_rmse")));
        report.rel_mae_se =
            bootstrap_se(rel, mae_stat, n_boot, derive_seed(seed, hash_tag("se_rel_mae")));
    }

    for (const auto& [col, r] : res_by_event) {
        auto [rmse, mae] = metrics(r);
        report.per_event.push_back({col, r.size(), rmse, mae});
    }
}

}  // namespace

ValidationReport loo_validate(const PerformanceTable& table, Predictor& predictor,
                              const ValidationSpec& spec, const std::vector<Holdout>& holdouts) {
    ValidationReport report;
    report.method = predictor.name();
    report.seed = spec.seed;
    report.holdouts.resize(holdouts.size());

    parallel_for(holdouts.size(), spec.threads, [&](std::size_t i) {
        const auto& h = holdouts[i];
        HoldoutRecord rec;
        rec.row = h.row;
        rec.col = h.col;
        rec.truth = *table.value(h.row, h.col);
        PerformanceTable masked = mask_for_holdout(table, h, spec.mode);
        try {
            rec.prediction = predictor.predict(masked, h.row, h.col);
            if (!std::isfinite(rec.prediction)) {
                rec.skipped = true;
                rec.skip_reason = "non-finite prediction";
            }
        } catch (const DataError& e) {
            rec.skipped = true;
            rec.skip_reason = e.what();
        }
        report.holdouts[i] = std::move(rec);
    });

    finalize_report(table, report, spec.n_boot, spec.seed);
    return report;
}

ValidationReport loo_validate(const PerformanceTable& table, Predictor& predictor,
                              const ValidationSpec& spec) {
    predictor.prepare(table);
    return loo_validate(table, predictor, spec, sample_holdouts(table, spec));
}

std::pair<double, double> metrics(const std::vector<double>& residuals) {
    if (residuals.empty()) throw DataError("metrics: no residuals");
    double sq = 0.0, ab = 0.0;
    for (double r : residuals) {
        sq += r * r;
        ab += std::abs(r);
    }
    const double n = static_cast<double>(residuals.size());
    return {std::sqrt(sq / n), ab / n};
}

std::pair<double, double> relative_metrics(const std::vector<double>& predictions,
                                           const std::vector<double>& truths) {
    if (predictions.size() != truths.size() || predictions.empty()) {
        throw DataError("relative_metrics: bad input");
    }
    std::vector<double> rel(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (!(truths[i] != 0.0)) throw DataError("relative_metrics: zero truth");
        rel[i] = (predictions[i] - truths[i]) / truths[i];
    }
    return metrics(rel);
}

double bootstrap_se(const std::vector<double>& samples,
                    const std::function<double(const std::vector<double>&)>& statistic,
                    int n_boot, std::uint64_t seed) {
    if (samples.size() < 2) return 0.0;
    auto rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    std::vector<double> stats(static_cast<std::size_t>(n_boot));
    std::vector<double> resample(samples.size());
    for (int b = 0; b < n_boot; ++b) {
        for (auto& v : resample) v = samples[pick(rng)];
        stats[static_cast<std::size_t>(b)] = statistic(resample);
    }
    double mean = 0.0;
    for (double s : stats) mean += s;
    mean /= static_cast<double>(stats.size());
    double var = 0.0;
    for (double s : stats) var += (s - mean) * (s - mean);
    return std::sqrt(var / static_cast<double>(stats.size()));
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw DataError("wilcoxon_signed_rank: samples must be paired and non-empty");
    }
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];

    // Rank |d| ascending with mid-ranks; zeros are ranked (Pratt) but carry
    // no sign.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
        const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }

    WilcoxonResult result;
    double w_plus = 0.0;
    std::size_t zeros = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (d[k] > 0.0) w_plus += rank[k];
        if (d[k] == 0.0) ++zeros;
    }
    result.statistic = w_plus;
    result.n_nonzero = n - zeros;
    if (result.n_nonzero == 0) {
        result.p_value = 1.0;
        return result;
    }

    if (n <= 25) {
        // Exact: distribution of 2*W+ over all sign assignments of the
        // non-zero differences (mid-ranks are half-integers, so doubling
        // makes them integers).
        std::vector<long long> r2;
        for (std::size_t k = 0; k < n; ++k) {
            if (d[k] != 0.0) r2.push_back(std::llround(2.0 * rank[k]));
        }
        long long total = 0;
        for (long long v : r2) total += v;
        std::vector<double> dist(static_cast<std::size_t>(total) + 1, 0.0);
        dist[0] = 1.0;
        long long upper = 0;
        for (long long v : r2) {
            upper += v;
            for (long long s = upper; s >= v; --s) {
                dist[static_cast<std::size_t>(s)] += dist[static_cast<std::size_t>(s - v)];
            }
        }
        const double denom = std::pow(2.0, static_cast<double>(r2.size()));
        const long long w2 = std::llround(2.0 * w_plus);
        double p_le = 0.0, p_ge = 0.0;
        for (long long s = 0; s <= total; ++s) {
            if (s <= w2) p_le += dist[static_cast<std::size_t>(s)];
            if (s >= w2) p_ge += dist[static_cast<std::size_t>(s)];
        }
        result.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge) / denom);
        return result;
    }

    // Normal approximation with Pratt zero adjustment and tie correction.
    const double nn = static_cast<double>(n);
    const double z = static_cast<double>(zeros);
    const double mean = (nn * (nn + 1.0) - z * (z + 1.0)) / 4.0;
    double tie_corr = 0.0;
    {
        std::size_t k = 0;
        while (k < n) {
            std::size_t j = k;
            while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[k]])) ++j;
            if (std::abs(d[order[k]]) > 0.0) {
                const double t = static_cast<double>(j - k + 1);
                tie_corr += t * t * t - t;
            }
            k = j + 1;
        }
    }
    const double var = (nn * (nn + 1.0) * (2.0 * nn + 1.0) - z * (z + 1.0) * (2.0 * z + 1.0)) / 24.0 -
                       tie_corr / 48.0;
    if (var <= 0.0) {
        result.p_value = 1.0;
        return result;
    }
    const double dev = std::abs(w_plus - mean);
    const double zscore = (dev - 0.5) / std::sqrt(var);  // continuity correction
    result.p_value = std::min(1.0, std::erfc(std::max(0.0, zscore) / std::sqrt(2.0)));
    return result;
}

MethodComparison compare_methods(const PerformanceTable& table,
                                 const std::vector<Predictor*>& predictors,
                                 const ValidationSpec& spec, std::size_t reference) {
    if (predictors.empty()) throw DataError("compare_methods: no methods");
    if (reference >= predictors.size()) throw DataError("compare_methods: bad reference index");

    MethodComparison cmp;
    cmp.reference = reference;
    cmp.holdouts = sample_holdouts(table, spec);

    for (auto* p : predictors) {
        p->prepare(table);
        MethodCell cell;
        cell.method = p->name();
        cell.report = loo_validate(table, *p, spec, cmp.holdouts);
        cmp.cells.push_back(std::move(cell));
    }

    const auto& ref = cmp.cells[reference].report;
    for (std::size_t m = 0; m < cmp.cells.size(); ++m) {
        auto& cell = cmp.cells[m];
        if (m == reference) {
            cell.p_vs_reference = 1.0;
            cell.paired_n = ref.n_evaluated;
            continue;
        }
        // Paired absolute errors over holdouts evaluated by both methods.
        std::vector<double> ea, eb;
        for (std::size_t i = 0; i < cmp.holdouts.size(); ++i) {
            const auto& ha = cell.report.holdouts[i];
            const auto& hb = ref.holdouts[i];
            if (ha.skipped || hb.skipped) continue;
            ea.push_back(std::abs(ha.prediction - ha.truth));
            eb.push_back(std::abs(hb.prediction - hb.truth));
        }
        cell.paired_n = ea.size();
        cell.p_vs_reference = ea.empty() ? 1.0 : wilcoxon_signed_rank(ea, eb).p_value;
    }
    return cmp;
}

}  // namespace runpred
