#include "runpred/lmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "runpred/rng.hpp"
#include "runpred/thread_pool.hpp"

namespace runpred {

namespace {

// Bounded-size square matrix; circuits are at most 5x5 (rank 4).
using CircuitMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 5, 5>;

// Determinants are evaluated in extended precision: the circuit root is the
// ratio of two heavily cancelling determinants, and double alone loses more
// than the 1e-9 exactness budget on ill-conditioned draws.
long double det2(const long double m[5][5]) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

long double det_n(const long double m[5][5], int n) {
    if (n == 1) return m[0][0];
    if (n == 2) return det2(m);
    if (n == 3) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
    long double sum = 0.0L;
    long double sub[5][5];
    long double sign = 1.0L;
    for (int k = 0; k < n; ++k) {
        for (int i = 1; i < n; ++i) {
            int col = 0;
            for (int j = 0; j < n; ++j) {
                if (j == k) continue;
                sub[i - 1][col++] = m[i][j];
            }
        }
        sum += sign * m[0][k] * det_n(sub, n - 1);
        sign = -sign;
    }
    return sum;
}

long double det(const CircuitMatrix& m) {
    long double buf[5][5];
    const int n = static_cast<int>(m.rows());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) buf[i][j] = m(i, j);
    }
    return det_n(buf, n);
}

// Dense snapshot of a table for the inner loops.
struct DenseView {
    Eigen::MatrixXd values;
    std::vector<char> present;
    std::size_t rows = 0, cols = 0;

    explicit DenseView(const PerformanceTable& t)
        : values(t.rows(), t.cols()), present(t.rows() * t.cols(), 0), rows(t.rows()),
          cols(t.cols()) {
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                if (auto v = t.value(r, c)) {
                    values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
                    present[r * cols + c] = 1;
                }
            }
        }
    }

    bool is_present(std::size_t r, std::size_t c) const { return present[r * cols + c] != 0; }
    double at(std::size_t r, std::size_t c) const {
        return values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
    void fill(std::size_t r, std::size_t c, double v) {
        values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        present[r * cols + c] = 1;
    }
};

struct Accumulator {
    // Neumaier-compensated sums of w*m and w.
    double sum = 0.0, comp = 0.0;
    void add(double x) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    double total() const { return sum + comp; }
};

// All size-r subsets of `events`, ordered by total squared log-distance to
// the target (closest first). `events` must already be sorted by
// (squared log-distance, distance) so ties prefer shorter distances.
std::vector<std::vector<std::size_t>> ranked_subsets(const std::vector<std::size_t>& events,
                                                     const std::vector<double>& sqdist, int r) {
    std::vector<std::vector<std::size_t>> subsets;
    const std::size_t n = events.size();
    if (static_cast<int>(n) < r) return subsets;
    std::vector<std::size_t> pick(static_cast<std::size_t>(r));
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
        std::vector<std::size_t> s(static_cast<std::size_t>(r));
        for (int i = 0; i < r; ++i) s[static_cast<std::size_t>(i)] = events[pick[static_cast<std::size_t>(i)]];
        subsets.push_back(std::move(s));
        int i = r - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - static_cast<std::size_t>(r - i)) --i;
        if (i < 0) break;
        ++pick[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < r; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    auto total = [&](const std::vector<std::size_t>& s) {
        double t = 0.0;
        for (auto e : s) t += sqdist[e];
        return t;
    };
    std::stable_sort(subsets.begin(), subsets.end(),
                     [&](const auto& a, const auto& b) { return total(a) < total(b); });
    return subsets;
}

struct CircuitCore {
    double estimate;
    double weight;
};

// Canonical circuit with the unknown at (0,0): query row first, target column
// first. d0 = det with unknown := 0; the affine coefficient is the (0,0)
// minor, so d1 = d0 + minor.
std::optional<CircuitCore> solve_canonical(CircuitMatrix& a, double tol) {
    const auto n = a.rows();
    a(0, 0) = 0.0;
    const long double d0 = det(a);
    CircuitMatrix minor = a.bottomRightCorner(n - 1, n - 1);
    const long double m00 = det(minor);

    double scale = 1.0;
    for (Eigen::Index i = 0; i < n - 1; ++i) scale *= minor.row(i).norm();
    if (std::abs(static_cast<double>(m00)) <= tol * scale) return std::nullopt;

    const long double d1 = d0 + m00;
    const double estimate = static_cast<double>(-d0 / m00);
    // First-order variance proxy of the circuit root; weights are its
    // reciprocal so ill-conditioned circuits are damped, not amplified.
    const double variance = static_cast<double>(1.0L / std::abs(d0 + d1) +
                                                std::abs(d0) / (m00 * m00));
    const double weight = 1.0 / variance;
    if (!std::isfinite(estimate) || !std::isfinite(weight) || weight <= 0.0) return std::nullopt;
    return CircuitCore{estimate, weight};
}

// Circuit sampling over a fixed column subset. `query_values` holds the
// query athlete's entries at `subset` (same order). Returns nullopt when no
// circuit was accepted.
std::optional<CircuitCore> sample_circuits(const DenseView& view, std::size_t target_col,
                                           const std::vector<std::size_t>& subset,
                                           const std::vector<double>& query_values,
                                           const std::vector<std::size_t>& donors, int n_circuits,
                                           double degeneracy_tol, std::mt19937_64& rng) {
    const int r = static_cast<int>(subset.size());
    const std::size_t n_donors = donors.size();
    if (n_donors < static_cast<std::size_t>(r)) return std::nullopt;

    CircuitMatrix a(r + 1, r + 1);
    for (int j = 0; j < r; ++j) a(0, j + 1) = query_values[static_cast<std::size_t>(j)];

    std::uniform_int_distribution<std::size_t> pick(0, n_donors - 1);
    std::vector<std::size_t> chosen(static_cast<std::size_t>(r));

    Accumulator sum_wm, sum_w;
    std::vector<double> estimates;
    int accepted = 0;
    const long max_attempts = 10L * n_circuits;
    for (long attempt = 0; attempt < max_attempts && accepted < n_circuits; ++attempt) {
        // r distinct donors, uniform with replacement across iterations.
        for (int i = 0; i < r;) {
            std::size_t d = donors[pick(rng)];
            bool dup = false;
            for (int j = 0; j < i; ++j) dup |= (chosen[static_cast<std::size_t>(j)] == d);
            if (!dup) chosen[static_cast<std::size_t>(i++)] = d;
        }
        for (int i = 0; i < r; ++i) {
            const std::size_t dr = chosen[static_cast<std::size_t>(i)];
            a(i + 1, 0) = view.at(dr, target_col);
            for (int j = 0; j < r; ++j) a(i + 1, j + 1) = view.at(dr, subset[static_cast<std::size_t>(j)]);
        }
        auto sol = solve_canonical(a, degeneracy_tol);
        if (!sol) continue;
        ++accepted;
        sum_wm.add(sol->weight * sol->estimate);
        sum_w.add(sol->weight);
        estimates.push_back(sol->estimate);
    }
    if (accepted == 0) return std::nullopt;

    const double w_total = sum_w.total();
    if (!(w_total > 1e-300)) {
        // Weights vanished; fall back to the unweighted median.
        std::sort(estimates.begin(), estimates.end());
        const std::size_t n = estimates.size();
        const double med = n % 2 ? estimates[n / 2] : 0.5 * (estimates[n / 2 - 1] + estimates[n / 2]);
        return CircuitCore{med, 0.0};
    }
    return CircuitCore{sum_wm.total() / w_total, w_total};
}

std::vector<std::size_t> find_donors(const DenseView& view, std::size_t query_row,
                                     std::size_t target_col,
                                     const std::vector<std::size_t>& subset) {
    std::vector<std::size_t> donors;
    for (std::size_t r = 0; r < view.rows; ++r) {
        if (r == query_row) continue;
        if (!view.is_present(r, target_col)) continue;
        bool ok = true;
        for (auto c : subset) ok &= view.is_present(r, c);
        if (ok) donors.push_back(r);
    }
    return donors;
}

// Query athlete's candidate predictor events sorted by squared log-distance
// to the target (ties: shorter distance first).
std::vector<std::size_t> candidate_events(const DenseView& view, const EventCatalog& catalog,
                                          std::size_t row, std::size_t col,
                                          std::vector<double>& sqdist_out) {
    const double log_target = std::log(catalog.distance(col));
    std::vector<std::size_t> events;
    sqdist_out.assign(view.cols, 0.0);
    for (std::size_t c = 0; c < view.cols; ++c) {
        if (c == col || !view.is_present(row, c)) continue;
        const double d = std::log(catalog.distance(c)) - log_target;
        sqdist_out[c] = d * d;
        events.push_back(c);
    }
    std::sort(events.begin(), events.end(), [&](std::size_t a, std::size_t b) {
        if (sqdist_out[a] != sqdist_out[b]) return sqdist_out[a] < sqdist_out[b];
        return catalog.distance(a) < catalog.distance(b);
    });
    return events;
}

// One prediction attempt at exactly rank r. Walks the ranked column subsets
// (log-closest first) until one has enough donors and accepted circuits.
std::optional<std::pair<double, int>> predict_at_rank(const DenseView& view,
                                                      const EventCatalog& catalog, std::size_t row,
                                                      std::size_t col, int r,
                                                      const LmcConfig& config,
                                                      std::mt19937_64& rng) {
    std::vector<double> sqdist;
    auto events = candidate_events(view, catalog, row, col, sqdist);
    if (static_cast<int>(events.size()) < r) return std::nullopt;

    auto subsets = ranked_subsets(events, sqdist, r);
    for (const auto& subset : subsets) {
        auto donors = find_donors(view, row, col, subset);
        if (donors.size() < static_cast<std::size_t>(r)) continue;
        std::vector<double> qv(subset.size());
        for (std::size_t j = 0; j < subset.size(); ++j) qv[j] = view.at(row, subset[j]);
        auto core = sample_circuits(view, col, subset, qv, donors, config.n_circuits,
                                    config.degeneracy_tol, rng);
        if (core) return std::make_pair(core->estimate, config.n_circuits);
    }
    return std::nullopt;
}

std::optional<double> column_mean(const DenseView& view, std::size_t row, std::size_t col) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < view.rows; ++r) {
        if (r == row || !view.is_present(r, col)) continue;
        sum += view.at(r, col);
        ++n;
    }
    if (n > 0) return sum / static_cast<double>(n);
    // Column empty apart from the query row (single-row tables): the only
    // information left is the athlete's own entries.
    for (std::size_t c = 0; c < view.cols; ++c) {
        if (c == col || !view.is_present(row, c)) continue;
        sum += view.at(row, c);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

LmcOutcome predict_with_ladder(const DenseView& view, const EventCatalog& catalog,
                               std::size_t row, std::size_t col, const LmcConfig& config,
                               std::uint64_t seed) {
    std::vector<double> sqdist;
    auto events = candidate_events(view, catalog, row, col, sqdist);
    if (events.empty()) throw DataError("insufficient attempts");

    const int top = std::min<int>(config.rank, static_cast<int>(events.size()));
    for (int r = top; r >= 1; --r) {
        auto rng = make_rng(derive_seed(seed, hash_tag("lmc_rank"), static_cast<std::uint64_t>(r)));
        auto est = predict_at_rank(view, catalog, row, col, r, config, rng);
        if (est) return LmcOutcome{est->first, r, false, est->second};
    }
    auto cm = column_mean(view, row, col);
    if (!cm) throw DataError("insufficient attempts");
    return LmcOutcome{*cm, 0, true, 0};
}

}  // namespace

std::optional<CircuitSolution> solve_circuit(const Eigen::MatrixXd& a, int miss_row, int miss_col,
                                             double tol) {
    const auto n = a.rows();
    if (n != a.cols() || n < 2) throw DataError("solve_circuit: matrix must be square, >= 2x2");
    if (miss_row < 0 || miss_row >= n || miss_col < 0 || miss_col >= n) {
        throw DataError("solve_circuit: missing position out of range");
    }
    // Canonical arrangement: missing entry at (0,0), other rows/columns in
    // original order. Determinant sign changes cancel in the solution.
    CircuitMatrix canon(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index src_r = i == 0 ? miss_row : (i <= miss_row ? i - 1 : i);
        for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::Index src_c = j == 0 ? miss_col : (j <= miss_col ? j - 1 : j);
            canon(i, j) = a(src_r, src_c);
        }
    }
    auto core = solve_canonical(canon, tol);
    if (!core) return std::nullopt;
    return CircuitSolution{core->estimate, core->weight};
}

LmcOutcome lmc_predict_detailed(const PerformanceTable& table, std::size_t row, std::size_t col,
                                const LmcConfig& config) {
    if (config.rank < 1 || config.rank > 4) throw DataError("lmc: rank must be in [1,4]");
    DenseView view(table);
    return predict_with_ladder(view, table.catalog(), row, col, config, config.seed);
}

double lmc_predict(const PerformanceTable& table, std::size_t row, std::size_t col,
                   const LmcConfig& config) {
    if (config.event_selection == EventSelection::bagged) {
        return lmc_predict_bagged(table, row, col, config);
    }
    return lmc_predict_detailed(table, row, col, config).estimate;
}

namespace {

// Mean squared 5-fold cross-validation error of the fixed-subset predictor
// over the donor rows; used as inverse bagging weights.
double cv_score(const DenseView& view, std::size_t target_col,
                const std::vector<std::size_t>& subset, const std::vector<std::size_t>& donors,
                const LmcConfig& config, std::uint64_t seed) {
    const int r = static_cast<int>(subset.size());
    if (donors.size() < static_cast<std::size_t>(r) + 1) return 1.0;

    auto rng = make_rng(derive_seed(seed, hash_tag("lmc_bag_cv"), subset[0], target_col));
    std::vector<std::size_t> shuffled = donors;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    const std::size_t n_folds = std::min<std::size_t>(5, shuffled.size());
    const std::size_t cap_per_fold = 20;  // bound the CV cost on large tables
    const int cv_circuits = std::min(config.n_circuits, 100);

    double sum_sq = 0.0;
    std::size_t n_eval = 0;
    for (std::size_t f = 0; f < n_folds; ++f) {
        std::vector<std::size_t> train;
        std::vector<std::size_t> heldout;
        for (std::size_t i = 0; i < shuffled.size(); ++i) {
            if (i % n_folds == f) {
                heldout.push_back(shuffled[i]);
            } else {
                train.push_back(shuffled[i]);
            }
        }
        if (train.size() < static_cast<std::size_t>(r)) continue;
        const std::size_t n_do = std::min(cap_per_fold, heldout.size());
        for (std::size_t i = 0; i < n_do; ++i) {
            const std::size_t d = heldout[i];
            std::vector<double> qv(subset.size());
            for (std::size_t j = 0; j < subset.size(); ++j) qv[j] = view.at(d, subset[j]);
            auto core = sample_circuits(view, target_col, subset, qv, train, cv_circuits,
                                        config.degeneracy_tol, rng);
            if (!core) continue;
            const double err = core->estimate - view.at(d, target_col);
            sum_sq += err * err;
            ++n_eval;
        }
    }
    if (n_eval == 0) return 1.0;
    return sum_sq / static_cast<double>(n_eval);
}

}  // namespace

double lmc_predict_bagged(const PerformanceTable& table, std::size_t row, std::size_t col,
                          const LmcConfig& config) {
    if (config.rank < 1 || config.rank > 4) throw DataError("lmc: rank must be in [1,4]");
    DenseView view(table);
    const auto& catalog = table.catalog();

    std::vector<double> sqdist;
    auto events = candidate_events(view, catalog, row, col, sqdist);
    if (events.empty()) throw DataError("insufficient attempts");

    const int r = std::min<int>(config.rank, static_cast<int>(events.size()));
    auto subsets = ranked_subsets(events, sqdist, r);

    std::vector<double> preds, weights;
    for (std::size_t s = 0; s < subsets.size(); ++s) {
        const auto& subset = subsets[s];
        auto donors = find_donors(view, row, col, subset);
        if (donors.size() < static_cast<std::size_t>(r)) continue;
        std::vector<double> qv(subset.size());
        for (std::size_t j = 0; j < subset.size(); ++j) qv[j] = view.at(row, subset[j]);
        auto rng = make_rng(derive_seed(config.seed, hash_tag("lmc_bag"), s));
        auto core = sample_circuits(view, col, subset, qv, donors, config.n_circuits,
                                    config.degeneracy_tol, rng);
        if (!core) continue;
        const double mse = cv_score(view, col, subset, donors, config, config.seed);
        preds.push_back(core->estimate);
        weights.push_back(1.0 / (mse + 1e-12));
    }
    if (preds.empty()) {
        // No full-rank subset is usable; defer to the laddered predictor.
        return predict_with_ladder(view, catalog, row, col, config, config.seed).estimate;
    }
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    double est = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) est += preds[i] * (weights[i] / wsum);
    return est;
}

std::pair<PerformanceTable, ImputeReport> impute_all(const PerformanceTable& table,
                                                     const LmcConfig& config, int threads) {
    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (table.row_present_count(r) == 0) {
            throw DataError("impute_all: row " + std::to_string(r) + " has no entries");
        }
    }

    struct Task {
        std::size_t row, col;
    };
    std::vector<Task> tasks;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (!table.present(r, c)) tasks.push_back({r, c});
        }
    }

    PerformanceTable out = table;
    ImputeReport report;
    report.imputed_per_rank.assign(static_cast<std::size_t>(config.rank) + 1, 0);
    if (tasks.empty()) return {out, report};

    DenseView view(table);
    const auto& catalog = table.catalog();

    // Pass 1: configured rank, original entries only.
    std::vector<std::optional<double>> pass1(tasks.size());
    parallel_for(tasks.size(), threads, [&](std::size_t i) {
        auto rng = make_rng(derive_seed(config.seed, hash_tag("impute_p1"), tasks[i].row, tasks[i].col));
        auto est = predict_at_rank(view, catalog, tasks[i].row, tasks[i].col, config.rank, config, rng);
        if (est) pass1[i] = est->first;
    });

    DenseView augmented = view;
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (pass1[i]) {
            augmented.fill(tasks[i].row, tasks[i].col, *pass1[i]);
            out.set(tasks[i].row, tasks[i].col, *pass1[i]);
            report.entries.push_back({tasks[i].row, tasks[i].col, config.rank, false});
            ++report.imputed_per_rank[static_cast<std::size_t>(config.rank)];
        } else {
            open.push_back(i);
        }
    }

    // Pass 2: retry failures against the augmented table, descending in rank,
    // then column mean.
    std::vector<std::optional<double>> value2(open.size());
    std::vector<int> rank2(open.size(), 0);
    parallel_for(open.size(), threads, [&](std::size_t k) {
        const auto& t = tasks[open[k]];
        for (int r = config.rank; r >= 1; --r) {
            auto rng = make_rng(derive_seed(config.seed, hash_tag("impute_p2"), t.row,
                                            t.col ^ (static_cast<std::uint64_t>(r) << 32)));
            auto est = predict_at_rank(augmented, catalog, t.row, t.col, r, config, rng);
            if (est) {
                value2[k] = est->first;
                rank2[k] = r;
                return;
            }
        }
    });

    for (std::size_t k = 0; k < open.size(); ++k) {
        const auto& t = tasks[open[k]];
        std::optional<double> value = value2[k];
        bool cm = false;
        if (!value) {
            value = column_mean(augmented, t.row, t.col);
            cm = true;
            if (!value) throw DataError("impute_all: empty column " + std::to_string(t.col));
        }
        out.set(t.row, t.col, *value);
        report.entries.push_back({t.row, t.col, rank2[k], cm});
        if (cm) {
            ++report.n_column_mean;
        } else {
            ++report.imputed_per_rank[static_cast<std::size_t>(rank2[k])];
        }
    }
    report.n_imputed = tasks.size();
    return {out, report};
}

}  // namespace runpred
