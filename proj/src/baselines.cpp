#include "runpred/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "runpred/rng.hpp"

namespace runpred {

double predict_mean(const PerformanceTable& table, std::size_t row, std::size_t col) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (r == row) continue;
        if (auto v = table.value(r, col)) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) throw DataError("predict_mean: empty column");
    return sum / static_cast<double>(n);
}

double predict_knn(const PerformanceTable& table, std::size_t row, std::size_t col, int k) {
    if (k < 1) throw DataError("predict_knn: k must be >= 1");

    // Column scales for normalization.
    std::vector<double> scale(table.cols(), 1.0);
    for (std::size_t c = 0; c < table.cols(); ++c) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t r = 0; r < table.rows(); ++r) {
            if (auto v = table.value(r, c)) {
                sum += *v;
                ++n;
            }
        }
        if (n > 0 && sum != 0.0) scale[c] = sum / static_cast<double>(n);
    }

    struct Candidate {
        double dist;
        std::size_t row;
        double value;
    };
    std::vector<Candidate> candidates;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (r == row || !table.present(r, col)) continue;
        double ss = 0.0;
        std::size_t n = 0;
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (c == col) continue;
            auto a = table.value(row, c);
            auto b = table.value(r, c);
            if (a && b) {
                const double d = *a / scale[c] - *b / scale[c];
                ss += d * d;
                ++n;
            }
        }
        if (n == 0) continue;
        candidates.push_back({std::sqrt(ss / static_cast<double>(n)), r, *table.value(r, col)});
    }
    if (candidates.empty()) throw DataError("predict_knn: no candidate athletes");

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        return a.row < b.row;
    });
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) sum += candidates[i].value;
    return sum / static_cast<double>(take);
}

double predict_riegel(double source_dist, double source_time, double target_dist) {
    if (!(source_dist > 0.0) || !(source_time > 0.0) || !(target_dist > 0.0)) {
        throw DataError("predict_riegel: inputs must be positive");
    }
    return source_time * std::pow(target_dist / source_dist, 1.06);
}

namespace {

struct AthletePoints {
    std::vector<double> log_s;
    std::vector<double> log_t;
};

std::vector<AthletePoints> gather_log_points(const PerformanceTable& table) {
    std::vector<AthletePoints> pts(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (auto v = table.value(r, c)) {
                if (!(*v > 0.0)) throw DataError("fit_power_law: non-positive time");
                pts[r].log_s.push_back(std::log(table.catalog().distance(c)));
                pts[r].log_t.push_back(std::log(*v));
            }
        }
    }
    return pts;
}

bool has_two_distances(const AthletePoints& p) {
    for (std::size_t i = 1; i < p.log_s.size(); ++i) {
        if (p.log_s[i] != p.log_s[0]) return true;
    }
    return false;
}

}  // namespace

PowerLawFit fit_power_law(const PerformanceTable& table, bool per_athlete) {
    auto pts = gather_log_points(table);
    PowerLawFit fit;
    fit.per_athlete = per_athlete;
    fit.log_coeff.assign(table.rows(), std::nullopt);

    if (per_athlete) {
        fit.exponents.assign(table.rows(), std::nullopt);
        bool any = false;
        for (std::size_t r = 0; r < table.rows(); ++r) {
            const auto& p = pts[r];
            if (p.log_s.size() < 2 || !has_two_distances(p)) continue;
            const std::size_t m = p.log_s.size();
            double sx = 0.0, sy = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                sx += p.log_s[i];
                sy += p.log_t[i];
            }
            const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
            double sxx = 0.0, sxy = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                sxx += (p.log_s[i] - mx) * (p.log_s[i] - mx);
                sxy += (p.log_s[i] - mx) * (p.log_t[i] - my);
            }
            const double alpha = sxy / sxx;
            fit.exponents[r] = alpha;
            fit.log_coeff[r] = my - alpha * mx;
            for (std::size_t i = 0; i < m; ++i) {
                const double res = p.log_t[i] - (*fit.log_coeff[r] + alpha * p.log_s[i]);
                fit.rss += res * res;
            }
            any = true;
        }
        if (!any) throw DataError("fit_power_law: no athlete with two distinct distances");
        return fit;
    }

    // Global: shared slope, per-athlete intercepts (within-athlete estimator).
    double num = 0.0, den = 0.0;
    for (const auto& p : pts) {
        if (p.log_s.size() < 2) continue;
        const std::size_t m = p.log_s.size();
        double sx = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            sx += p.log_s[i];
            sy += p.log_t[i];
        }
        const double mx = sx / static_cast<double>(m), my = sy / static_cast<double>(m);
        for (std::size_t i = 0; i < m; ++i) {
            num += (p.log_s[i] - mx) * (p.log_t[i] - my);
            den += (p.log_s[i] - mx) * (p.log_s[i] - mx);
        }
    }
    if (den == 0.0) throw DataError("fit_power_law: degenerate (no within-athlete spread)");
    fit.shared_exponent = num / den;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto& p = pts[r];
        if (p.log_s.empty()) continue;
        double sy = 0.0;
        for (std::size_t i = 0; i < p.log_s.size(); ++i) {
            sy += p.log_t[i] - fit.shared_exponent * p.log_s[i];
        }
        fit.log_coeff[r] = sy / static_cast<double>(p.log_s.size());
        for (std::size_t i = 0; i < p.log_s.size(); ++i) {
            const double res = p.log_t[i] - (*fit.log_coeff[r] + fit.shared_exponent * p.log_s[i]);
            fit.rss += res * res;
        }
    }
    return fit;
}

double predict_power_law(const PerformanceTable& table, std::size_t row, std::size_t col,
                         bool per_athlete) {
    auto fit = fit_power_law(table, per_athlete);
    if (!fit.log_coeff[row]) throw DataError("predict_power_law: athlete has no usable events");
    const double alpha = per_athlete ? fit.exponents[row].value_or(
                                           std::numeric_limits<double>::quiet_NaN())
                                     : fit.shared_exponent;
    if (per_athlete && !fit.exponents[row]) {
        throw DataError("predict_power_law: athlete needs two distinct distances");
    }
    const double log_s = std::log(table.catalog().distance(col));
    return std::exp(*fit.log_coeff[row] + alpha * log_s);
}

EmResult em_impute(const PerformanceTable& table, double rel_tol, int max_iter) {
    const std::size_t n = table.rows(), d = table.cols();
    if (n < 2) throw DataError("em_impute: need at least two rows");

    Eigen::MatrixXd x(n, d);
    std::vector<std::vector<int>> obs(n), mis(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            if (auto v = table.value(r, c)) {
                x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
                obs[r].push_back(static_cast<int>(c));
            } else {
                mis[r].push_back(static_cast<int>(c));
            }
        }
    }

    // Initialize missing entries at the column means.
    Eigen::VectorXd col_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        std::size_t m = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (table.present(r, c)) {
                sum += x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                ++m;
            }
        }
        col_mean(static_cast<Eigen::Index>(c)) = m ? sum / static_cast<double>(m) : 0.0;
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (int c : mis[r]) x(static_cast<Eigen::Index>(r), c) = col_mean(c);
    }

    Eigen::VectorXd mu = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
    Eigen::MatrixXd sigma = centered.transpose() * centered / static_cast<double>(n);

    auto ridge_if_needed = [&](Eigen::MatrixXd& s) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
        const double tr = s.trace();
        if (es.eigenvalues().minCoeff() < 1e-12 * std::max(tr, 1.0) / static_cast<double>(d)) {
            s += (1e-8 * std::max(tr, 1.0) / static_cast<double>(d)) *
                 Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
            return true;
        }
        return false;
    };

    EmResult result{table, {}, 0, false};
    const double log2pi = std::log(2.0 * M_PI);
    bool ridged_prev = false;

    for (int iter = 0; iter < max_iter; ++iter) {
        const bool ridged = ridge_if_needed(sigma);

        Eigen::VectorXd t1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
        Eigen::MatrixXd t2 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        double loglik = 0.0;

        for (std::size_t r = 0; r < n; ++r) {
            const auto& o = obs[r];
            const auto& m = mis[r];
            Eigen::VectorXd row = x.row(static_cast<Eigen::Index>(r)).transpose();
            Eigen::MatrixXd cond_cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                                             static_cast<Eigen::Index>(d));
            if (!o.empty()) {
                Eigen::MatrixXd s_oo(o.size(), o.size());
                for (std::size_t i = 0; i < o.size(); ++i) {
                    for (std::size_t j = 0; j < o.size(); ++j) s_oo(i, j) = sigma(o[i], o[j]);
                }
                Eigen::VectorXd dev(o.size());
                for (std::size_t i = 0; i < o.size(); ++i) dev(i) = x(static_cast<Eigen::Index>(r), o[i]) - mu(o[i]);

                Eigen::LDLT<Eigen::MatrixXd> ldlt(s_oo);
                Eigen::VectorXd solved = ldlt.solve(dev);
                const double logdet = ldlt.vectorD().array().max(1e-300).log().sum();
                loglik += -0.5 * (static_cast<double>(o.size()) * log2pi + logdet + dev.dot(solved));

                if (!m.empty()) {
                    Eigen::MatrixXd s_mo(m.size(), o.size());
                    for (std::size_t i = 0; i < m.size(); ++i) {
                        for (std::size_t j = 0; j < o.size(); ++j) s_mo(i, j) = sigma(m[i], o[j]);
                    }
                    Eigen::VectorXd cond_mean = s_mo * solved;
                    for (std::size_t i = 0; i < m.size(); ++i) {
                        row(m[i]) = mu(m[i]) + cond_mean(static_cast<Eigen::Index>(i));
                    }
                    // Conditional covariance of the missing block.
                    Eigen::MatrixXd k = ldlt.solve(s_mo.transpose());  // |o| x |m|
                    Eigen::MatrixXd s_mm(m.size(), m.size());
                    for (std::size_t i = 0; i < m.size(); ++i) {
                        for (std::size_t j = 0; j < m.size(); ++j) s_mm(i, j) = sigma(m[i], m[j]);
                    }
                    Eigen::MatrixXd cc = s_mm - s_mo * k;
                    for (std::size_t i = 0; i < m.size(); ++i) {
                        for (std::size_t j = 0; j < m.size(); ++j) cond_cov(m[i], m[j]) = cc(i, j);
                    }
                }
            } else {
                for (std::size_t i = 0; i < m.size(); ++i) row(m[i]) = mu(m[i]);
                for (std::size_t i = 0; i < m.size(); ++i) {
                    for (std::size_t j = 0; j < m.size(); ++j) cond_cov(m[i], m[j]) = sigma(m[i], m[j]);
                }
            }
            x.row(static_cast<Eigen::Index>(r)) = row.transpose();
            t1 += row;
            t2 += row * row.transpose() + cond_cov;
        }

        // EM increases the likelihood; a ridge event changes the model, so
        // comparisons across one are not meaningful.
        if (!result.loglik.empty() && !ridged && !ridged_prev) {
            const double prev = result.loglik.back();
            if (loglik < prev - 1e-8 * (1.0 + std::abs(prev))) {
                throw DataError("em_impute: log-likelihood decreased");
            }
        }
        ridged_prev = ridged;
        result.loglik.push_back(loglik);
        result.iterations = iter + 1;

        mu = t1 / static_cast<double>(n);
        sigma = t2 / static_cast<double>(n) - mu * mu.transpose();

        if (result.loglik.size() >= 2) {
            const double prev = result.loglik[result.loglik.size() - 2];
            const double rel = std::abs(loglik - prev) / std::max(std::abs(prev), 1e-300);
            if (rel < rel_tol) {
                result.converged = true;
                break;
            }
        }
    }

    for (std::size_t r = 0; r < n; ++r) {
        for (int c : mis[r]) {
            result.table.set(r, static_cast<std::size_t>(c), x(static_cast<Eigen::Index>(r), c));
        }
    }
    return result;
}

namespace {

struct MaskedMatrix {
    Eigen::MatrixXd m;     // observed entries, 0 where missing
    Eigen::ArrayXXd mask;  // 1 observed, 0 missing
};

MaskedMatrix build_masked(const PerformanceTable& table) {
    const auto n = static_cast<Eigen::Index>(table.rows());
    const auto d = static_cast<Eigen::Index>(table.cols());
    MaskedMatrix mm{Eigen::MatrixXd::Zero(n, d), Eigen::ArrayXXd::Zero(n, d)};
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
            if (auto v = table.value(static_cast<std::size_t>(r), static_cast<std::size_t>(c))) {
                mm.m(r, c) = *v;
                mm.mask(r, c) = 1.0;
            }
        }
    }
    return mm;
}

// Core soft-impute loop on a centered masked matrix.
std::pair<Eigen::MatrixXd, std::vector<double>> soft_impute_core(const MaskedMatrix& mm,
                                                                 double lambda, double rel_tol,
                                                                 int max_iter, bool* converged) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(mm.m.rows(), mm.m.cols());
    std::vector<double> objective;
    *converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::MatrixXd z = mm.mask * mm.m.array() + (1.0 - mm.mask) * x.array();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::VectorXd s = svd.singularValues();
        for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::max(0.0, s(i) - lambda);
        Eigen::MatrixXd x_new = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();

        const double fit = 0.5 * (mm.mask * (x_new - mm.m).array().square()).sum();
        objective.push_back(fit + lambda * s.sum());

        const double delta = (x_new - x).norm() / std::max(1.0, x.norm());
        x = std::move(x_new);
        if (delta < rel_tol) {
            *converged = true;
            break;
        }
    }
    return {x, objective};
}

}  // namespace

double select_nuclear_lambda(const PerformanceTable& table, std::uint64_t seed) {
    MaskedMatrix mm = build_masked(table);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mm.m);
    const double smax = svd.singularValues()(0);
    const std::vector<double> grid = {1e-4 * smax, 1e-3 * smax, 1e-2 * smax, 0.05 * smax,
                                      0.1 * smax,  0.2 * smax,  0.5 * smax};

    // 5-fold CV over the observed entries.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> cells;
    for (Eigen::Index r = 0; r < mm.m.rows(); ++r) {
        for (Eigen::Index c = 0; c < mm.m.cols(); ++c) {
            if (mm.mask(r, c) > 0.0) cells.emplace_back(r, c);
        }
    }
    auto rng = make_rng(derive_seed(seed, hash_tag("nuclear_cv")));
    std::shuffle(cells.begin(), cells.end(), rng);

    double best_lambda = grid[0];
    double best_err = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        double se = 0.0;
        std::size_t cnt = 0;
        for (int fold = 0; fold < 5; ++fold) {
            MaskedMatrix train = mm;
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (static_cast<int>(i % 5) == fold) {
                    train.mask(cells[i].first, cells[i].second) = 0.0;
                    train.m(cells[i].first, cells[i].second) = 0.0;
                }
            }
            bool conv = false;
            auto [x, obj] = soft_impute_core(train, lambda, 1e-5, 200, &conv);
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (static_cast<int>(i % 5) == fold) {
                    const double err = x(cells[i].first, cells[i].second) -
                                       mm.m(cells[i].first, cells[i].second);
                    se += err * err;
                    ++cnt;
                }
            }
        }
        const double mse = cnt ? se / static_cast<double>(cnt) : 0.0;
        if (mse < best_err) {
            best_err = mse;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

SoftImputeResult nuclear_norm_impute(const PerformanceTable& table, std::optional<double> lambda,
                                     double rel_tol, int max_iter, std::uint64_t seed) {
    if (table.present_count() == 0) throw DataError("nuclear_norm_impute: no entries");
    MaskedMatrix mm = build_masked(table);
    const double lam = lambda ? *lambda : select_nuclear_lambda(table, seed);

    SoftImputeResult result{table, {}, false, lam};
    auto [x, objective] = soft_impute_core(mm, lam, rel_tol, max_iter, &result.converged);
    result.objective = std::move(objective);

    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (!table.present(r, c)) {
                result.table.set(r, c,
                                 x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            }
        }
    }
    return result;
}

}  // namespace runpred
