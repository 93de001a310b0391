#include "runpred/table.hpp"

#include <algorithm>
#include <cmath>

namespace runpred {

std::string to_string(Gender g) {
    switch (g) {
        case Gender::male: return "M";
        case Gender::female: return "F";
        default: return "U";
    }
}

Gender gender_from_string(const std::string& s) {
    if (s == "M" || s == "m" || s == "male") return Gender::male;
    if (s == "F" || s == "f" || s == "female") return Gender::female;
    return Gender::unknown;
}

std::string to_string(Parameterization p) {
    switch (p) {
        case Parameterization::time: return "time";
        case Parameterization::normalized: return "normalized";
        case Parameterization::log_time: return "log_time";
        case Parameterization::speed: return "speed";
    }
    return "time";
}

Parameterization parameterization_from_string(const std::string& s) {
    if (s == "time") return Parameterization::time;
    if (s == "normalized") return Parameterization::normalized;
    if (s == "log_time" || s == "log-time") return Parameterization::log_time;
    if (s == "speed") return Parameterization::speed;
    throw DataError("unknown parameterization: " + s);
}

PerformanceTable::PerformanceTable(EventCatalog catalog, std::size_t n_rows)
    : catalog_(std::move(catalog)), meta_(n_rows), cells_(n_rows * catalog_.size()) {}

std::size_t PerformanceTable::row_present_count(std::size_t r) const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < cols(); ++c) n += present(r, c);
    return n;
}

std::size_t PerformanceTable::col_present_count(std::size_t c) const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < rows(); ++r) n += present(r, c);
    return n;
}

std::size_t PerformanceTable::present_count() const {
    std::size_t n = 0;
    for (const auto& cl : cells_) n += cl.has_value();
    return n;
}

PerformanceTable PerformanceTable::select_rows(const std::vector<std::size_t>& rows) const {
    PerformanceTable out(catalog_, rows.size());
    out.param_ = param_;
    out.norm_means_ = norm_means_;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.meta_[i] = meta_[rows[i]];
        for (std::size_t c = 0; c < cols(); ++c) {
            out.cells_[i * cols() + c] = cells_[rows[i] * cols() + c];
        }
    }
    return out;
}

std::vector<std::optional<double>> percentiles_of(
    const std::vector<std::optional<double>>& values, bool larger_is_worse) {
    std::vector<std::optional<double>> out(values.size());
    std::vector<double> present;
    for (const auto& v : values) {
        if (v) present.push_back(*v);
    }
    const std::size_t n = present.size();
    if (n == 0) return out;

    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i]) continue;
        if (n == 1) {
            out[i] = 50.0;
            continue;
        }
        const double v = *values[i];
        std::size_t worse = 0, tied = 0;
        for (double u : present) {
            if (u == v) {
                ++tied;  // includes self
            } else if (larger_is_worse ? (u > v) : (u < v)) {
                ++worse;
            }
        }
        const double rank = static_cast<double>(worse) + (static_cast<double>(tied) - 1.0) / 2.0;
        out[i] = 100.0 * rank / (static_cast<double>(n) - 1.0);
    }
    return out;
}

double percentile_of_value(const std::vector<std::optional<double>>& values, double v,
                           bool larger_is_worse) {
    std::size_t n = 0, worse = 0, tied = 0;
    for (const auto& u : values) {
        if (!u) continue;
        ++n;
        if (*u == v) {
            ++tied;
        } else if (larger_is_worse ? (*u > v) : (*u < v)) {
            ++worse;
        }
    }
    if (n == 0) throw DataError("percentile_of_value: empty column");
    return 100.0 * (static_cast<double>(worse) + static_cast<double>(tied) / 2.0) /
           static_cast<double>(n);
}

OptionalGrid event_percentiles(const PerformanceTable& table) {
    if (table.parameterization() != Parameterization::time) {
        throw DataError("event_percentiles: table must be in time parameterization");
    }
    OptionalGrid grid(table.rows(), table.cols());
    std::vector<std::optional<double>> column(table.rows());
    for (std::size_t c = 0; c < table.cols(); ++c) {
        for (std::size_t r = 0; r < table.rows(); ++r) column[r] = table.value(r, c);
        auto pct = percentiles_of(column, /*larger_is_worse=*/true);
        for (std::size_t r = 0; r < table.rows(); ++r) grid.at(r, c) = pct[r];
    }
    return grid;
}

double preferred_distance(const PerformanceTable& table, std::size_t row) {
    double sum_log = 0.0;
    std::size_t m = 0;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (table.present(row, c)) {
            sum_log += std::log(table.catalog().distance(c));
            ++m;
        }
    }
    if (m == 0) throw DataError("preferred_distance: no attempts");
    return std::exp(sum_log / static_cast<double>(m));
}

double training_standard(const std::vector<std::optional<double>>& percentile_row) {
    double sum = 0.0;
    std::size_t m = 0;
    for (const auto& p : percentile_row) {
        if (p) {
            sum += *p;
            ++m;
        }
    }
    if (m == 0) throw DataError("training_standard: no percentiles");
    return sum / static_cast<double>(m);
}

AthleteSummary athlete_summary(const PerformanceTable& table, const OptionalGrid& percentiles,
                               std::size_t row) {
    AthleteSummary s;
    s.percentiles.resize(table.cols());
    for (std::size_t c = 0; c < table.cols(); ++c) s.percentiles[c] = percentiles.at(row, c);
    s.preferred_distance = preferred_distance(table, row);
    s.training_standard = training_standard(s.percentiles);
    s.n_events = table.row_present_count(row);
    return s;
}

namespace {

// Per-entry transform to time coordinates. `col_mean` is the normalization
// mean for the entry's column (only used for normalized input).
double to_time(double v, Parameterization from, double distance, double col_mean) {
    switch (from) {
        case Parameterization::time: return v;
        case Parameterization::normalized: return v * col_mean;
        case Parameterization::log_time: return std::exp(v);
        case Parameterization::speed: return distance / v;
    }
    return v;
}

}  // namespace

PerformanceTable reparameterize(const PerformanceTable& table, Parameterization target) {
    const Parameterization from = table.parameterization();
    if (from == target) return table;

    if (from == Parameterization::normalized && table.normalization_means().empty()) {
        throw DataError("reparameterize: normalized table lacks its column means");
    }

    // First invert to time.
    PerformanceTable time_table = table;
    if (from != Parameterization::time) {
        for (std::size_t r = 0; r < table.rows(); ++r) {
            for (std::size_t c = 0; c < table.cols(); ++c) {
                const auto& cl = table.cell(r, c);
                if (!cl) continue;
                const double mean =
                    from == Parameterization::normalized ? table.normalization_means()[c] : 0.0;
                const double t = to_time(cl->value, from, table.catalog().distance(c), mean);
                if (!(t > 0.0) || !std::isfinite(t)) {
                    throw DataError("reparameterize: non-positive time entry");
                }
                time_table.set(r, c, t, cl->date);
            }
        }
        time_table.set_parameterization(Parameterization::time);
        time_table.set_normalization_means({});
    } else {
        for (std::size_t r = 0; r < table.rows(); ++r) {
            for (std::size_t c = 0; c < table.cols(); ++c) {
                const auto& cl = table.cell(r, c);
                if (cl && !(cl->value > 0.0)) {
                    throw DataError("reparameterize: non-positive time entry");
                }
            }
        }
    }
    if (target == Parameterization::time) return time_table;

    PerformanceTable out = time_table;
    std::vector<double> means;
    if (target == Parameterization::normalized) {
        means.resize(out.cols(), 0.0);
        for (std::size_t c = 0; c < out.cols(); ++c) {
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t r = 0; r < out.rows(); ++r) {
                if (auto v = time_table.value(r, c)) {
                    sum += *v;
                    ++n;
                }
            }
            means[c] = n ? sum / static_cast<double>(n) : 0.0;
        }
    }
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < out.cols(); ++c) {
            const auto& cl = time_table.cell(r, c);
            if (!cl) continue;
            double v = cl->value;
            switch (target) {
                case Parameterization::normalized: v = cl->value / means[c]; break;
                case Parameterization::log_time: v = std::log(cl->value); break;
                case Parameterization::speed: v = out.catalog().distance(c) / cl->value; break;
                case Parameterization::time: break;
            }
            out.set(r, c, v, cl->date);
        }
    }
    out.set_parameterization(target);
    out.set_normalization_means(std::move(means));
    return out;
}

}  // namespace runpred
