#include "runpred/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "runpred/rng.hpp"

namespace runpred {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::int64_t parse_int_field(const std::string& s, std::size_t line_no, const char* what) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
    return v;
}

double parse_double_field(const std::string& s, std::size_t line_no, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
    return v;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

std::vector<AthleteMeta> parse_athletes(std::istream& in) {
    std::vector<AthleteMeta> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("athlete_id", 0) == 0) continue;  // header
        auto fields = split_csv_line(line);
        if (fields.size() != 3) {
            throw DataError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
        }
        AthleteMeta m;
        m.id = parse_int_field(fields[0], line_no, "athlete_id");
        m.gender = gender_from_string(fields[1]);
        if (!fields[2].empty()) {
            m.birth_date = parse_date(fields[2]);
            if (!m.birth_date) {
                throw DataError("line " + std::to_string(line_no) + ": bad date '" + fields[2] + "'");
            }
        }
        out.push_back(m);
    }
    return out;
}

std::vector<RawAttempt> parse_attempts(std::istream& in) {
    std::vector<RawAttempt> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("athlete_id", 0) == 0) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw DataError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                            std::to_string(fields.size()));
        }
        RawAttempt a;
        a.athlete_id = parse_int_field(fields[0], line_no, "athlete_id");
        a.event_label = fields[1];
        if (!fields[2].empty()) {
            a.date = parse_date(fields[2]);
            if (!a.date) {
                throw DataError("line " + std::to_string(line_no) + ": bad date '" + fields[2] + "'");
            }
        }
        a.seconds = parse_double_field(fields[3], line_no, "performance");
        if (!(a.seconds > 0.0)) {
            throw DataError("line " + std::to_string(line_no) + ": non-positive performance");
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<AthleteMeta> load_athletes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_athletes(in);
}

std::vector<RawAttempt> load_attempts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_attempts(in);
}

std::optional<double> record_in_force(const WorldRecords& records, const std::string& event,
                                      const std::optional<Date>& when) {
    auto it = records.find(event);
    if (it == records.end() || it->second.empty()) return std::nullopt;
    const auto& prog = it->second;
    if (!when) {
        double best = prog.front().seconds;
        for (const auto& e : prog) best = std::min(best, e.seconds);
        return best;
    }
    std::optional<double> current;
    for (const auto& e : prog) {
        if (e.effective <= *when) current = e.seconds;
    }
    return current;
}

CleanResult clean(std::vector<RawAttempt> attempts, std::vector<AthleteMeta> athletes,
                  const CleaningConfig& config) {
    CleanReport report;

    // Sentinel attempt dates become missing.
    for (auto& a : attempts) {
        if (!a.date) continue;
        for (const auto& s : config.sentinel_attempt_dates) {
            if (*a.date == s) {
                a.date.reset();
                ++report.attempt_dates_cleared;
                break;
            }
        }
    }

    // Sentinel birth dates become missing.
    for (auto& m : athletes) {
        if (m.birth_date && *m.birth_date == config.sentinel_birth_date) {
            m.birth_date.reset();
            ++report.birth_dates_cleared;
        }
    }

    // Birth dates implying an age below the minimum at any dated attempt.
    std::map<std::int64_t, std::size_t> row_of;
    for (std::size_t i = 0; i < athletes.size(); ++i) row_of[athletes[i].id] = i;
    std::set<std::size_t> underage;
    for (const auto& a : attempts) {
        if (!a.date) continue;
        auto it = row_of.find(a.athlete_id);
        if (it == row_of.end()) continue;
        const auto& birth = athletes[it->second].birth_date;
        if (birth && years_between(*birth, *a.date) < config.min_age_years) {
            underage.insert(it->second);
        }
    }
    for (std::size_t i : underage) {
        athletes[i].birth_date.reset();
        ++report.underage_cleared;
    }

    // Attempts beating the record in force at their date.
    {
        std::vector<RawAttempt> kept;
        kept.reserve(attempts.size());
        for (auto& a : attempts) {
            auto rec = record_in_force(config.world_records, a.event_label, a.date);
            if (rec && a.seconds < *rec) {
                ++report.record_beating_removed;
            } else {
                kept.push_back(std::move(a));
            }
        }
        attempts = std::move(kept);
    }

    // Extremely slow attempts: slower than factor x the event median of the
    // surviving pool. Iterated to a fixed point so cleaning is idempotent.
    bool changed = true;
    while (changed) {
        changed = false;
        std::map<std::string, std::vector<double>> by_event;
        for (const auto& a : attempts) by_event[a.event_label].push_back(a.seconds);
        std::map<std::string, double> cutoff;
        for (auto& [event, times] : by_event) {
            std::sort(times.begin(), times.end());
            const std::size_t n = times.size();
            const double median =
                n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
            cutoff[event] = config.slow_threshold_factor * median;
        }
        std::vector<RawAttempt> kept;
        kept.reserve(attempts.size());
        for (auto& a : attempts) {
            if (a.seconds > cutoff[a.event_label]) {
                ++report.extremely_slow_removed;
                changed = true;
            } else {
                kept.push_back(std::move(a));
            }
        }
        attempts = std::move(kept);
    }

    return CleanResult{std::move(attempts), std::move(athletes), report};
}

namespace {

// Percentile of each attempt among all attempts at the same event, used to
// pick an athlete's best event.
std::vector<double> attempt_percentiles(const std::vector<RawAttempt>& attempts) {
    std::map<std::string, std::vector<std::size_t>> by_event;
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        by_event[attempts[i].event_label].push_back(i);
    }
    std::vector<double> pct(attempts.size(), 0.0);
    for (const auto& [event, idxs] : by_event) {
        std::vector<std::optional<double>> col;
        col.reserve(idxs.size());
        for (auto i : idxs) col.emplace_back(attempts[i].seconds);
        auto p = percentiles_of(col, /*larger_is_worse=*/true);
        for (std::size_t k = 0; k < idxs.size(); ++k) pct[idxs[k]] = *p[k];
    }
    return pct;
}

PerformanceTable make_empty_table(const std::vector<AthleteMeta>& athletes,
                                  const EventCatalog& catalog) {
    PerformanceTable table(catalog, athletes.size());
    for (std::size_t r = 0; r < athletes.size(); ++r) table.meta(r) = athletes[r];
    return table;
}

}  // namespace

namespace {

// Attempt indices grouped by table row, skipping unknown athletes.
std::map<std::size_t, std::vector<std::size_t>> attempts_by_row(
    const std::vector<RawAttempt>& attempts, const std::vector<AthleteMeta>& athletes) {
    std::map<std::int64_t, std::size_t> row_of;
    for (std::size_t i = 0; i < athletes.size(); ++i) row_of[athletes[i].id] = i;
    std::map<std::size_t, std::vector<std::size_t>> grouped;
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        auto it = row_of.find(attempts[i].athlete_id);
        if (it != row_of.end()) grouped[it->second].push_back(i);
    }
    return grouped;
}

}  // namespace

PerformanceTable collate_best(const std::vector<RawAttempt>& attempts,
                              const std::vector<AthleteMeta>& athletes,
                              const EventCatalog& catalog) {
    PerformanceTable table = make_empty_table(athletes, catalog);
    auto pct = attempt_percentiles(attempts);
    auto grouped = attempts_by_row(attempts, athletes);

    for (const auto& [row, idxs] : grouped) {
        // Best dated attempt; ties by earlier date, then shorter distance.
        std::optional<std::size_t> best;
        for (std::size_t i : idxs) {
            const auto& a = attempts[i];
            if (!a.date || !catalog.index_of(a.event_label)) continue;
            if (!best) {
                best = i;
                continue;
            }
            const auto& b = attempts[*best];
            const double dp = pct[i] - pct[*best];
            bool better = dp > 0.0;
            if (dp == 0.0) {
                if (*a.date != *b.date) {
                    better = *a.date < *b.date;
                } else {
                    better = catalog.distance(*catalog.index_of(a.event_label)) <
                             catalog.distance(*catalog.index_of(b.event_label));
                }
            }
            if (better) best = i;
        }
        if (!best) continue;

        const std::int64_t hi = to_days(*attempts[*best].date);
        const std::int64_t lo = hi - 365;  // window (best - 365, best]
        for (std::size_t i : idxs) {
            const auto& a = attempts[i];
            if (!a.date) continue;
            const std::int64_t d = to_days(*a.date);
            if (d <= lo || d > hi) continue;
            auto col = catalog.index_of(a.event_label);
            if (!col) continue;
            const auto& existing = table.cell(row, *col);
            if (!existing || a.seconds < existing->value) {
                table.set(row, *col, a.seconds, a.date);
            }
        }
    }
    return table;
}

PerformanceTable collate_random(const std::vector<RawAttempt>& attempts,
                                const std::vector<AthleteMeta>& athletes,
                                const EventCatalog& catalog, std::uint64_t seed) {
    PerformanceTable table = make_empty_table(athletes, catalog);
    auto grouped = attempts_by_row(attempts, athletes);

    for (const auto& [row, idxs] : grouped) {
        std::set<int> years;
        for (std::size_t i : idxs) {
            if (attempts[i].date) years.insert(attempts[i].date->year);
        }
        if (years.empty()) continue;
        auto rng = make_rng(derive_seed(seed, hash_tag("collate_random"), row));
        std::vector<int> choices(years.begin(), years.end());
        const int year = choices[std::uniform_int_distribution<std::size_t>(
            0, choices.size() - 1)(rng)];
        for (std::size_t i : idxs) {
            const auto& a = attempts[i];
            if (!a.date || a.date->year != year) continue;
            auto col = catalog.index_of(a.event_label);
            if (!col) continue;
            const auto& existing = table.cell(row, *col);
            if (!existing || a.seconds < existing->value) {
                table.set(row, *col, a.seconds, a.date);
            }
        }
    }
    return table;
}

std::pair<PerformanceTable, std::vector<std::size_t>> remove_outliers(
    const PerformanceTable& table) {
    const std::size_t n = table.rows();
    const std::size_t n_remove = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n)));
    auto pct = event_percentiles(table);

    std::vector<double> score(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double lo = 0.0, hi = 0.0;
        bool any = false;
        for (std::size_t c = 0; c < table.cols(); ++c) {
            const auto& p = pct.at(r, c);
            if (!p) continue;
            if (!any) {
                lo = hi = *p;
                any = true;
            } else {
                lo = std::min(lo, *p);
                hi = std::max(hi, *p);
            }
        }
        score[r] = any ? hi - lo : 0.0;
    }

    // Highest score first; ties resolved by removing the larger row index.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a > b;
    });

    std::vector<std::size_t> removed(order.begin(), order.begin() + n_remove);
    std::sort(removed.begin(), removed.end());

    std::vector<std::size_t> kept;
    kept.reserve(n - n_remove);
    std::size_t k = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (k < removed.size() && removed[k] == r) {
            ++k;
        } else {
            kept.push_back(r);
        }
    }
    return {table.select_rows(kept), removed};
}

PerformanceTable subsample(const PerformanceTable& table, const SubsampleSpec& spec) {
    if (spec.percentile_range.first >= spec.percentile_range.second) {
        throw DataError("subsample: percentile range low must be below high");
    }

    // (a) subgroup filter: gender and age at best event.
    std::vector<std::size_t> rows;
    OptionalGrid pct_all = event_percentiles(table);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto& m = table.meta(r);
        if (spec.gender && m.gender != *spec.gender) continue;
        if (spec.age_range) {
            if (!m.birth_date) continue;
            // Best event: entry with the highest column percentile.
            std::optional<std::size_t> best_col;
            double best_p = -1.0;
            for (std::size_t c = 0; c < table.cols(); ++c) {
                const auto& p = pct_all.at(r, c);
                if (p && *p > best_p) {
                    best_p = *p;
                    best_col = c;
                }
            }
            if (!best_col) continue;
            const auto& cl = table.cell(r, *best_col);
            if (!cl->date) continue;
            const int age = years_between(*m.birth_date, *cl->date);
            if (age < spec.age_range->first || age > spec.age_range->second) continue;
        }
        rows.push_back(r);
    }

    // (b) degrees-of-freedom constraint.
    std::vector<std::size_t> rows_b;
    for (auto r : rows) {
        if (table.row_present_count(r) >= spec.min_events) rows_b.push_back(r);
    }
    PerformanceTable stage = table.select_rows(rows_b);
    if (stage.rows() == 0) throw DataError("empty subsample");

    // (c) percentile band on each row's best recomputed percentile.
    OptionalGrid pct = event_percentiles(stage);
    std::vector<std::optional<double>> best(stage.rows());
    for (std::size_t r = 0; r < stage.rows(); ++r) {
        double b = -1.0;
        bool any = false;
        for (std::size_t c = 0; c < stage.cols(); ++c) {
            const auto& p = pct.at(r, c);
            if (p) {
                b = std::max(b, *p);
                any = true;
            }
        }
        if (any) best[r] = b;
    }
    auto score_pct = percentiles_of(best, /*larger_is_worse=*/false);

    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < stage.rows(); ++r) {
        if (!score_pct[r]) {
            // Rows with no entries have no score; only the all-pass band
            // keeps them.
            if (spec.percentile_range.first <= 0.0 && spec.percentile_range.second >= 100.0) {
                keep.push_back(r);
            }
            continue;
        }
        if (*score_pct[r] >= spec.percentile_range.first &&
            *score_pct[r] <= spec.percentile_range.second) {
            keep.push_back(r);
        }
    }
    if (keep.empty()) throw DataError("empty subsample");
    return stage.select_rows(keep);
}

}  // namespace runpred
