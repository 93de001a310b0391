#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "runpred/catalog.hpp"
#include "runpred/date.hpp"

namespace runpred {

// Thrown on malformed or insufficient input data. The CLI maps this to exit
// code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Gender { male, female, unknown };

enum class Parameterization { time, normalized, log_time, speed };

std::string to_string(Gender g);
std::string to_string(Parameterization p);
Gender gender_from_string(const std::string& s);
Parameterization parameterization_from_string(const std::string& s);

struct AthleteMeta {
    std::int64_t id = 0;
    Gender gender = Gender::unknown;
    std::optional<Date> birth_date;
};

struct Cell {
    double value = 0.0;
    std::optional<Date> date;
};

// Athletes x events grid of optional performances. The grid is the central
// object of the pipeline; operations treat it as immutable and return copies.
class PerformanceTable {
public:
    PerformanceTable() = default;
    PerformanceTable(EventCatalog catalog, std::size_t n_rows);

    std::size_t rows() const { return meta_.size(); }
    std::size_t cols() const { return catalog_.size(); }
    const EventCatalog& catalog() const { return catalog_; }

    Parameterization parameterization() const { return param_; }
    void set_parameterization(Parameterization p) { param_ = p; }

    // Column means captured when the table was normalized; needed to invert
    // back to time coordinates.
    const std::vector<double>& normalization_means() const { return norm_means_; }
    void set_normalization_means(std::vector<double> m) { norm_means_ = std::move(m); }

    const std::optional<Cell>& cell(std::size_t r, std::size_t c) const {
        return cells_[r * cols() + c];
    }
    bool present(std::size_t r, std::size_t c) const { return cell(r, c).has_value(); }
    std::optional<double> value(std::size_t r, std::size_t c) const {
        const auto& cl = cell(r, c);
        if (!cl) return std::nullopt;
        return cl->value;
    }

    void set(std::size_t r, std::size_t c, double value, std::optional<Date> date = std::nullopt) {
        cells_[r * cols() + c] = Cell{value, date};
    }
    void clear(std::size_t r, std::size_t c) { cells_[r * cols() + c].reset(); }

    AthleteMeta& meta(std::size_t r) { return meta_[r]; }
    const AthleteMeta& meta(std::size_t r) const { return meta_[r]; }

    std::size_t row_present_count(std::size_t r) const;
    std::size_t col_present_count(std::size_t c) const;
    std::size_t present_count() const;

    // New table containing only the given rows, in the given order.
    PerformanceTable select_rows(const std::vector<std::size_t>& rows) const;

private:
    EventCatalog catalog_;
    std::vector<AthleteMeta> meta_;
    std::vector<std::optional<Cell>> cells_;  // row-major
    Parameterization param_ = Parameterization::time;
    std::vector<double> norm_means_;
};

// Same-shape grid of optional values (percentiles, scores, ...).
struct OptionalGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::optional<double>> data;

    OptionalGrid() = default;
    OptionalGrid(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
    std::optional<double>& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const std::optional<double>& at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct AthleteSummary {
    std::vector<std::optional<double>> percentiles;  // one per event
    double preferred_distance = 0.0;
    double training_standard = 0.0;
    std::size_t n_events = 0;
};

// Percentiles of the given values, mid-rank tie handling, 0 = worst and
// 100 = best. With `larger_is_worse` (times) the largest value scores 0.
// Convention: 100 * (count strictly worse + (ties-1)/2) / (count - 1);
// a single value scores 50.
std::vector<std::optional<double>> percentiles_of(
    const std::vector<std::optional<double>>& values, bool larger_is_worse = true);

// Percentile an external value v would take inside `values` (denominator is
// the count of values, mid-rank for equals).
double percentile_of_value(const std::vector<std::optional<double>>& values, double v,
                           bool larger_is_worse = true);

// Per-event percentiles of every present entry; missing stays missing.
// Requires time parameterization.
OptionalGrid event_percentiles(const PerformanceTable& table);

// Geometric mean of the distances of the athlete's attempted events.
double preferred_distance(const PerformanceTable& table, std::size_t row);

// Arithmetic mean of the present percentiles.
double training_standard(const std::vector<std::optional<double>>& percentile_row);

AthleteSummary athlete_summary(const PerformanceTable& table, const OptionalGrid& percentiles,
                               std::size_t row);

// Re-express all present entries in the target parameterization. Any source
// parameterization is supported; the transform round-trips through time.
PerformanceTable reparameterize(const PerformanceTable& table, Parameterization target);

}  // namespace runpred
