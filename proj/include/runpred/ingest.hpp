#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "runpred/table.hpp"

namespace runpred {

struct RawAttempt {
    std::int64_t athlete_id = 0;
    std::string event_label;
    std::optional<Date> date;
    double seconds = 0.0;
};

struct RecordEntry {
    Date effective;
    double seconds = 0.0;
};

// Per-event world-record progression, each list sorted by effective date.
using WorldRecords = std::map<std::string, std::vector<RecordEntry>>;

// Record in force at `when` (the latest entry effective on or before it).
// Missing date falls back to the best record ever, the most lenient bound.
std::optional<double> record_in_force(const WorldRecords& records, const std::string& event,
                                      const std::optional<Date>& when);

// Bundled record progression; data/world_records.json ships the same table.
const WorldRecords& default_world_records();
WorldRecords load_world_records(std::istream& in);

struct CleaningConfig {
    WorldRecords world_records = default_world_records();
    double slow_threshold_factor = 3.0;
    int min_age_years = 9;
    Date sentinel_birth_date{1900, 1, 1};
    std::vector<Date> sentinel_attempt_dates{{1901, 1, 1}, {2038, 8, 20}};
};

struct CleanReport {
    std::size_t birth_dates_cleared = 0;   // sentinel birth dates
    std::size_t underage_cleared = 0;      // implied age below minimum
    std::size_t attempt_dates_cleared = 0; // sentinel attempt dates
    std::size_t record_beating_removed = 0;
    std::size_t extremely_slow_removed = 0;
};

struct CleanResult {
    std::vector<RawAttempt> attempts;
    std::vector<AthleteMeta> athletes;
    CleanReport report;
};

struct SubsampleSpec {
    std::optional<Gender> gender;
    std::optional<std::pair<double, double>> age_range;  // age at best event, inclusive
    std::size_t min_events = 0;
    std::pair<double, double> percentile_range{0.0, 100.0};  // inclusive
};

// athletes.csv: header athlete_id,gender,birth_date
std::vector<AthleteMeta> parse_athletes(std::istream& in);
// events.csv: header athlete_id,event,date,performance
std::vector<RawAttempt> parse_attempts(std::istream& in);

std::vector<AthleteMeta> load_athletes(const std::string& path);
std::vector<RawAttempt> load_attempts(const std::string& path);

CleanResult clean(std::vector<RawAttempt> attempts, std::vector<AthleteMeta> athletes,
                  const CleaningConfig& config);

// One row per athlete: best performance per event inside the 365-day window
// ending at the athlete's best event (highest attempt percentile).
PerformanceTable collate_best(const std::vector<RawAttempt>& attempts,
                              const std::vector<AthleteMeta>& athletes,
                              const EventCatalog& catalog);

// One row per athlete: best performance per event within one uniformly chosen
// calendar year among those the athlete competed in.
PerformanceTable collate_random(const std::vector<RawAttempt>& attempts,
                                const std::vector<AthleteMeta>& athletes,
                                const EventCatalog& catalog, std::uint64_t seed);

// Removes the ceil(5%) of rows with the largest percentile spread.
std::pair<PerformanceTable, std::vector<std::size_t>> remove_outliers(
    const PerformanceTable& table);

PerformanceTable subsample(const PerformanceTable& table, const SubsampleSpec& spec);

}  // namespace runpred
