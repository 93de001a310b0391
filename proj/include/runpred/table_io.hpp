#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "runpred/table.hpp"

namespace runpred {

// TSV grid (rows = athletes, columns = events, empty cell = missing) plus a
// JSON sidecar holding athlete metadata, per-entry dates, the catalog and the
// parameterization tag. Values are written with full double precision so a
// round trip is bit-exact.

void write_table_tsv(const PerformanceTable& table, std::ostream& out);
void write_table_meta(const PerformanceTable& table, std::ostream& out,
                      const std::map<std::string, std::string>& provenance = {});

void save_table(const PerformanceTable& table, const std::string& prefix,
                const std::map<std::string, std::string>& provenance = {});

// Reads `prefix`.tsv and `prefix`.meta.json.
PerformanceTable load_table(const std::string& prefix);

PerformanceTable read_table(std::istream& tsv, std::istream& meta);

// Full-precision decimal rendering of a double (shortest round-trippable).
std::string format_double(double v);

}  // namespace runpred
