#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "runpred/analysis.hpp"
#include "runpred/eval.hpp"
#include "runpred/lmc.hpp"
#include "runpred/lowrank.hpp"

namespace runpred {

// Key/value pairs stamped into every artifact (seed, config hash).
using Provenance = std::map<std::string, std::string>;

void write_validation_tsv(const ValidationReport& report, const EventCatalog& catalog,
                          const Provenance& prov, std::ostream& out);
void write_validation_json(const ValidationReport& report, const EventCatalog& catalog,
                           const Provenance& prov, std::ostream& out);

void write_comparison_tsv(const MethodComparison& cmp, const Provenance& prov, std::ostream& out);
void write_comparison_json(const MethodComparison& cmp, const Provenance& prov, std::ostream& out);

void write_model_json(const ComponentModel& model, const Provenance& prov, std::ostream& out);

void write_impute_report_json(const ImputeReport& report, const Provenance& prov,
                              std::ostream& out);

void write_pivot_tsv(const PivotResult& result, const EventCatalog& catalog,
                     const Provenance& prov, std::ostream& out);

}  // namespace runpred
