#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "runpred/lmc.hpp"
#include "runpred/table.hpp"

namespace runpred {

// Uniform prediction interface: given a table with the target entry hidden,
// produce a point estimate in the table's parameterization.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual std::string name() const = 0;
    // Present entries the query row must retain for the method to apply.
    virtual std::size_t min_row_events() const { return 1; }
    // One-time hook before a validation run (hyper-parameter selection).
    virtual void prepare(const PerformanceTable& table) { (void)table; }
    virtual double predict(const PerformanceTable& table, std::size_t row,
                           std::size_t col) const = 0;
};

struct PredictorOptions {
    int knn_k = 5;
    std::optional<double> nuclear_lambda;
    LmcConfig lmc;
    std::uint64_t seed = 0;
};

// Known names: mean, knn, riegel, powerlaw, ind-powerlaw, purdy, em, nuclear,
// lmc1..lmc4 (suffix "-bagged" for the bagged event selection).
std::unique_ptr<Predictor> make_predictor(const std::string& name,
                                          const PredictorOptions& options = {});

std::vector<std::string> predictor_names();

// Test-harness predictor that returns the entry of a reference table.
class OraclePredictor : public Predictor {
public:
    explicit OraclePredictor(PerformanceTable reference) : reference_(std::move(reference)) {}
    std::string name() const override { return "oracle"; }
    std::size_t min_row_events() const override { return 0; }
    double predict(const PerformanceTable&, std::size_t row, std::size_t col) const override {
        auto v = reference_.value(row, col);
        if (!v) throw DataError("oracle: reference entry missing");
        return *v;
    }

private:
    PerformanceTable reference_;
};

// Conversions between an entry value and plain seconds for a given column,
// honoring the table's parameterization.
double entry_to_time(const PerformanceTable& table, std::size_t col, double value);
double time_to_entry(const PerformanceTable& table, std::size_t col, double time_s);

// The present event of `row` closest to `col` in log-distance (ties prefer
// the shorter distance); nullopt when the row has no other entry.
std::optional<std::size_t> log_closest_event(const PerformanceTable& table, std::size_t row,
                                             std::size_t col);

}  // namespace runpred
