#include "runpred/predictors.hpp"

#include <cmath>

#include "runpred/baselines.hpp"
#include "runpred/purdy.hpp"
#include "runpred/rng.hpp"

namespace runpred {

double entry_to_time(const PerformanceTable& table, std::size_t col, double value) {
    switch (table.parameterization()) {
        case Parameterization::time: return value;
        case Parameterization::log_time: return std::exp(value);
        case Parameterization::speed: return table.catalog().distance(col) / value;
        case Parameterization::normalized: {
            if (table.normalization_means().empty()) {
                throw DataError("entry_to_time: normalized table lacks column means");
            }
            return value * table.normalization_means()[col];
        }
    }
    return value;
}

double time_to_entry(const PerformanceTable& table, std::size_t col, double time_s) {
    switch (table.parameterization()) {
        case Parameterization::time: return time_s;
        case Parameterization::log_time: return std::log(time_s);
        case Parameterization::speed: return table.catalog().distance(col) / time_s;
        case Parameterization::normalized: {
            if (table.normalization_means().empty()) {
                throw DataError("time_to_entry: normalized table lacks column means");
            }
            return time_s / table.normalization_means()[col];
        }
    }
    return time_s;
}

std::optional<std::size_t> log_closest_event(const PerformanceTable& table, std::size_t row,
                                             std::size_t col) {
    const double target = std::log(table.catalog().distance(col));
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (c == col || !table.present(row, c)) continue;
        const double d = std::abs(std::log(table.catalog().distance(c)) - target);
        if (!best || d < best_d ||
            (d == best_d && table.catalog().distance(c) < table.catalog().distance(*best))) {
            best = c;
            best_d = d;
        }
    }
    return best;
}

namespace {

class MeanPredictor : public Predictor {
public:
    std::string name() const override { return "mean"; }
    std::size_t min_row_events() const override { return 0; }
    double predict(const PerformanceTable& t, std::size_t r, std::size_t c) const override {
        return predict_mean(t, r, c);
    }
};

class KnnPredictor : public Predictor {
public:
    explicit KnnPredictor(int k) : k_(k) {}
    std::string name() const override { return "knn"; }
    double predict(const PerformanceTable& t, std::size_t r, std::size_t c) const override {
        return predict_knn(t, r, c, k_);
    }

private:
    int k_;
};

// Single-source methods use the log-closest attempted event in time units
// and convert back to the table's parameterization.
class RiegelPredictor : public Predictor {
public:
    std::string name() const override { return "riegel"; }
    double predict(const PerformanceTable& t, std::size_t r, std::size_t c) const override {
        auto src = log_closest_event(t, r, c);
        if (!src) throw DataError("riegel: athlete has no source event");
        const double t_src = entry_to_time(t, *src, *t.value(r, *src));
        const double pred = predict_riegel(t.catalog().distance(*src), t_src,
                                           t.catalog().distance(c));
        return time_to_entry(t, c, pred);
    }
};

class PurdyPredictor : public Predictor {
public:
    std::string name() const override { return "purdy"; }
    double predict(const PerformanceTable& t, std::size_t r, std::size_t c) const override {
        auto src = log_closest_event(t, r, c);
        if (!src) throw DataError("purdy: athlete has no source event");
        const double t_src = entry_to_time(t, *src, *t.value(r, *src));
        const double pred =
            predict_purdy(t.catalog().distance(*src), t_src, t.catalog().distance(c));
        return time_to_entry(t, c, pred);
    }
};

class PowerLawPredictor : public Predictor {
public:
    explicit PowerLawPredictor(bool per_athlete) : per_athlete_(per_athlete) {}
    std::string name() const override { return per_athlete_ ? "ind-powerlaw" : "powerlaw"; }
    std::size_t min_row_events() const override { return per_athlete_ ? 2 : 1; }
    double predict(const PerformanceTable& t, std::size_t r, std::size_t c) const override {
        PerformanceTable time_table = reparameterize(t, Parameterization::time);
        const double pred = predict_power_law(time_table, r, c, per_athlete_);
        return time_to_entry(t, c, pred);
    }

private:
    bool per_athlete_;
};

class EmPredictor : public Predictor {
public:
    std::string name() const override { return "em"; }
    std::size_t min_row_events() const override { return 0; }
    double predict(const PerformanceTable& t, std::size_t r, std::size_t c) const override {
        // EM always models the log-time data.
        PerformanceTable lt = reparameterize(t, Parameterization::log_time);
        auto result = em_impute(lt);
        const double pred_time = std::exp(*result.table.value(r, c));
        return time_to_entry(t, c, pred_time);
    }
};

class NuclearPredictor : public Predictor {
public:
    explicit NuclearPredictor(std::optional<double> lambda, std::uint64_t seed)
        : lambda_(lambda), seed_(seed) {}
    std::string name() const override { return "nuclear"; }
    std::size_t min_row_events() const override { return 0; }
    void prepare(const PerformanceTable& table) override {
        if (!lambda_) lambda_ = select_nuclear_lambda(table, seed_);
    }
    double predict(const PerformanceTable& t, std::size_t r, std::size_t c) const override {
        auto result = nuclear_norm_impute(t, lambda_, 1e-6, 500, seed_);
        return *result.table.value(r, c);
    }

private:
    std::optional<double> lambda_;
    std::uint64_t seed_;
};

class LmcPredictor : public Predictor {
public:
    LmcPredictor(const LmcConfig& config, bool bagged) : config_(config), bagged_(bagged) {}
    std::string name() const override {
        return "lmc" + std::to_string(config_.rank) + (bagged_ ? "-bagged" : "");
    }
    std::size_t min_row_events() const override {
        return static_cast<std::size_t>(config_.rank);
    }
    double predict(const PerformanceTable& t, std::size_t r, std::size_t c) const override {
        // Per-entry seed so parallel holdouts stay order-independent.
        LmcConfig cfg = config_;
        cfg.seed = derive_seed(config_.seed, hash_tag("lmc_call"), r, c);
        if (bagged_) return lmc_predict_bagged(t, r, c, cfg);
        return lmc_predict_detailed(t, r, c, cfg).estimate;
    }

private:
    LmcConfig config_;
    bool bagged_;
};

}  // namespace

std::unique_ptr<Predictor> make_predictor(const std::string& name,
                                          const PredictorOptions& options) {
    if (name == "mean") return std::make_unique<MeanPredictor>();
    if (name == "knn") return std::make_unique<KnnPredictor>(options.knn_k);
    if (name == "riegel") return std::make_unique<RiegelPredictor>();
    if (name == "powerlaw") return std::make_unique<PowerLawPredictor>(false);
    if (name == "ind-powerlaw") return std::make_unique<PowerLawPredictor>(true);
    if (name == "purdy") return std::make_unique<PurdyPredictor>();
    if (name == "em") return std::make_unique<EmPredictor>();
    if (name == "nuclear") {
        return std::make_unique<NuclearPredictor>(options.nuclear_lambda, options.seed);
    }
    std::string base = name;
    bool bagged = false;
    const std::string suffix = "-bagged";
    if (base.size() > suffix.size() && base.substr(base.size() - suffix.size()) == suffix) {
        bagged = true;
        base = base.substr(0, base.size() - suffix.size());
    }
    if (base.size() == 4 && base.rfind("lmc", 0) == 0 && base[3] >= '1' && base[3] <= '4') {
        LmcConfig cfg = options.lmc;
        cfg.rank = base[3] - '0';
        if (cfg.seed == 0) cfg.seed = options.seed;
        return std::make_unique<LmcPredictor>(cfg, bagged);
    }
    throw DataError("unknown prediction method: " + name);
}

std::vector<std::string> predictor_names() {
    return {"mean",  "knn",     "riegel", "powerlaw", "ind-powerlaw", "purdy",
            "em",    "nuclear", "lmc1",   "lmc2",     "lmc3",         "lmc4"};
}

}  // namespace runpred
