// runpred: local low-rank matrix completion for running-performance
// prediction, with the baseline suite, validation harness, model extraction,
// synthetic generator and analysis experiments behind one executable.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "runpred/analysis.hpp"
#include "runpred/baselines.hpp"
#include "runpred/eval.hpp"
#include "runpred/ingest.hpp"
#include "runpred/lmc.hpp"
#include "runpred/lowrank.hpp"
#include "runpred/predictors.hpp"
#include "runpred/purdy.hpp"
#include "runpred/report_io.hpp"
#include "runpred/rng.hpp"
#include "runpred/synth.hpp"
#include "runpred/table_io.hpp"

using namespace runpred;
using nlohmann::json;

namespace {

int default_threads() {
    if (const char* env = std::getenv("RUNPRED_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

std::uint64_t config_hash(const json& config) {
    return hash_tag(config.dump());
}

std::string hash_string(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Footer {
    std::string subcommand;
    json config = json::object();
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    Provenance provenance() const {
        return {{"seed", std::to_string(seed)}, {"config_hash", hash_string(config_hash(config))}};
    }

    void print() const {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        json j;
        j["subcommand"] = subcommand;
        j["seed"] = seed;
        j["config"] = config;
        j["config_hash"] = hash_string(config_hash(config));
        j["outputs"] = outputs;
        j["timing_ms"] = elapsed;
        std::cout << j.dump() << '\n';
    }
};

std::size_t event_index(const EventCatalog& catalog, const std::string& label) {
    if (auto i = catalog.index_of(label)) return *i;
    // Case-insensitive fallback so "marathon" finds "Marathon".
    std::string lower = label;
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(ch));
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        std::string l = catalog[i].label;
        for (auto& ch : l) ch = static_cast<char>(std::tolower(ch));
        if (l == lower) return i;
    }
    throw DataError("unknown event: " + label);
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& writer,
                Footer& footer) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    writer(out);
    footer.outputs.push_back(path);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Flat JSON config file; keys are the long option names and override any
// flags given on the command line.
json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path);
    return json::parse(in);
}

template <typename T>
void apply(const json& cfg, const char* key, T& field) {
    if (cfg.contains(key)) field = cfg.at(key).get<T>();
}

WorldRecords records_from_flag(const std::string& path) {
    if (path.empty()) return default_world_records();
    std::ifstream in(path);
    if (!in) throw DataError("cannot open records file " + path);
    return load_world_records(in);
}

Eigen::VectorXd parse_vector(const std::vector<double>& values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
    return v;
}

struct CommonOpts {
    std::uint64_t seed = 0;
    int threads = default_threads();
    std::string config_path;
    std::string out_prefix;

    void attach(CLI::App* app, bool needs_out) {
        app->add_option("--seed", seed, "Root seed; all stage seeds derive from it");
        app->add_option("--threads", threads, "Worker threads (env RUNPRED_THREADS)");
        app->add_option("--config", config_path, "JSON config file overriding flags");
        auto* opt = app->add_option("-o,--out", out_prefix, "Output path prefix");
        if (needs_out) opt->required();
    }

    json maybe_config() const {
        return config_path.empty() ? json::object() : load_config_file(config_path);
    }
};

PredictorOptions predictor_options(std::uint64_t seed, int circuits, int knn_k, bool bagged,
                                   double nuclear_lambda) {
    PredictorOptions opt;
    opt.seed = seed;
    opt.knn_k = knn_k;
    opt.lmc.n_circuits = circuits;
    opt.lmc.seed = derive_seed(seed, hash_tag("predictor"));
    opt.lmc.event_selection = bagged ? EventSelection::bagged : EventSelection::log_closest;
    if (nuclear_lambda > 0.0) opt.nuclear_lambda = nuclear_lambda;
    return opt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Running-performance prediction via local matrix completion"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic athlete population");
    CommonOpts synth_common;
    synth_common.attach(synth_cmd, true);
    std::size_t synth_athletes = 1000;
    double synth_noise = 0.0;
    std::string synth_missing = "none";
    std::size_t synth_k = 6;
    std::vector<double> synth_mean, synth_std;
    synth_cmd->add_option("--athletes", synth_athletes, "Number of athletes");
    synth_cmd->add_option("--noise", synth_noise, "Noise std in log-time units");
    synth_cmd->add_option("--missing", synth_missing, "none|uniform_k|consecutive_k");
    synth_cmd->add_option("--k", synth_k, "Entries removed (uniform_k) or kept (consecutive_k)");
    synth_cmd->add_option("--coeff-mean", synth_mean, "Coefficient means (three values)");
    synth_cmd->add_option("--coeff-std", synth_std, "Coefficient stds (three values)");

    // ---- ingest / clean / collate ----
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse, clean, collate and de-outlier");
    auto* clean_cmd = app.add_subcommand("clean", "Apply the cleaning rules to raw CSVs");
    auto* collate_cmd = app.add_subcommand("collate", "Collate cleaned attempts into a table");
    CommonOpts ingest_common, clean_common, collate_common;
    ingest_common.attach(ingest_cmd, true);
    clean_common.attach(clean_cmd, true);
    collate_common.attach(collate_cmd, true);
    std::string in_athletes, in_events, in_mode = "best", in_records;
    double in_slow_factor = 3.0;
    int in_min_age = 9;
    bool in_keep_outliers = false, collate_outliers = false;
    for (auto* cmd : {ingest_cmd, clean_cmd, collate_cmd}) {
        cmd->add_option("--athletes", in_athletes, "athletes.csv path")->required();
        cmd->add_option("--events", in_events, "events.csv path")->required();
    }
    std::string in_sentinel_birth = "1900-01-01";
    std::vector<std::string> in_sentinel_dates = {"1901-01-01", "2038-08-20"};
    for (auto* cmd : {ingest_cmd, clean_cmd}) {
        cmd->add_option("--records", in_records, "World-record progression JSON");
        cmd->add_option("--slow-factor", in_slow_factor, "Extremely-slow threshold factor");
        cmd->add_option("--min-age", in_min_age, "Minimum plausible age in years");
        cmd->add_option("--sentinel-birth", in_sentinel_birth, "Birth date treated as missing");
        cmd->add_option("--sentinel-attempt-dates", in_sentinel_dates,
                        "Attempt dates treated as missing");
    }
    for (auto* cmd : {ingest_cmd, collate_cmd}) {
        cmd->add_option("--mode", in_mode, "best|random");
    }
    ingest_cmd->add_flag("--keep-outliers", in_keep_outliers, "Skip outlier-row removal");
    collate_cmd->add_flag("--remove-outliers", collate_outliers, "Remove outlier rows");

    // ---- subsample ----
    auto* subsample_cmd = app.add_subcommand("subsample", "Row-filter a table");
    CommonOpts subsample_common;
    subsample_common.attach(subsample_cmd, true);
    std::string sub_table, sub_gender;
    double sub_age_min = -1.0, sub_age_max = -1.0, sub_pct_low = 0.0, sub_pct_high = 100.0;
    std::size_t sub_min_events = 0;
    subsample_cmd->add_option("--table", sub_table, "Input table prefix")->required();
    subsample_cmd->add_option("--gender", sub_gender, "M|F");
    subsample_cmd->add_option("--age-min", sub_age_min, "Minimum age at best event");
    subsample_cmd->add_option("--age-max", sub_age_max, "Maximum age at best event");
    subsample_cmd->add_option("--min-events", sub_min_events, "Minimum present entries per row");
    subsample_cmd->add_option("--pct-low", sub_pct_low, "Percentile band low edge");
    subsample_cmd->add_option("--pct-high", sub_pct_high, "Percentile band high edge");

    // ---- predict ----
    auto* predict_cmd = app.add_subcommand("predict", "Predict one entry");
    CommonOpts predict_common;
    predict_common.attach(predict_cmd, false);
    std::string pr_table, pr_method = "lmc3", pr_event;
    std::size_t pr_row = 0;
    int pr_circuits = 400, pr_knn_k = 5;
    bool pr_bagged = false;
    double pr_lambda = 0.0;
    predict_cmd->add_option("--table", pr_table, "Input table prefix")->required();
    predict_cmd->add_option("--method", pr_method, "Prediction method name");
    predict_cmd->add_option("--row", pr_row, "Athlete row index")->required();
    predict_cmd->add_option("--event", pr_event, "Target event label")->required();
    predict_cmd->add_option("--circuits", pr_circuits, "Circuits per LMC prediction");
    predict_cmd->add_option("--knn-k", pr_knn_k, "Neighbors for knn");
    predict_cmd->add_flag("--bagged", pr_bagged, "Bagged event selection for LMC");
    predict_cmd->add_option("--lambda", pr_lambda, "Nuclear-norm regularization");

    // ---- impute ----
    auto* impute_cmd = app.add_subcommand("impute", "Complete a table with LMC");
    CommonOpts impute_common;
    impute_common.attach(impute_cmd, true);
    std::string im_table;
    int im_rank = 3, im_circuits = 400;
    impute_cmd->add_option("--table", im_table, "Input table prefix")->required();
    impute_cmd->add_option("--rank", im_rank, "LMC rank");
    impute_cmd->add_option("--circuits", im_circuits, "Circuits per prediction");

    // ---- validate / compare ----
    auto* validate_cmd = app.add_subcommand("validate", "Leave-one-out validation of one method");
    auto* compare_cmd = app.add_subcommand("compare", "Paired comparison of several methods");
    CommonOpts validate_common, compare_common;
    validate_common.attach(validate_cmd, true);
    compare_common.attach(compare_cmd, true);
    std::string va_table, va_method = "lmc2", va_methods = "mean,riegel,purdy,lmc2",
                va_mode = "all", va_param, va_reference;
    std::size_t va_holdouts = 1000;
    int va_boot = 200, va_circuits = 400, va_knn_k = 5;
    double va_fastest = 1.0, va_lambda = 0.0;
    for (auto* cmd : {validate_cmd, compare_cmd}) {
        cmd->add_option("--table", va_table, "Input table prefix")->required();
        cmd->add_option("--holdouts", va_holdouts, "Number of leave-one-out holdouts");
        cmd->add_option("--mode", va_mode, "all|causal");
        cmd->add_option("--boot", va_boot, "Bootstrap resamples for standard errors");
        cmd->add_option("--param", va_param, "Reparameterize first: time|normalized|log_time|speed");
        cmd->add_option("--fastest", va_fastest, "Keep only the fastest fraction per event");
        cmd->add_option("--circuits", va_circuits, "Circuits per LMC prediction");
        cmd->add_option("--knn-k", va_knn_k, "Neighbors for knn");
        cmd->add_option("--lambda", va_lambda, "Nuclear-norm regularization");
    }
    validate_cmd->add_option("--method", va_method, "Method to validate");
    compare_cmd->add_option("--methods", va_methods, "Comma-separated method names");
    compare_cmd->add_option("--reference", va_reference, "Reference method for the Wilcoxon test");

    // ---- components / summary ----
    auto* components_cmd = app.add_subcommand("components", "Extract the low-rank model");
    CommonOpts components_common;
    components_common.attach(components_cmd, true);
    std::string co_table, co_records;
    int co_rank = 3, co_impute_rank = 3, co_circuits = 400;
    bool co_pure_u = false;
    components_cmd->add_option("--table", co_table, "Input table prefix")->required();
    components_cmd->add_option("--rank", co_rank, "Model rank");
    components_cmd->add_option("--impute-rank", co_impute_rank, "LMC rank used to complete the table");
    components_cmd->add_option("--circuits", co_circuits, "Circuits per imputation");
    components_cmd->add_flag("--pure-u", co_pure_u, "Leave singular values out of coefficients");
    components_cmd->add_option("--records", co_records, "World-record times JSON to fit");
    std::string co_param;
    components_cmd->add_option("--param", co_param,
                               "Reparameterize first: time|normalized|log_time|speed");

    auto* summary_cmd = app.add_subcommand("summary", "Athlete summary and three-number summary");
    CommonOpts summary_common;
    summary_common.attach(summary_cmd, false);
    std::string su_table;
    std::size_t su_row = 0;
    int su_circuits = 400;
    summary_cmd->add_option("--table", su_table, "Input table prefix")->required();
    summary_cmd->add_option("--row", su_row, "Athlete row index")->required();
    summary_cmd->add_option("--circuits", su_circuits, "Circuits per imputation");

    // ---- fair-race / pivot / optimal ----
    auto* fair_cmd = app.add_subcommand("fair-race", "Fair racing distance for two athletes");
    CommonOpts fair_common;
    fair_common.attach(fair_cmd, false);
    std::string fr_table, fr_method = "lmc2";
    std::size_t fr_a = 0, fr_b = 0;
    int fr_boot = 100, fr_circuits = 400;
    fair_cmd->add_option("--table", fr_table, "Input table prefix")->required();
    fair_cmd->add_option("--a", fr_a, "First athlete row")->required();
    fair_cmd->add_option("--b", fr_b, "Second athlete row")->required();
    fair_cmd->add_option("--method", fr_method, "Prediction method");
    fair_cmd->add_option("--boot", fr_boot, "Bootstrap resamples for the interval");
    fair_cmd->add_option("--circuits", fr_circuits, "Circuits per LMC prediction");

    auto* pivot_cmd = app.add_subcommand("pivot", "Perturbation response of rank-2 predictions");
    CommonOpts pivot_common;
    pivot_common.attach(pivot_cmd, true);
    std::string pv_table;
    double pv_benchmark = 0.0;
    int pv_circuits = 400;
    pivot_cmd->add_option("--table", pv_table, "Input table prefix (log-time)")->required();
    pivot_cmd->add_option("--benchmark", pv_benchmark, "Marathon benchmark in seconds")->required();
    pivot_cmd->add_option("--circuits", pv_circuits, "Circuits per prediction");

    auto* optimal_cmd = app.add_subcommand("optimal", "Predicted-percentile profile of an athlete");
    CommonOpts optimal_common;
    optimal_common.attach(optimal_cmd, false);
    std::string op_table, op_method = "lmc2";
    std::size_t op_athlete = 0;
    int op_circuits = 400;
    optimal_cmd->add_option("--table", op_table, "Input table prefix")->required();
    optimal_cmd->add_option("--athlete", op_athlete, "Athlete row index")->required();
    optimal_cmd->add_option("--method", op_method, "Prediction method");
    optimal_cmd->add_option("--circuits", op_circuits, "Circuits per prediction");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n' << app.help() << '\n';
        return 1;
    }

    Footer footer;
    try {
        if (synth_cmd->parsed()) {
            const json cfg = synth_common.maybe_config();
            apply(cfg, "athletes", synth_athletes);
            apply(cfg, "noise", synth_noise);
            apply(cfg, "missing", synth_missing);
            apply(cfg, "k", synth_k);
            apply(cfg, "seed", synth_common.seed);
            footer.subcommand = "synth";
            footer.seed = synth_common.seed;
            footer.config = {{"athletes", synth_athletes}, {"noise", synth_noise},
                             {"missing", synth_missing},   {"k", synth_k},
                             {"seed", synth_common.seed}};

            auto spec = default_synth_spec(synth_athletes, synth_noise,
                                           derive_seed(synth_common.seed, hash_tag("synth")));
            if (!synth_mean.empty()) spec.coeff_mean = parse_vector(synth_mean);
            if (!synth_std.empty()) spec.coeff_std = parse_vector(synth_std);
            if (cfg.contains("components")) {
                const auto& rows = cfg.at("components");
                spec.components.resize(static_cast<Eigen::Index>(rows.size()),
                                       static_cast<Eigen::Index>(spec.catalog.size()));
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    auto row = rows[i].get<std::vector<double>>();
                    if (row.size() != spec.catalog.size()) {
                        throw DataError("components rows must have one value per event");
                    }
                    for (std::size_t j = 0; j < row.size(); ++j) {
                        spec.components(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j)) = row[j];
                    }
                }
            }
            if (cfg.contains("coeff-mean")) {
                spec.coeff_mean = parse_vector(cfg.at("coeff-mean").get<std::vector<double>>());
            }
            if (cfg.contains("coeff-std")) {
                spec.coeff_std = parse_vector(cfg.at("coeff-std").get<std::vector<double>>());
            }
            auto table = generate(spec).table;
            if (synth_missing == "uniform_k") {
                table = apply_missingness(table, MissingScheme::uniform_k, synth_k,
                                          derive_seed(synth_common.seed, hash_tag("missing")));
            } else if (synth_missing == "consecutive_k") {
                table = apply_missingness(table, MissingScheme::consecutive_k, synth_k,
                                          derive_seed(synth_common.seed, hash_tag("missing")));
            } else if (synth_missing != "none") {
                throw DataError("unknown missingness scheme: " + synth_missing);
            }
            save_table(table, synth_common.out_prefix, footer.provenance());
            footer.outputs.push_back(synth_common.out_prefix + ".tsv");
            footer.outputs.push_back(synth_common.out_prefix + ".meta.json");
        } else if (ingest_cmd->parsed() || clean_cmd->parsed() || collate_cmd->parsed()) {
            CommonOpts& common = ingest_cmd->parsed()   ? ingest_common
                                 : clean_cmd->parsed()  ? clean_common
                                                        : collate_common;
            const json cfg = common.maybe_config();
            apply(cfg, "mode", in_mode);
            apply(cfg, "slow-factor", in_slow_factor);
            apply(cfg, "min-age", in_min_age);
            apply(cfg, "seed", common.seed);
            footer.subcommand = ingest_cmd->parsed() ? "ingest"
                                : clean_cmd->parsed() ? "clean"
                                                      : "collate";
            footer.seed = common.seed;
            footer.config = {{"athletes", in_athletes}, {"events", in_events},
                             {"mode", in_mode},         {"slow_factor", in_slow_factor},
                             {"min_age", in_min_age},   {"seed", common.seed}};

            auto athletes = load_athletes(in_athletes);
            auto attempts = load_attempts(in_events);

            CleaningConfig clean_cfg;
            clean_cfg.world_records = records_from_flag(in_records);
            clean_cfg.slow_threshold_factor = in_slow_factor;
            clean_cfg.min_age_years = in_min_age;
            if (auto d = parse_date(in_sentinel_birth)) {
                clean_cfg.sentinel_birth_date = *d;
            } else {
                throw DataError("bad --sentinel-birth date");
            }
            clean_cfg.sentinel_attempt_dates.clear();
            for (const auto& ds : in_sentinel_dates) {
                if (auto d = parse_date(ds)) {
                    clean_cfg.sentinel_attempt_dates.push_back(*d);
                } else {
                    throw DataError("bad sentinel attempt date: " + ds);
                }
            }

            if (clean_cmd->parsed()) {
                auto result = clean(std::move(attempts), std::move(athletes), clean_cfg);
                write_file(common.out_prefix + ".athletes.csv", [&](std::ostream& out) {
                    out << "athlete_id,gender,birth_date\n";
                    for (const auto& m : result.athletes) {
                        out << m.id << ',' << to_string(m.gender) << ','
                            << (m.birth_date ? format_date(*m.birth_date) : "") << '\n';
                    }
                }, footer);
                write_file(common.out_prefix + ".events.csv", [&](std::ostream& out) {
                    out << "athlete_id,event,date,performance\n";
                    for (const auto& a : result.attempts) {
                        out << a.athlete_id << ',' << a.event_label << ','
                            << (a.date ? format_date(*a.date) : "") << ','
                            << format_double(a.seconds) << '\n';
                    }
                }, footer);
                write_file(common.out_prefix + ".report.json", [&](std::ostream& out) {
                    json r = {{"birth_dates_cleared", result.report.birth_dates_cleared},
                              {"underage_cleared", result.report.underage_cleared},
                              {"attempt_dates_cleared", result.report.attempt_dates_cleared},
                              {"record_beating_removed", result.report.record_beating_removed},
                              {"extremely_slow_removed", result.report.extremely_slow_removed}};
                    json j = {{"provenance", {{"seed", footer.seed}}}, {"report", r}};
                    out << j.dump(2) << '\n';
                }, footer);
            } else {
                json report_json = json::object();
                if (ingest_cmd->parsed()) {
                    auto result = clean(std::move(attempts), std::move(athletes), clean_cfg);
                    attempts = std::move(result.attempts);
                    athletes = std::move(result.athletes);
                    report_json["cleaning"] = {
                        {"birth_dates_cleared", result.report.birth_dates_cleared},
                        {"underage_cleared", result.report.underage_cleared},
                        {"attempt_dates_cleared", result.report.attempt_dates_cleared},
                        {"record_beating_removed", result.report.record_beating_removed},
                        {"extremely_slow_removed", result.report.extremely_slow_removed}};
                }
                auto catalog = EventCatalog::standard();
                PerformanceTable table =
                    in_mode == "random"
                        ? collate_random(attempts, athletes, catalog,
                                         derive_seed(common.seed, hash_tag("collate_random")))
                        : collate_best(attempts, athletes, catalog);
                if (in_mode != "best" && in_mode != "random") {
                    throw DataError("unknown collation mode: " + in_mode);
                }
                const bool drop_outliers =
                    ingest_cmd->parsed() ? !in_keep_outliers : collate_outliers;
                if (drop_outliers) {
                    auto [kept, removed] = remove_outliers(table);
                    table = std::move(kept);
                    report_json["outlier_rows_removed"] = removed;
                }
                save_table(table, common.out_prefix, footer.provenance());
                footer.outputs.push_back(common.out_prefix + ".tsv");
                footer.outputs.push_back(common.out_prefix + ".meta.json");
                if (!report_json.empty()) {
                    write_file(common.out_prefix + ".report.json", [&](std::ostream& out) {
                        out << report_json.dump(2) << '\n';
                    }, footer);
                }
            }
        } else if (subsample_cmd->parsed()) {
            const json cfg = subsample_common.maybe_config();
            apply(cfg, "min-events", sub_min_events);
            apply(cfg, "pct-low", sub_pct_low);
            apply(cfg, "pct-high", sub_pct_high);
            footer.subcommand = "subsample";
            footer.seed = subsample_common.seed;
            footer.config = {{"table", sub_table},       {"gender", sub_gender},
                             {"min_events", sub_min_events}, {"pct_low", sub_pct_low},
                             {"pct_high", sub_pct_high}};

            auto table = load_table(sub_table);
            SubsampleSpec spec;
            if (!sub_gender.empty()) spec.gender = gender_from_string(sub_gender);
            if (sub_age_min >= 0.0 || sub_age_max >= 0.0) {
                spec.age_range = {{sub_age_min < 0.0 ? 0.0 : sub_age_min,
                                   sub_age_max < 0.0 ? 200.0 : sub_age_max}};
            }
            spec.min_events = sub_min_events;
            spec.percentile_range = {sub_pct_low, sub_pct_high};
            auto result = subsample(table, spec);
            save_table(result, subsample_common.out_prefix, footer.provenance());
            footer.outputs.push_back(subsample_common.out_prefix + ".tsv");
            footer.outputs.push_back(subsample_common.out_prefix + ".meta.json");
        } else if (predict_cmd->parsed()) {
            const json cfg = predict_common.maybe_config();
            apply(cfg, "method", pr_method);
            apply(cfg, "circuits", pr_circuits);
            apply(cfg, "seed", predict_common.seed);
            footer.subcommand = "predict";
            footer.seed = predict_common.seed;
            footer.config = {{"table", pr_table},     {"method", pr_method},
                             {"row", pr_row},         {"event", pr_event},
                             {"circuits", pr_circuits}, {"seed", predict_common.seed}};

            auto table = load_table(pr_table);
            const std::size_t col = event_index(table.catalog(), pr_event);
            if (pr_row >= table.rows()) throw DataError("row index out of range");
            auto predictor = make_predictor(
                pr_method, predictor_options(predict_common.seed, pr_circuits, pr_knn_k,
                                             pr_bagged, pr_lambda));
            predictor->prepare(table);
            const double value = predictor->predict(table, pr_row, col);
            footer.config["prediction"] = value;
            footer.config["prediction_seconds"] = entry_to_time(table, col, value);
        } else if (impute_cmd->parsed()) {
            const json cfg = impute_common.maybe_config();
            apply(cfg, "rank", im_rank);
            apply(cfg, "circuits", im_circuits);
            apply(cfg, "seed", impute_common.seed);
            footer.subcommand = "impute";
            footer.seed = impute_common.seed;
            footer.config = {{"table", im_table},
                             {"rank", im_rank},
                             {"circuits", im_circuits},
                             {"seed", impute_common.seed}};

            auto table = load_table(im_table);
            LmcConfig lmc;
            lmc.rank = im_rank;
            lmc.n_circuits = im_circuits;
            lmc.seed = derive_seed(impute_common.seed, hash_tag("impute"));
            auto [completed, report] = impute_all(table, lmc, impute_common.threads);
            save_table(completed, impute_common.out_prefix, footer.provenance());
            footer.outputs.push_back(impute_common.out_prefix + ".tsv");
            footer.outputs.push_back(impute_common.out_prefix + ".meta.json");
            write_file(impute_common.out_prefix + ".impute_report.json", [&](std::ostream& out) {
                write_impute_report_json(report, footer.provenance(), out);
            }, footer);
        } else if (validate_cmd->parsed() || compare_cmd->parsed()) {
            CommonOpts& common = validate_cmd->parsed() ? validate_common : compare_common;
            const json cfg = common.maybe_config();
            apply(cfg, "holdouts", va_holdouts);
            apply(cfg, "mode", va_mode);
            apply(cfg, "boot", va_boot);
            apply(cfg, "seed", common.seed);
            apply(cfg, "method", va_method);
            apply(cfg, "methods", va_methods);
            footer.subcommand = validate_cmd->parsed() ? "validate" : "compare";
            footer.seed = common.seed;

            auto table = load_table(va_table);
            if (!va_param.empty()) {
                table = reparameterize(table, parameterization_from_string(va_param));
            }
            ValidationSpec spec;
            spec.n_holdouts = va_holdouts;
            spec.mode = va_mode == "causal" ? LooMode::causal_past : LooMode::all_remaining;
            if (va_mode != "causal" && va_mode != "all") {
                throw DataError("unknown validation mode: " + va_mode);
            }
            spec.seed = derive_seed(common.seed, hash_tag("loo"));
            spec.n_boot = va_boot;
            spec.fastest_fraction = va_fastest;
            spec.threads = common.threads;

            const auto opts =
                predictor_options(common.seed, va_circuits, va_knn_k, false, va_lambda);

            if (validate_cmd->parsed()) {
                footer.config = {{"table", va_table},   {"method", va_method},
                                 {"holdouts", va_holdouts}, {"mode", va_mode},
                                 {"boot", va_boot},     {"param", va_param},
                                 {"seed", common.seed}};
                auto predictor = make_predictor(va_method, opts);
                auto report = loo_validate(table, *predictor, spec);
                write_file(common.out_prefix + ".validation.tsv", [&](std::ostream& out) {
                    write_validation_tsv(report, table.catalog(), footer.provenance(), out);
                }, footer);
                write_file(common.out_prefix + ".validation.json", [&](std::ostream& out) {
                    write_validation_json(report, table.catalog(), footer.provenance(), out);
                }, footer);
                footer.config["rmse"] = report.rmse;
                footer.config["mae"] = report.mae;
            } else {
                footer.config = {{"table", va_table},   {"methods", va_methods},
                                 {"holdouts", va_holdouts}, {"mode", va_mode},
                                 {"boot", va_boot},     {"param", va_param},
                                 {"seed", common.seed}};
                auto names = split_csv(va_methods);
                if (names.empty()) throw DataError("no methods given");
                std::vector<std::unique_ptr<Predictor>> predictors;
                std::vector<Predictor*> raw;
                for (const auto& name : names) {
                    predictors.push_back(make_predictor(name, opts));
                    raw.push_back(predictors.back().get());
                }
                std::size_t reference = 0;
                if (!va_reference.empty()) {
                    for (std::size_t i = 0; i < names.size(); ++i) {
                        if (names[i] == va_reference) reference = i;
                    }
                }
                auto cmp = compare_methods(table, raw, spec, reference);
                write_file(common.out_prefix + ".compare.tsv", [&](std::ostream& out) {
                    write_comparison_tsv(cmp, footer.provenance(), out);
                }, footer);
                write_file(common.out_prefix + ".compare.json", [&](std::ostream& out) {
                    write_comparison_json(cmp, footer.provenance(), out);
                }, footer);
            }
        } else if (components_cmd->parsed()) {
            const json cfg = components_common.maybe_config();
            apply(cfg, "rank", co_rank);
            apply(cfg, "seed", components_common.seed);
            footer.subcommand = "components";
            footer.seed = components_common.seed;
            footer.config = {{"table", co_table},
                             {"rank", co_rank},
                             {"impute_rank", co_impute_rank},
                             {"seed", components_common.seed}};

            auto table = load_table(co_table);
            if (!co_param.empty()) {
                table = reparameterize(table, parameterization_from_string(co_param));
            }
            if (table.present_count() < table.rows() * table.cols()) {
                LmcConfig lmc;
                lmc.rank = co_impute_rank;
                lmc.n_circuits = co_circuits;
                lmc.seed = derive_seed(components_common.seed, hash_tag("impute"));
                table = impute_all(table, lmc, components_common.threads).first;
            }
            auto model = extract_components(table, co_rank, !co_pure_u);
            write_file(components_common.out_prefix + ".model.json", [&](std::ostream& out) {
                write_model_json(model, footer.provenance(), out);
            }, footer);

            auto diag = individual_exponent_diagnostic(model.components.row(0).transpose(),
                                                       model.catalog);
            footer.config["f1_slope"] = diag.slope;
            footer.config["f1_r_squared"] = diag.r_squared;
            if (!co_records.empty()) {
                std::ifstream in(co_records);
                if (!in) throw DataError("cannot open " + co_records);
                json wr = json::parse(in);
                Eigen::VectorXd records(static_cast<Eigen::Index>(model.catalog.size()));
                for (std::size_t i = 0; i < model.catalog.size(); ++i) {
                    records(static_cast<Eigen::Index>(i)) =
                        std::log(wr.at(model.catalog[i].label).get<double>());
                }
                json fits = json::array();
                for (int r = 1; r <= co_rank; ++r) {
                    auto fit = fit_world_records(records, model, r);
                    fits.push_back({{"rank", r}, {"residual_norm", fit.residual_norm}});
                }
                footer.config["world_record_fits"] = fits;
            }
        } else if (summary_cmd->parsed()) {
            footer.subcommand = "summary";
            footer.seed = summary_common.seed;
            footer.config = {{"table", su_table}, {"row", su_row}, {"seed", summary_common.seed}};

            auto table = load_table(su_table);
            if (su_row >= table.rows()) throw DataError("row index out of range");
            auto time_table = reparameterize(table, Parameterization::time);
            auto pct = event_percentiles(time_table);
            auto summary = athlete_summary(time_table, pct, su_row);
            json s;
            s["preferred_distance"] = summary.preferred_distance;
            s["training_standard"] = summary.training_standard;
            s["n_events"] = summary.n_events;
            json per_event = json::array();
            for (std::size_t c = 0; c < table.cols(); ++c) {
                per_event.push_back(summary.percentiles[c] ? json(*summary.percentiles[c])
                                                           : json(nullptr));
            }
            s["percentiles"] = per_event;

            auto log_table = reparameterize(table, Parameterization::log_time);
            LmcConfig lmc;
            lmc.n_circuits = su_circuits;
            lmc.seed = derive_seed(summary_common.seed, hash_tag("impute"));
            auto completed = impute_all(log_table, lmc, summary_common.threads).first;
            auto model = extract_components(completed, 3);
            auto tns = three_number_summary(model, su_row);
            s["three_number_summary"] = {tns.lambda1, tns.lambda2, tns.lambda3};
            s["individual_exponent"] = individual_exponent(model, su_row);
            footer.config["summary"] = s;
        } else if (fair_cmd->parsed()) {
            footer.subcommand = "fair-race";
            footer.seed = fair_common.seed;
            footer.config = {{"table", fr_table}, {"a", fr_a},       {"b", fr_b},
                             {"method", fr_method}, {"boot", fr_boot}, {"seed", fair_common.seed}};

            auto table = load_table(fr_table);
            auto predictor = make_predictor(
                fr_method, predictor_options(fair_common.seed, fr_circuits, 5, false, 0.0));
            predictor->prepare(table);
            auto result = fair_race(table, fr_a, fr_b, *predictor, fr_boot,
                                    derive_seed(fair_common.seed, hash_tag("fair_race")));
            footer.config["fair_race"] = {
                {"distance_m", result.distance_m},
                {"ci_low", result.ci_low},
                {"ci_high", result.ci_high},
                {"shorter_event", table.catalog()[result.shorter_event].label},
                {"longer_event", table.catalog()[result.longer_event].label},
                {"multiple_crossings", result.multiple_crossings},
                {"bootstrap_samples", result.bootstrap_samples}};
        } else if (pivot_cmd->parsed()) {
            footer.subcommand = "pivot";
            footer.seed = pivot_common.seed;
            footer.config = {{"table", pv_table},
                             {"benchmark", pv_benchmark},
                             {"seed", pivot_common.seed}};

            auto table = load_table(pv_table);
            if (table.parameterization() != Parameterization::log_time) {
                table = reparameterize(table, Parameterization::log_time);
            }
            LmcConfig lmc;
            lmc.n_circuits = pv_circuits;
            lmc.seed = derive_seed(pivot_common.seed, hash_tag("pivot"));
            auto result = pivot_experiment(table, pv_benchmark, lmc);
            write_file(pivot_common.out_prefix + ".pivot.tsv", [&](std::ostream& out) {
                write_pivot_tsv(result, table.catalog(), footer.provenance(), out);
            }, footer);
        } else if (optimal_cmd->parsed()) {
            footer.subcommand = "optimal";
            footer.seed = optimal_common.seed;
            footer.config = {{"table", op_table},
                             {"athlete", op_athlete},
                             {"method", op_method},
                             {"seed", optimal_common.seed}};

            auto table = load_table(op_table);
            if (op_athlete >= table.rows()) throw DataError("athlete index out of range");
            auto predictor = make_predictor(
                op_method, predictor_options(optimal_common.seed, op_circuits, 5, false, 0.0));
            predictor->prepare(table);
            auto result = optimal_distance(table, op_athlete, *predictor);
            json profile = json::array();
            for (std::size_t c = 0; c < table.cols(); ++c) {
                profile.push_back({{"event", table.catalog()[c].label},
                                   {"percentile", result.percentile_per_event[c]},
                                   {"prediction", result.predicted_value[c]}});
            }
            footer.config["optimal"] = {{"best_event", table.catalog()[result.best_event].label},
                                        {"profile", profile}};
        }
        footer.print();
        return 0;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
