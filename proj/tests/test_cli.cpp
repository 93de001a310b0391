#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "runpred/table_io.hpp"

using namespace runpred;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    if (const char* env = std::getenv("RUNPRED_CLI")) return env;
    return "tools/runpred";  // build-tree default
}

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const std::string cmd = cli_path() + " " + args + " > " + out.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.stdout_text = ss.str();
    return r;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json footer_of(const std::string& text) {
    // The machine-readable footer is the last non-empty line.
    std::size_t end = text.find_last_not_of('\n');
    std::size_t start = text.rfind('\n', end);
    return json::parse(text.substr(start + 1, end - start));
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("runpred_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("unknown subcommand exits 1 with usage text") {
    auto dir = fresh_dir("usage");
    auto r = run_cli("definitely-not-a-subcommand", dir);
    CHECK(r.exit_code == 1);
    CHECK(r.stdout_text.find("Usage") != std::string::npos);
}

TEST_CASE("missing input exits 2") {
    auto dir = fresh_dir("data_error");
    auto r = run_cli("predict --table " + (dir / "nope").string() + " --row 0 --event 100m", dir);
    CHECK(r.exit_code == 2);
}

TEST_CASE("riegel prediction through the CLI matches the closed form") {
    auto dir = fresh_dir("riegel");
    PerformanceTable t(EventCatalog::standard(), 1);
    t.set(0, 7, 2400.0);  // 10 km in 2400 s
    save_table(t, (dir / "one").string());

    auto r = run_cli("predict --table " + (dir / "one").string() +
                         " --method riegel --row 0 --event marathon",
                     dir);
    REQUIRE(r.exit_code == 0);
    auto footer = footer_of(r.stdout_text);
    const double pred = footer.at("config").at("prediction").get<double>();
    CHECK(std::abs(pred - 11041.0) <= 1.0);
    CHECK(footer.at("subcommand") == "predict");
    CHECK(footer.contains("timing_ms"));
}

TEST_CASE("synth -> impute -> validate -> compare pipeline") {
    auto dir = fresh_dir("pipeline");
    const std::string t0 = (dir / "t0").string();

    auto r1 = run_cli("synth --athletes 120 --noise 0.01 --missing uniform_k --k 5 --seed 11 -o " +
                          t0,
                      dir);
    REQUIRE(r1.exit_code == 0);
    auto table = load_table(t0);
    CHECK(table.rows() == 120);
    CHECK(table.row_present_count(0) == 5);

    auto r2 = run_cli("impute --table " + t0 + " --rank 2 --circuits 100 --seed 3 -o " +
                          (dir / "full").string(),
                      dir);
    REQUIRE(r2.exit_code == 0);
    auto full = load_table((dir / "full").string());
    CHECK(full.present_count() == 120 * 10);
    CHECK(fs::exists(dir / "full.impute_report.json"));

    auto r3 = run_cli("validate --table " + t0 +
                          " --method mean --holdouts 80 --seed 5 --boot 50 -o " +
                          (dir / "val").string(),
                      dir);
    REQUIRE(r3.exit_code == 0);
    auto vfooter = footer_of(r3.stdout_text);
    CHECK(vfooter.at("config").at("rmse").get<double>() > 0.0);
    const std::string tsv = read_file(dir / "val.validation.tsv");
    CHECK(tsv.find("method\tscope") != std::string::npos);
    CHECK(tsv.find("seed=") != std::string::npos);

    auto r4 = run_cli("compare --table " + t0 +
                          " --methods mean,riegel,purdy,lmc2 --holdouts 60 --seed 7 --boot 40 "
                          "--reference lmc2 -o " +
                          (dir / "cmp").string(),
                      dir);
    REQUIRE(r4.exit_code == 0);
    const std::string ctsv = read_file(dir / "cmp.compare.tsv");
    CHECK(ctsv.find("mean\t") != std::string::npos);
    CHECK(ctsv.find("lmc2\t") != std::string::npos);
    json cjson = json::parse(read_file(dir / "cmp.compare.json"));
    CHECK(cjson.at("methods").size() == 4);
    CHECK(cjson.at("reference") == "lmc2");
}

TEST_CASE("ingest pipeline from raw CSVs") {
    auto dir = fresh_dir("ingest");
    {
        std::ofstream a(dir / "athletes.csv");
        a << "athlete_id,gender,birth_date\n";
        a << "1,M,1985-03-02\n2,M,1990-01-01\n3,F,1900-01-01\n";
        std::ofstream e(dir / "events.csv");
        e << "athlete_id,event,date,performance\n";
        e << "1,800m,2012-06-01,112.3\n1,1500m,2012-05-01,232.0\n";
        e << "2,800m,2012-05-01,118.0\n2,400m,2012-04-01,51.2\n";
        e << "3,800m,2012-03-01,131.0\n3,800m,1901-01-01,9999\n";
    }
    auto r = run_cli("ingest --athletes " + (dir / "athletes.csv").string() + " --events " +
                         (dir / "events.csv").string() + " --mode best --keep-outliers -o " +
                         (dir / "table").string(),
                     dir);
    REQUIRE(r.exit_code == 0);
    auto table = load_table((dir / "table").string());
    CHECK(table.rows() == 3);
    CHECK(*table.value(0, 3) == doctest::Approx(112.3));
    CHECK(*table.value(0, 4) == doctest::Approx(232.0));
    json report = json::parse(read_file(dir / "table.report.json"));
    CHECK(report.at("cleaning").at("birth_dates_cleared") == 1);

    auto r2 = run_cli("summary --table " + (dir / "table").string() + " --row 0 --circuits 50",
                      dir);
    REQUIRE(r2.exit_code == 0);
    auto footer = footer_of(r2.stdout_text);
    CHECK(footer.at("config").at("summary").at("n_events") == 2);
}

TEST_CASE("seeded invocations are byte-identical and thread-independent") {
    auto dir = fresh_dir("determinism");
    const std::string args =
        "synth --athletes 100 --noise 0.02 --missing uniform_k --k 6 --seed 99 -o ";
    run_cli(args + (dir / "a").string(), dir);
    run_cli(args + (dir / "b").string(), dir);
    CHECK(read_file(dir / "a.tsv") == read_file(dir / "b.tsv"));

    // meta.json differs only by... nothing: provenance is seed+config hash.
    auto meta_a = read_file(dir / "a.meta.json");
    auto meta_b = read_file(dir / "b.meta.json");
    CHECK(meta_a == meta_b);

    const std::string val =
        " --method lmc2 --holdouts 40 --circuits 100 --seed 3 --boot 30 -o ";
    run_cli("validate --table " + (dir / "a").string() + val + (dir / "v1").string() +
                " --threads 1",
            dir);
    run_cli("validate --table " + (dir / "a").string() + val + (dir / "v8").string() +
                " --threads 8",
            dir);
    CHECK(read_file(dir / "v1.validation.tsv") == read_file(dir / "v8.validation.tsv"));
    CHECK(read_file(dir / "v1.validation.json") == read_file(dir / "v8.validation.json"));
}

TEST_CASE("config file overrides flags") {
    auto dir = fresh_dir("config");
    {
        std::ofstream cfg(dir / "cfg.json");
        cfg << R"({"athletes": 25, "noise": 0.0})";
    }
    auto r = run_cli("synth --athletes 999 --config " + (dir / "cfg.json").string() + " -o " +
                         (dir / "t").string(),
                     dir);
    REQUIRE(r.exit_code == 0);
    auto table = load_table((dir / "t").string());
    CHECK(table.rows() == 25);  // config wins over the flag
}

TEST_CASE("components subcommand exports the model and fits records") {
    auto dir = fresh_dir("components");
    const std::string t0 = (dir / "t0").string();
    run_cli("synth --athletes 200 --noise 0.01 --missing uniform_k --k 4 --seed 31 -o " + t0,
            dir);
    const char* data_dir = RUNPRED_DATA_DIR;
    auto r = run_cli("components --table " + t0 + " --rank 3 --circuits 100 --seed 5 --records " +
                         std::string(data_dir) + "/world_record_times.json -o " +
                         (dir / "model").string(),
                     dir);
    REQUIRE(r.exit_code == 0);
    json model = json::parse(read_file(dir / "model.model.json"));
    CHECK(model.at("components").size() == 3);
    CHECK(model.at("coefficients").size() == 200);
    auto footer = footer_of(r.stdout_text);
    CHECK(footer.at("config").at("f1_r_squared").get<double>() > 0.99);
    auto fits = footer.at("config").at("world_record_fits");
    REQUIRE(fits.size() == 3);
    // Residuals shrink as the rank grows.
    CHECK(fits[2].at("residual_norm").get<double>() <=
          fits[0].at("residual_norm").get<double>() + 1e-12);
}

TEST_CASE("fair-race, pivot and optimal run end to end") {
    auto dir = fresh_dir("analysis");
    const std::string t0 = (dir / "t0").string();
    run_cli("synth --athletes 150 --noise 0.0 --seed 21 -o " + t0, dir);

    auto r1 = run_cli("fair-race --table " + t0 + " --a 0 --b 1 --boot 10 --circuits 100", dir);
    // Either a crossing exists or the CLI reports no fair race; both are
    // legitimate outcomes on random athletes.
    CHECK((r1.exit_code == 0 || r1.exit_code == 2));

    auto r2 = run_cli("pivot --table " + t0 + " --benchmark 160000 --circuits 100 -o " +
                          (dir / "pv").string(),
                      dir);
    REQUIRE(r2.exit_code == 0);
    const std::string ptsv = read_file(dir / "pv.pivot.tsv");
    CHECK(ptsv.find("lower\tpivot\tupper") != std::string::npos);
    CHECK(ptsv.find("Mile") == std::string::npos);  // excluded from triples

    auto r3 = run_cli("optimal --table " + t0 + " --athlete 2 --circuits 100", dir);
    REQUIRE(r3.exit_code == 0);
    auto footer = footer_of(r3.stdout_text);
    CHECK(footer.at("config").at("optimal").at("profile").size() == 10);
}
