#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cwripple/cli.hpp"
#include "cwripple/config.hpp"
#include "cwripple/errors.hpp"
#include "synthetic.hpp"

using namespace cwripple;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("cwripple_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

const std::vector<std::string> kQuickGrid{"--grid-trees", "15", "--grid-depth", "none,6", "--grid-leaf", "1",
                                          "--grid-ff", "1/3", "--workers", "1"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = config::parse_config(R"({
        "schema_version": 1,
        "grid": {"stages": [2, 4]},
        "sim": {"steps_per_cycle": 1000},
        "components": {"esr_ohm": 1.5},
        "forest_grid": {"max_depth": [null, 4], "feature_fraction": ["sqrt", 0.5]},
        "train": {"feature_mode": "params-only"},
        "seeds": {"split": 3},
        "workers": 2
    })");
    CHECK(cfg.grid.stages == std::vector<int>{2, 4});
    CHECK(cfg.grid.vin_kv == std::vector<double>{5.0, 15.0, 25.0});
    CHECK(cfg.sim.steps_per_cycle == 1000);
    CHECK(cfg.components.esr == 1.5);
    CHECK(cfg.components.diode_vf == 0.7);
    CHECK(cfg.forest_grid.max_depth.size() == 2);
    CHECK_FALSE(cfg.forest_grid.max_depth[0].has_value());
    CHECK(cfg.feature_mode == "params-only");
    CHECK(cfg.split_seed == 3);
    CHECK(cfg.cv_seed == 11);
    CHECK(cfg.workers == 2);

    const auto grid = cfg.forest_grid.expand(16, 9);
    CHECK(grid.size() == 2 * 2 * 3 * 2);
    CHECK(grid[0].feature_fraction == Catch::Approx(0.25));
    CHECK(grid[1].feature_fraction == 0.5);

    const auto back = config::parse_config(config::to_json(cfg));
    CHECK(config::to_json(back) == config::to_json(cfg));

    CHECK_THROWS_AS(config::parse_config(R"({"bogus": 1})"), SchemaError);
    CHECK_THROWS_AS(config::parse_config(R"({"grid": {"stagez": [1]}})"), SchemaError);
    CHECK_THROWS_AS(config::parse_config(R"({"grid": {"stages": "two"}})"), SchemaError);
    CHECK_THROWS_AS(config::parse_config(R"({"schema_version": 2})"), SchemaError);
    CHECK_THROWS_AS(config::parse_config("[1,2"), SchemaError);
    CHECK_THROWS_AS(config::parse_feature_fraction("2.0", 16), SchemaError);
    CHECK(config::parse_feature_fraction("1/3", 16) == Catch::Approx(1.0 / 3.0));
    CHECK(config::RunConfig{}.effective_workers() >= 1);
}

TEST_CASE("help documents units and defaults") {
    const auto top = run({"--help"});
    CHECK(top.code == 0);
    for (const char* cmd : {"sweep", "train", "evaluate", "predict", "export-plots"}) {
        CHECK(top.out.find(cmd) != std::string::npos);
    }
    const auto sweep = run({"sweep", "--help"});
    CHECK(sweep.code == 0);
    for (const char* s : {"--esr-ohm FLOAT [0.5]", "[2,4,6,8]", "[5,15,25]", "[1,5,10]", "[50,100,500]",
                          "[6,12,60]", "kV", "uF", "Hz", "MOhm", "CWRIPPLE_CONFIG"}) {
        INFO(s);
        CHECK(sweep.out.find(s) != std::string::npos);
    }
    const auto predict = run({"predict", "--help"});
    CHECK(predict.out.find("[0.5]") != std::string::npos);
    const auto train = run({"train", "--help"});
    CHECK(train.out.find("[20240611]") != std::string::npos);
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("sweep command") {
    const auto dir = scratch("sweep");
    const auto out = (dir / "one.csv").string();
    const auto r = run({"sweep", "--stages", "2", "--vin-kv", "5", "--cap-uf", "10", "--freq-hz", "500",
                        "--rload-mohm", "60", "--steps-per-cycle", "500", "--out", out});
    REQUIRE(r.code == 0);
    const auto records = dataset::read_csv(out);
    REQUIRE(records.size() == 1);
    CHECK(records[0].n_stages == 2);
    CHECK(records[0].rload_ohm == 60e6);
    CHECK(records[0].cap_f == Catch::Approx(10e-6).epsilon(1e-15));

    const auto manifest = nlohmann::json::parse(slurp(out + ".manifest.json"));
    CHECK(manifest["cases"] == 1);
    CHECK(manifest["nonconverged_cases"].empty());
    CHECK(manifest["failed_cases"].empty());
    CHECK(manifest["config"]["components"]["esr_ohm"] == 0.5);
    CHECK(manifest.contains("timings"));

    const auto again = (dir / "again.csv").string();
    run({"sweep", "--stages", "2", "--vin-kv", "5", "--cap-uf", "10", "--freq-hz", "500", "--rload-mohm", "60",
         "--steps-per-cycle", "500", "--out", again, "--workers", "3"});
    CHECK(slurp(again) == slurp(out));

    CHECK(run({"sweep", "--stages", "4,2", "--out", out}).code == 1);
    CHECK(run({"sweep", "--steps-per-cycle", "10", "--out", out}).code == 1);
}

TEST_CASE("config file and environment override") {
    const auto dir = scratch("config");
    write(dir / "cfg.json", R"({"grid": {"stages": [1], "vin_kv": [5], "cap_uf": [1], "freq_hz": [500],
                                         "rload_mohm": [60]}, "sim": {"steps_per_cycle": 400}})");
    const auto out = (dir / "d.csv").string();
    ::setenv(config::kConfigEnvVar, (dir / "cfg.json").c_str(), 1);
    auto r = run({"sweep", "--out", out});
    CHECK(r.code == 0);
    CHECK(dataset::read_csv(out).size() == 1);
    // Flags win over file values.
    r = run({"sweep", "--out", out, "--cap-uf", "1,5"});
    CHECK(r.code == 0);
    CHECK(dataset::read_csv(out).size() == 2);
    ::unsetenv(config::kConfigEnvVar);

    write(dir / "bad.json", R"({"grid": {"nope": 1}})");
    r = run({"sweep", "--config", (dir / "bad.json").string(), "--out", out});
    CHECK(r.code == 1);
    CHECK(r.err.find("nope") != std::string::npos);
    r = run({"sweep", "--config", (dir / "missing.json").string(), "--out", out});
    CHECK(r.code == 1);
}

TEST_CASE("train, evaluate, predict and export-plots") {
    const auto dir = scratch("pipeline");
    const auto data = (dir / "data.csv").string();
    dataset::write_csv(testing::synthetic_records(), data);
    const auto model = (dir / "model.json").string();
    const auto pmodel = (dir / "params.json").string();

    auto r = run(concat({"train", "--data", data, "--model-out", model, "--cv-out", (dir / "cv.csv").string(),
                         "--report-out", (dir / "report.txt").string(), "--correlation-out",
                         (dir / "corr.csv").string()},
                        kQuickGrid));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("held-out test split") != std::string::npos);
    CHECK(r.out.find("feature importances") != std::string::npos);
    CHECK(slurp(dir / "report.txt") + "model written to " + model + "\n" == r.out);
    CHECK(slurp(dir / "cv.csv").rfind("n_trees,max_depth,min_samples_leaf,feature_fraction,mean_rmse_v", 0) == 0);
    const auto first = slurp(model);
    REQUIRE(run(concat({"train", "--data", data, "--model-out", model}, kQuickGrid)).code == 0);
    CHECK(slurp(model) == first);

    REQUIRE(run(concat({"train", "--data", data, "--model-out", pmodel, "--params-only"}, kQuickGrid)).code == 0);

    const auto reports = dir / "reports";
    r = run({"evaluate", "--model", model, "--data", data, "--out-dir", reports.string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"regimes_full.csv", "regimes_full.txt", "regimes_test.csv", "regimes_test.txt",
                          "residual_vs_frequency.csv"}) {
        CHECK(fs::exists(reports / f));
    }
    const auto full_csv = slurp(reports / "regimes_full.csv");
    CHECK(full_csv.find("\nglobal,324,") != std::string::npos);
    CHECK(full_csv.find("\nhigh_stage,162,") != std::string::npos);
    CHECK(full_csv.find("\nlow_frequency,216,") != std::string::npos);
    CHECK(full_csv.find("\nheavy_load,216,") != std::string::npos);
    CHECK(full_csv.find("\ncritical,72,") != std::string::npos);

    // A dataset whose stage levels differ from the model's.
    const auto other = (dir / "other.csv").string();
    dataset::SweepGrid g;
    g.stages = {2, 4, 6};
    dataset::write_csv(testing::synthetic_records(g), other);
    r = run({"evaluate", "--model", model, "--data", other, "--out-dir", reports.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("model-only: stage_8") != std::string::npos);

    const std::vector<std::string> point{"--stages", "4", "--vin-kv", "15", "--cap-uf", "5", "--freq-hz", "100",
                                         "--rload-mohm", "12"};
    r = run(concat({"predict", "--model", model}, point));
    CHECK(r.code == 1);
    CHECK(r.err.find("--waveform") != std::string::npos);

    r = run(concat({"predict", "--model", pmodel}, point));
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["feature_mode"] == "params-only");
    CHECK(std::isfinite(j["corrected_vpp_v"].get<double>()));
    CHECK(j["theory_vpp_v"].get<double>() > 0.0);

    write(dir / "wave.csv", "t_s,v_out_v\n0.1,oops\n");
    r = run(concat({"predict", "--model", model, "--waveform", (dir / "wave.csv").string()}, point));
    CHECK(r.code == 1);
    CHECK(r.err.find("error") != std::string::npos);

    const auto plots = dir / "plots";
    r = run({"export-plots", "--data", data, "--model", model, "--out-dir", plots.string()});
    REQUIRE(r.code == 0);
    CHECK(slurp(plots / "residual_vs_frequency.csv").rfind("freq_hz,mean_abs_residual_v", 0) == 0);
    const auto pvs = slurp(plots / "predicted_vs_simulated_residual.csv");
    CHECK(std::count(pvs.begin(), pvs.end(), '\n') == 325);

    CHECK(run({"train", "--data", (dir / "nope.csv").string(), "--model-out", model}).code == 1);
}
