#pragma once

// Run configuration shared by every CLI command, loadable from JSON.
//
// {
//   "schema_version": 1,
//   "grid":       {"stages": [2,4,6,8], "vin_kv": [5,15,25], "cap_uf": [1,5,10],
//                  "freq_hz": [50,100,500], "rload_mohm": [6,12,60]},
//   "sim":        {"steps_per_cycle": 5000, "max_cycles": 2000, "settle_rel_tol": 1e-5,
//                  "settle_consecutive": 3, "max_diode_iters": 50, "min_cycles": 10},
//   "components": {"esr_ohm": 0.5, "diode_vf_v": 0.7, "diode_ron_ohm": 10.0,
//                  "diode_goff_s": 1e-9},
//   "forest_grid": {"n_trees": [100,300], "max_depth": [null,8,16],
//                   "min_samples_leaf": [1,2,5], "feature_fraction": ["1/3","sqrt"]},
//   "train":      {"train_frac": 0.8, "folds": 5, "feature_mode": "full",
//                  "include_nonconverged": false},
//   "seeds":      {"split": 7, "cv": 11, "forest": 20240611},
//   "workers": 0
// }
//
// Every section and key is optional; missing keys keep their defaults.
// workers = 0 means "use the available hardware parallelism".

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cwripple/circuit.hpp"
#include "cwripple/dataset.hpp"
#include "cwripple/forest.hpp"

namespace cwripple::config {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kConfigEnvVar = "CWRIPPLE_CONFIG";

/// Candidate values for the hyperparameter search. feature_fraction entries
/// are numbers in (0, 1] or the strings "1/3" and "sqrt" (sqrt(F)/F).
struct ForestGridSpec {
    std::vector<std::size_t> n_trees{100, 300};
    std::vector<std::optional<std::size_t>> max_depth{std::nullopt, 8, 16};
    std::vector<std::size_t> min_samples_leaf{1, 2, 5};
    std::vector<std::string> feature_fraction{"1/3", "sqrt"};

    std::vector<forest::ForestHyperparams> expand(std::size_t n_features, std::uint64_t seed) const;
};

struct RunConfig {
    dataset::SweepGrid grid;
    circuit::SimConfig sim;
    circuit::CaseParams components;  // only esr and diode fields are used
    ForestGridSpec forest_grid;
    double train_frac = 0.8;
    std::size_t folds = 5;
    std::string feature_mode = "full";
    bool include_nonconverged = false;
    std::uint64_t split_seed = 7;
    std::uint64_t cv_seed = 11;
    std::uint64_t forest_seed = forest::kDefaultSeed;
    unsigned workers = 0;

    unsigned effective_workers() const;
    void validate() const;
};

/// Throws SchemaError on malformed JSON, wrong types or unknown keys.
RunConfig parse_config(const std::string& json_text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
std::string to_json(const RunConfig& config);

double parse_feature_fraction(const std::string& text, std::size_t n_features);

}  // namespace cwripple::config
