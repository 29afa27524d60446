#include "cwripple/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cwripple/errors.hpp"
#include "cwripple/parallel.hpp"

namespace cwripple::config {

using nlohmann::json;

double parse_feature_fraction(const std::string& text, std::size_t n_features) {
    if (text == "1/3") return 1.0 / 3.0;
    if (text == "sqrt") {
        if (n_features == 0) return 1.0;
        return std::min(1.0, std::sqrt(static_cast<double>(n_features)) / static_cast<double>(n_features));
    }
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0' || !(v > 0.0 && v <= 1.0)) {
        throw SchemaError("feature_fraction '" + text + "' must be a number in (0, 1], '1/3' or 'sqrt'");
    }
    return v;
}

std::vector<forest::ForestHyperparams> ForestGridSpec::expand(std::size_t n_features,
                                                              std::uint64_t seed) const {
    if (n_trees.empty() || max_depth.empty() || min_samples_leaf.empty() || feature_fraction.empty()) {
        throw SchemaError("forest_grid: every axis needs at least one value");
    }
    std::vector<forest::ForestHyperparams> grid;
    for (auto trees : n_trees)
        for (auto depth : max_depth)
            for (auto leaf : min_samples_leaf)
                for (const auto& ff : feature_fraction) {
                    forest::ForestHyperparams hp;
                    hp.n_trees = trees;
                    hp.max_depth = depth;
                    hp.min_samples_leaf = leaf;
                    hp.feature_fraction = parse_feature_fraction(ff, n_features);
                    hp.seed = seed;
                    hp.validate();
                    grid.push_back(hp);
                }
    return grid;
}

unsigned RunConfig::effective_workers() const { return workers == 0 ? default_workers() : workers; }

void RunConfig::validate() const {
    grid.validate();
    sim.validate();
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw DomainError("train_frac must be in (0, 1)");
    if (folds < 2) throw DomainError("folds must be >= 2");
    dataset::feature_mode_from_string(feature_mode);
    if (!(components.esr >= 0.0)) throw DomainError("esr must be >= 0");
    if (!(components.diode_ron > 0.0)) throw DomainError("diode_ron must be > 0");
    if (!(components.diode_goff > 0.0)) throw DomainError("diode_goff must be > 0");
    if (!(components.diode_vf >= 0.0)) throw DomainError("diode_vf must be >= 0");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw SchemaError("config: unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig parse_config(const std::string& json_text, RunConfig cfg) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("config: top level must be an object");
    try {
        reject_unknown(j, {"schema_version", "grid", "sim", "components", "forest_grid", "train", "seeds", "workers"},
                       "config");
        if (j.contains("schema_version") && j.at("schema_version").get<int>() != kConfigSchemaVersion) {
            throw SchemaError("config: unsupported schema_version");
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            reject_unknown(g, {"stages", "vin_kv", "cap_uf", "freq_hz", "rload_mohm"}, "grid");
            read(g, "stages", cfg.grid.stages);
            read(g, "vin_kv", cfg.grid.vin_kv);
            read(g, "cap_uf", cfg.grid.cap_uf);
            read(g, "freq_hz", cfg.grid.freq_hz);
            read(g, "rload_mohm", cfg.grid.rload_mohm);
        }
        if (j.contains("sim")) {
            const auto& s = j.at("sim");
            reject_unknown(s, {"steps_per_cycle", "max_cycles", "settle_rel_tol", "settle_consecutive",
                               "max_diode_iters", "min_cycles"},
                           "sim");
            read(s, "steps_per_cycle", cfg.sim.steps_per_cycle);
            read(s, "max_cycles", cfg.sim.max_cycles);
            read(s, "settle_rel_tol", cfg.sim.settle_rel_tol);
            read(s, "settle_consecutive", cfg.sim.settle_consecutive);
            read(s, "max_diode_iters", cfg.sim.max_diode_iters);
            read(s, "min_cycles", cfg.sim.min_cycles);
        }
        if (j.contains("components")) {
            const auto& c = j.at("components");
            reject_unknown(c, {"esr_ohm", "diode_vf_v", "diode_ron_ohm", "diode_goff_s"}, "components");
            read(c, "esr_ohm", cfg.components.esr);
            read(c, "diode_vf_v", cfg.components.diode_vf);
            read(c, "diode_ron_ohm", cfg.components.diode_ron);
            read(c, "diode_goff_s", cfg.components.diode_goff);
        }
        if (j.contains("forest_grid")) {
            const auto& f = j.at("forest_grid");
            reject_unknown(f, {"n_trees", "max_depth", "min_samples_leaf", "feature_fraction"}, "forest_grid");
            read(f, "n_trees", cfg.forest_grid.n_trees);
            read(f, "min_samples_leaf", cfg.forest_grid.min_samples_leaf);
            if (f.contains("max_depth")) {
                cfg.forest_grid.max_depth.clear();
                for (const auto& d : f.at("max_depth")) {
                    if (d.is_null()) {
                        cfg.forest_grid.max_depth.emplace_back(std::nullopt);
                    } else {
                        cfg.forest_grid.max_depth.emplace_back(d.get<std::size_t>());
                    }
                }
            }
            if (f.contains("feature_fraction")) {
                cfg.forest_grid.feature_fraction.clear();
                for (const auto& v : f.at("feature_fraction")) {
                    if (v.is_string()) {
                        cfg.forest_grid.feature_fraction.push_back(v.get<std::string>());
                    } else {
                        std::ostringstream ss;
                        ss.precision(17);
                        ss << v.get<double>();
                        cfg.forest_grid.feature_fraction.push_back(ss.str());
                    }
                }
            }
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            reject_unknown(t, {"train_frac", "folds", "feature_mode", "include_nonconverged"}, "train");
            read(t, "train_frac", cfg.train_frac);
            read(t, "folds", cfg.folds);
            read(t, "feature_mode", cfg.feature_mode);
            read(t, "include_nonconverged", cfg.include_nonconverged);
        }
        if (j.contains("seeds")) {
            const auto& s = j.at("seeds");
            reject_unknown(s, {"split", "cv", "forest"}, "seeds");
            read(s, "split", cfg.split_seed);
            read(s, "cv", cfg.cv_seed);
            read(s, "forest", cfg.forest_seed);
        }
        read(j, "workers", cfg.workers);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string to_json(const RunConfig& cfg) {
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["grid"] = {{"stages", cfg.grid.stages},
                 {"vin_kv", cfg.grid.vin_kv},
                 {"cap_uf", cfg.grid.cap_uf},
                 {"freq_hz", cfg.grid.freq_hz},
                 {"rload_mohm", cfg.grid.rload_mohm}};
    j["sim"] = {{"steps_per_cycle", cfg.sim.steps_per_cycle},
                {"max_cycles", cfg.sim.max_cycles},
                {"settle_rel_tol", cfg.sim.settle_rel_tol},
                {"settle_consecutive", cfg.sim.settle_consecutive},
                {"max_diode_iters", cfg.sim.max_diode_iters},
                {"min_cycles", cfg.sim.min_cycles}};
    j["components"] = {{"esr_ohm", cfg.components.esr},
                       {"diode_vf_v", cfg.components.diode_vf},
                       {"diode_ron_ohm", cfg.components.diode_ron},
                       {"diode_goff_s", cfg.components.diode_goff}};
    json depths = json::array();
    for (const auto& d : cfg.forest_grid.max_depth) depths.push_back(d ? json(*d) : json(nullptr));
    j["forest_grid"] = {{"n_trees", cfg.forest_grid.n_trees},
                        {"max_depth", depths},
                        {"min_samples_leaf", cfg.forest_grid.min_samples_leaf},
                        {"feature_fraction", cfg.forest_grid.feature_fraction}};
    j["train"] = {{"train_frac", cfg.train_frac},
                  {"folds", cfg.folds},
                  {"feature_mode", cfg.feature_mode},
                  {"include_nonconverged", cfg.include_nonconverged}};
    j["seeds"] = {{"split", cfg.split_seed}, {"cv", cfg.cv_seed}, {"forest", cfg.forest_seed}};
    j["workers"] = cfg.workers;
    return j.dump(2) + "\n";
}

}  // namespace cwripple::config
