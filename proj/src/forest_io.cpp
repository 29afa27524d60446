// Model file (JSON, schema_version 1):
//
// {
//   "format": "cwripple-forest",
//   "schema_version": 1,
//   "feature_names": [...],
//   "feature_mode": "full" | "params-only",
//   "hyperparams": {"n_trees", "max_depth" (null = unlimited),
//                   "min_samples_leaf", "feature_fraction", "seed", "bootstrap"},
//   "rng": "splitmix64+xoshiro256**",
//   "dataset_fingerprint": "<16 hex digits>",
//   "importances": [...],
//   "training": null | {"split_seed", "train_frac", "cv_seed", "folds",
//                       "include_nonconverged"},
//   "trees": [{"feature": [...], "threshold": [...], "left": [...],
//              "right": [...], "value": [...], "count": [...]}, ...]
// }
//
// Doubles are emitted in shortest round-trip form, so a reloaded model
// predicts bit-identically.

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cwripple/errors.hpp"
#include "cwripple/forest.hpp"

namespace cwripple::forest {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "cwripple-forest";
constexpr const char* kRngName = "splitmix64+xoshiro256**";

json hyperparams_to_json(const ForestHyperparams& hp) {
    json j;
    j["n_trees"] = hp.n_trees;
    j["max_depth"] = hp.max_depth ? json(*hp.max_depth) : json(nullptr);
    j["min_samples_leaf"] = hp.min_samples_leaf;
    j["feature_fraction"] = hp.feature_fraction;
    j["seed"] = hp.seed;
    j["bootstrap"] = hp.bootstrap;
    return j;
}

ForestHyperparams hyperparams_from_json(const json& j) {
    ForestHyperparams hp;
    hp.n_trees = j.at("n_trees").get<std::size_t>();
    if (!j.at("max_depth").is_null()) hp.max_depth = j.at("max_depth").get<std::size_t>();
    hp.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    hp.feature_fraction = j.at("feature_fraction").get<double>();
    hp.seed = j.at("seed").get<std::uint64_t>();
    hp.bootstrap = j.at("bootstrap").get<bool>();
    return hp;
}

}  // namespace

std::string to_json(const ForestModel& model) {
    json j;
    j["format"] = kFormat;
    j["schema_version"] = model.schema_version;
    j["feature_names"] = model.feature_names;
    j["feature_mode"] = model.feature_mode;
    j["hyperparams"] = hyperparams_to_json(model.hyperparams);
    j["rng"] = kRngName;
    j["dataset_fingerprint"] = model.dataset_fingerprint;
    j["importances"] = model.importances;
    if (model.training) {
        const auto& t = *model.training;
        j["training"] = {{"split_seed", t.split_seed},
                         {"train_frac", t.train_frac},
                         {"cv_seed", t.cv_seed},
                         {"folds", t.folds},
                         {"include_nonconverged", t.include_nonconverged}};
    } else {
        j["training"] = nullptr;
    }
    json trees = json::array();
    for (const auto& tree : model.trees) {
        json t;
        std::vector<int> feature;
        std::vector<double> threshold;
        std::vector<int> left;
        std::vector<int> right;
        std::vector<double> value;
        std::vector<std::size_t> count;
        for (const auto& n : tree.nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            value.push_back(n.value);
            count.push_back(n.count);
        }
        t["feature"] = feature;
        t["threshold"] = threshold;
        t["left"] = left;
        t["right"] = right;
        t["value"] = value;
        t["count"] = count;
        trees.push_back(std::move(t));
    }
    j["trees"] = std::move(trees);
    return j.dump(1) + "\n";
}

ForestModel from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kFormat) throw SchemaError("model file: unknown format");
        ForestModel m;
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != kModelSchemaVersion) {
            throw SchemaError("model file: unsupported schema_version " + std::to_string(m.schema_version));
        }
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.feature_mode = j.at("feature_mode").get<std::string>();
        m.hyperparams = hyperparams_from_json(j.at("hyperparams"));
        m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
        m.importances = j.at("importances").get<std::vector<double>>();
        if (j.contains("training") && !j.at("training").is_null()) {
            const auto& t = j.at("training");
            m.training = TrainingInfo{t.at("split_seed").get<std::uint64_t>(), t.at("train_frac").get<double>(),
                                      t.at("cv_seed").get<std::uint64_t>(), t.at("folds").get<std::size_t>(),
                                      t.at("include_nonconverged").get<bool>()};
        }
        if (m.importances.size() != m.feature_names.size()) {
            throw SchemaError("model file: importances and feature_names differ in length");
        }
        const auto width = static_cast<int>(m.feature_names.size());
        for (const auto& t : j.at("trees")) {
            const auto feature = t.at("feature").get<std::vector<int>>();
            const auto threshold = t.at("threshold").get<std::vector<double>>();
            const auto left = t.at("left").get<std::vector<int>>();
            const auto right = t.at("right").get<std::vector<int>>();
            const auto value = t.at("value").get<std::vector<double>>();
            const auto count = t.at("count").get<std::vector<std::size_t>>();
            const std::size_t n = feature.size();
            if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
                value.size() != n || count.size() != n) {
                throw SchemaError("model file: tree arrays are empty or of unequal length");
            }
            Tree tree;
            tree.nodes.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                auto& node = tree.nodes[i];
                node = {feature[i], threshold[i], left[i], right[i], value[i], count[i]};
                if (node.feature >= width) throw SchemaError("model file: split feature out of range");
                if (!node.is_leaf()) {
                    // Children are stored after their parent, which also rules out cycles.
                    const auto self = static_cast<int>(i);
                    if (node.left <= self || node.right <= self || node.left >= static_cast<int>(n) ||
                        node.right >= static_cast<int>(n)) {
                        throw SchemaError("model file: bad child index");
                    }
                }
            }
            m.trees.push_back(std::move(tree));
        }
        if (m.trees.empty()) throw SchemaError("model file: no trees");
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model file: ") + e.what());
    }
}

void save_model(const ForestModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open model file for writing: " + path);
    out << to_json(model);
    if (!out) throw IoError("failed writing model file: " + path);
}

ForestModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace cwripple::forest
