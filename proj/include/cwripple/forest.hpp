#pragma once

// Random forest regression: CART variance-reduction trees on bootstrap
// samples, exact split search over midpoints of sorted unique values,
// impurity-decrease importances, and k-fold grid search.
//
// Determinism: tree t draws from Rng(seed ^ t) (see rng.hpp), so a model is
// a pure function of (data, hyperparameters) regardless of worker count.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwripple/dataset.hpp"

namespace cwripple::forest {

inline constexpr int kModelSchemaVersion = 1;
inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct ForestHyperparams {
    std::size_t n_trees = 100;
    std::optional<std::size_t> max_depth;  // nullopt = unlimited
    std::size_t min_samples_leaf = 1;
    double feature_fraction = 1.0 / 3.0;
    std::uint64_t seed = kDefaultSeed;
    /// Test hook: when false every tree sees the training rows once, in order.
    bool bootstrap = true;

    void validate() const;
    /// Features considered per split, ceil(feature_fraction * n_features).
    std::size_t features_per_split(std::size_t n_features) const;
    std::string label() const;
};

/// Flattened tree node. feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean target of the training rows reaching the node
    std::size_t count = 0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const;
};

/// How the model was trained, so evaluation can rebuild the same split.
struct TrainingInfo {
    std::uint64_t split_seed = 0;
    double train_frac = 0.8;
    std::uint64_t cv_seed = 0;
    std::size_t folds = 5;
    bool include_nonconverged = false;
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestHyperparams hyperparams;
    std::vector<std::string> feature_names;
    std::vector<double> importances;
    std::string feature_mode = "full";
    std::string dataset_fingerprint;  // hex, informational
    std::optional<TrainingInfo> training;
    int schema_version = kModelSchemaVersion;

    double predict_row(std::span<const double> row) const;
};

/// Throws DomainError when rows < 2 or sizes disagree, NonFiniteError on a
/// non-finite target or feature.
ForestModel fit(const dataset::FeatureMatrix& matrix, std::span<const double> targets,
                const ForestHyperparams& hp, unsigned workers = 1);

/// Throws SchemaError when the matrix width differs from the model's.
std::vector<double> predict(const ForestModel& model, const dataset::FeatureMatrix& matrix);

/// Per-feature share of the total impurity decrease, summing to 1; all zeros
/// for a forest without splits.
std::vector<double> feature_importance(const ForestModel& model);

struct CvRow {
    ForestHyperparams hyperparams;
    std::vector<double> fold_rmse;
    double mean_rmse = 0.0;
};

struct CvResult {
    ForestHyperparams best;
    std::vector<CvRow> table;  // in grid order
};

/// Seeded shuffle of row indices into k contiguous folds; mean validation
/// RMSE per candidate. Best is the lowest mean RMSE, ties broken by fewer
/// trees, then shallower depth, then larger min_samples_leaf.
CvResult grid_search_cv(const dataset::FeatureMatrix& matrix, std::span<const double> targets,
                        std::span<const ForestHyperparams> grid, std::size_t k, std::uint64_t seed,
                        unsigned workers = 1);

/// n_trees {100, 300} x max_depth {unlimited, 8, 16} x min_samples_leaf
/// {1, 2, 5} x feature_fraction {1/3, sqrt(F)/F}.
std::vector<ForestHyperparams> default_search_grid(std::size_t n_features, std::uint64_t seed);

/// k-fold assignment used by grid_search_cv: fold[i] of row i.
std::vector<std::size_t> fold_assignment(std::size_t rows, std::size_t k, std::uint64_t seed);

/// Versioned JSON model file.
std::string to_json(const ForestModel& model);
ForestModel from_json(const std::string& text);
void save_model(const ForestModel& model, const std::string& path);
ForestModel load_model(const std::string& path);

dataset::FeatureMatrix select_rows(const dataset::FeatureMatrix& matrix, std::span<const std::size_t> rows);

}  // namespace cwripple::forest
