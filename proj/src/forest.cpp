#include "cwripple/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "cwripple/errors.hpp"
#include "cwripple/parallel.hpp"
#include "cwripple/rng.hpp"

namespace cwripple::forest {

void ForestHyperparams::validate() const {
    if (n_trees < 1) throw DomainError("ForestHyperparams: n_trees must be >= 1");
    if (min_samples_leaf < 1) throw DomainError("ForestHyperparams: min_samples_leaf must be >= 1");
    if (!(feature_fraction > 0.0 && feature_fraction <= 1.0)) {
        throw DomainError("ForestHyperparams: feature_fraction must be in (0, 1]");
    }
    if (max_depth && *max_depth < 1) throw DomainError("ForestHyperparams: max_depth must be >= 1");
}

std::size_t ForestHyperparams::features_per_split(std::size_t n_features) const {
    // Guard against 1/3 * 3 = 1.0000000000000002 rounding up to 2.
    const double raw = feature_fraction * static_cast<double>(n_features);
    auto m = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n_features, 1));
}

std::string ForestHyperparams::label() const {
    std::ostringstream ss;
    ss << "trees=" << n_trees << " depth=" << (max_depth ? std::to_string(*max_depth) : "inf")
       << " leaf=" << min_samples_leaf << " ff=" << feature_fraction;
    return ss.str();
}

double Tree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                              : n.right);
    }
    return nodes[i].value;
}

double ForestModel::predict_row(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(row);
    return sum / static_cast<double>(trees.size());
}

namespace {

struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double sse = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const dataset::FeatureMatrix& x, std::span<const double> y,
                const ForestHyperparams& hp, Rng rng)
        : x_(x), y_(y), hp_(hp), rng_(rng), n_features_(x.cols()),
          mtry_(hp.features_per_split(x.cols())), importance_(x.cols(), 0.0) {}

    Tree build(std::vector<std::size_t> rows) {
        n_root_ = static_cast<double>(rows.size());
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

    std::vector<double> take_importance() { return std::move(importance_); }

private:
    // Sum of a canonically ordered copy, so the result does not depend on the
    // order rows arrive in.
    double node_mean(std::span<const std::size_t> rows) {
        scratch_.clear();
        for (auto r : rows) scratch_.push_back(y_[r]);
        std::sort(scratch_.begin(), scratch_.end());
        double s = 0.0;
        for (double v : scratch_) s += v;
        return s / static_cast<double>(rows.size());
    }

    int grow(std::vector<std::size_t> rows, std::size_t depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        const double mean = node_mean(rows);
        tree_.nodes[id].value = mean;
        tree_.nodes[id].count = rows.size();

        const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                                  [&](auto a, auto b) { return y_[a] < y_[b]; });
        const bool pure = y_[*lo] == y_[*hi];
        const bool too_deep = hp_.max_depth && depth >= *hp_.max_depth;
        if (pure || too_deep || rows.size() < 2 * hp_.min_samples_leaf) return id;

        double parent_sse = 0.0;
        for (double v : scratch_) parent_sse += (v - mean) * (v - mean);

        const auto best = best_split(rows, mean);
        if (best.feature < 0) return id;

        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        const auto f = static_cast<std::size_t>(best.feature);
        for (auto r : rows) (x_.at(r, f) <= best.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        importance_[f] += std::max(0.0, parent_sse - best.sse) / n_root_;
        tree_.nodes[id].feature = best.feature;
        tree_.nodes[id].threshold = best.threshold;
        const int l = grow(std::move(left), depth + 1);
        tree_.nodes[id].left = l;
        const int r = grow(std::move(right), depth + 1);
        tree_.nodes[id].right = r;
        return id;
    }

    std::vector<std::size_t> sample_features() {
        std::vector<std::size_t> all(n_features_);
        std::iota(all.begin(), all.end(), 0);
        if (mtry_ < n_features_) {
            // Partial Fisher-Yates: the first mtry slots become the sample.
            for (std::size_t i = 0; i < mtry_; ++i) {
                const auto j = i + static_cast<std::size_t>(rng_.bounded(n_features_ - i));
                std::swap(all[i], all[j]);
            }
            all.resize(mtry_);
            std::sort(all.begin(), all.end());
        }
        return all;
    }

    Candidate best_split(std::span<const std::size_t> rows, double mean) {
        const auto features = sample_features();
        const std::size_t n = rows.size();
        const std::size_t min_leaf = hp_.min_samples_leaf;
        Candidate best;
        bool found = false;
        pairs_.resize(n);
        for (auto f : features) {
            for (std::size_t i = 0; i < n; ++i) pairs_[i] = {x_.at(rows[i], f), y_[rows[i]] - mean};
            std::sort(pairs_.begin(), pairs_.end());

            double total1 = 0.0;
            double total2 = 0.0;
            for (const auto& [xv, d] : pairs_) {
                total1 += d;
                total2 += d * d;
            }
            double s1 = 0.0;
            double s2 = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                s1 += pairs_[i - 1].second;
                s2 += pairs_[i - 1].second * pairs_[i - 1].second;
                if (i < min_leaf || n - i < min_leaf) continue;
                const double a = pairs_[i - 1].first;
                const double b = pairs_[i].first;
                if (!(a < b)) continue;
                const auto nl = static_cast<double>(i);
                const auto nr = static_cast<double>(n - i);
                const double r1 = total1 - s1;
                const double r2 = total2 - s2;
                const double sse = std::max(0.0, s2 - s1 * s1 / nl) + std::max(0.0, r2 - r1 * r1 / nr);
                if (!found || sse < best.sse) {
                    double mid = a + (b - a) / 2.0;
                    if (!(mid < b)) mid = a;
                    best = {static_cast<int>(f), mid, sse};
                    found = true;
                }
            }
        }
        return best;
    }

    const dataset::FeatureMatrix& x_;
    std::span<const double> y_;
    const ForestHyperparams& hp_;
    Rng rng_;
    std::size_t n_features_;
    std::size_t mtry_;
    double n_root_ = 1.0;
    Tree tree_;
    std::vector<double> importance_;
    std::vector<double> scratch_;
    std::vector<std::pair<double, double>> pairs_;
};

void check_training_data(const dataset::FeatureMatrix& matrix, std::span<const double> targets) {
    if (matrix.rows == 0 || targets.empty()) throw DomainError("fit: empty training data");
    if (matrix.rows != targets.size()) throw DomainError("fit: matrix rows and targets differ in length");
    if (matrix.rows < 2) throw DomainError("fit: need at least 2 rows");
    if (matrix.cols() == 0) throw DomainError("fit: matrix has no columns");
    if (matrix.values.size() != matrix.rows * matrix.cols()) {
        throw DomainError("fit: matrix storage does not match its shape");
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (!std::isfinite(targets[i])) {
            throw NonFiniteError("fit: non-finite target at row " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < matrix.values.size(); ++i) {
        if (!std::isfinite(matrix.values[i])) {
            throw NonFiniteError("fit: non-finite feature at row " + std::to_string(i / matrix.cols()));
        }
    }
}

}  // namespace

ForestModel fit(const dataset::FeatureMatrix& matrix, std::span<const double> targets,
                const ForestHyperparams& hp, unsigned workers) {
    hp.validate();
    check_training_data(matrix, targets);

    const std::size_t n = matrix.rows;
    ForestModel model;
    model.hyperparams = hp;
    model.feature_names = matrix.columns;
    model.trees.resize(hp.n_trees);
    std::vector<std::vector<double>> per_tree(hp.n_trees);

    parallel_for(hp.n_trees, workers, [&](std::size_t t) {
        const std::uint64_t tree_seed = hp.seed ^ static_cast<std::uint64_t>(t);
        // One stream per tree: bootstrap draws first, then feature subsets.
        Rng rng(tree_seed);
        std::vector<std::size_t> rows(n);
        if (hp.bootstrap) {
            for (auto& r : rows) r = static_cast<std::size_t>(rng.bounded(n));
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        TreeBuilder builder(matrix, targets, hp, rng);
        model.trees[t] = builder.build(std::move(rows));
        per_tree[t] = builder.take_importance();
    });

    // Average over trees in index order, then normalize.
    model.importances.assign(matrix.cols(), 0.0);
    for (const auto& imp : per_tree) {
        for (std::size_t f = 0; f < imp.size(); ++f) model.importances[f] += imp[f];
    }
    double total = 0.0;
    for (auto& v : model.importances) {
        v /= static_cast<double>(hp.n_trees);
        total += v;
    }
    if (total > 0.0) {
        for (auto& v : model.importances) v /= total;
    }
    return model;
}

std::vector<double> predict(const ForestModel& model, const dataset::FeatureMatrix& matrix) {
    if (matrix.cols() != model.feature_names.size()) {
        throw SchemaError("predict: matrix has " + std::to_string(matrix.cols()) +
                          " columns, model expects " + std::to_string(model.feature_names.size()));
    }
    if (model.trees.empty()) throw DomainError("predict: model has no trees");
    std::vector<double> out(matrix.rows);
    for (std::size_t r = 0; r < matrix.rows; ++r) out[r] = model.predict_row(matrix.row(r));
    return out;
}

std::vector<double> feature_importance(const ForestModel& model) { return model.importances; }

dataset::FeatureMatrix select_rows(const dataset::FeatureMatrix& matrix, std::span<const std::size_t> rows) {
    dataset::FeatureMatrix out;
    out.columns = matrix.columns;
    out.rows = rows.size();
    out.values.reserve(rows.size() * matrix.cols());
    for (auto r : rows) {
        const auto row = matrix.row(r);
        out.values.insert(out.values.end(), row.begin(), row.end());
        if (!matrix.targets.empty()) out.targets.push_back(matrix.targets[r]);
        if (!matrix.case_ids.empty()) out.case_ids.push_back(matrix.case_ids[r]);
    }
    return out;
}

std::vector<std::size_t> fold_assignment(std::size_t rows, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw DomainError("fold_assignment: k must be >= 2");
    if (rows < k) throw DomainError("fold_assignment: fewer rows than folds");
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    // Contiguous folds; the first rows % k folds get one extra row.
    std::vector<std::size_t> fold(rows);
    const std::size_t base = rows / k;
    const std::size_t extra = rows % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) fold[order[pos++]] = f;
    }
    return fold;
}

namespace {

// Ordering used to break exact RMSE ties; true when a is preferred.
bool simpler(const ForestHyperparams& a, const ForestHyperparams& b) {
    if (a.n_trees != b.n_trees) return a.n_trees < b.n_trees;
    const auto depth = [](const ForestHyperparams& h) {
        return h.max_depth ? *h.max_depth : std::numeric_limits<std::size_t>::max();
    };
    if (depth(a) != depth(b)) return depth(a) < depth(b);
    return a.min_samples_leaf > b.min_samples_leaf;
}

}  // namespace

CvResult grid_search_cv(const dataset::FeatureMatrix& matrix, std::span<const double> targets,
                        std::span<const ForestHyperparams> grid, std::size_t k, std::uint64_t seed,
                        unsigned workers) {
    if (grid.empty()) throw DomainError("grid_search_cv: empty hyperparameter grid");
    if (k < 2) throw DomainError("grid_search_cv: k must be >= 2");
    if (matrix.rows < k) throw DomainError("grid_search_cv: fewer rows than folds");
    if (targets.size() != matrix.rows) throw DomainError("grid_search_cv: targets length mismatch");

    const auto fold = fold_assignment(matrix.rows, k, seed);
    std::vector<std::vector<std::size_t>> train_rows(k);
    std::vector<std::vector<std::size_t>> valid_rows(k);
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        for (std::size_t f = 0; f < k; ++f) (fold[i] == f ? valid_rows[f] : train_rows[f]).push_back(i);
    }

    CvResult result;
    for (const auto& hp : grid) {
        hp.validate();
        CvRow row;
        row.hyperparams = hp;
        for (std::size_t f = 0; f < k; ++f) {
            const auto train_x = select_rows(matrix, train_rows[f]);
            std::vector<double> train_y;
            for (auto i : train_rows[f]) train_y.push_back(targets[i]);
            const auto model = fit(train_x, train_y, hp, workers);
            double sse = 0.0;
            for (auto i : valid_rows[f]) {
                const double e = model.predict_row(matrix.row(i)) - targets[i];
                sse += e * e;
            }
            row.fold_rmse.push_back(std::sqrt(sse / static_cast<double>(valid_rows[f].size())));
        }
        row.mean_rmse = std::accumulate(row.fold_rmse.begin(), row.fold_rmse.end(), 0.0) /
                        static_cast<double>(k);
        result.table.push_back(std::move(row));
    }

    const CvRow* best = &result.table.front();
    for (const auto& row : result.table) {
        if (row.mean_rmse < best->mean_rmse ||
            (row.mean_rmse == best->mean_rmse && simpler(row.hyperparams, best->hyperparams))) {
            best = &row;
        }
    }
    result.best = best->hyperparams;
    return result;
}

std::vector<ForestHyperparams> default_search_grid(std::size_t n_features, std::uint64_t seed) {
    const double sqrt_fraction =
        n_features > 0 ? std::sqrt(static_cast<double>(n_features)) / static_cast<double>(n_features) : 1.0;
    std::vector<ForestHyperparams> grid;
    for (std::size_t trees : {100, 300})
        for (std::optional<std::size_t> depth : {std::optional<std::size_t>{}, std::optional<std::size_t>{8},
                                                 std::optional<std::size_t>{16}})
            for (std::size_t leaf : {1, 2, 5})
                for (double ff : {1.0 / 3.0, sqrt_fraction}) {
                    ForestHyperparams hp;
                    hp.n_trees = trees;
                    hp.max_depth = depth;
                    hp.min_samples_leaf = leaf;
                    hp.feature_fraction = std::min(1.0, ff);
                    hp.seed = seed;
                    grid.push_back(hp);
                }
    return grid;
}

}  // namespace cwripple::forest
