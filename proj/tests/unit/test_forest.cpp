#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "cwripple/errors.hpp"
#include "cwripple/forest.hpp"
#include "cwripple/rng.hpp"

using namespace cwripple;
using namespace cwripple::forest;
using dataset::FeatureMatrix;

namespace {

FeatureMatrix make_matrix(std::size_t cols, const std::vector<double>& values) {
    FeatureMatrix m;
    for (std::size_t c = 0; c < cols; ++c) m.columns.push_back("x" + std::to_string(c));
    m.values = values;
    m.rows = values.size() / cols;
    m.case_ids.resize(m.rows);
    std::iota(m.case_ids.begin(), m.case_ids.end(), 0);
    return m;
}

ForestHyperparams single_tree(std::optional<std::size_t> depth = std::nullopt) {
    ForestHyperparams hp;
    hp.n_trees = 1;
    hp.max_depth = depth;
    hp.feature_fraction = 1.0;
    hp.bootstrap = false;
    return hp;
}

struct Synthetic {
    FeatureMatrix x;
    std::vector<double> y;
};

// y = 3 x0 + N(0, 0.1); the other columns are uniform noise.
Synthetic linear_oracle(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(rows * cols);
    std::vector<double> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] = rng.uniform();
        const double u1 = std::max(rng.uniform(), 1e-300);
        const double u2 = rng.uniform();
        const double noise = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        y[r] = 3.0 * v[r * cols] + 0.1 * noise;
    }
    return {make_matrix(cols, v), y};
}

double r_squared(const std::vector<double>& pred, const std::vector<double>& y) {
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sse = 0;
    double sst = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sse += (pred[i] - y[i]) * (pred[i] - y[i]);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    return 1.0 - sse / sst;
}

std::vector<std::size_t> iota_n(std::size_t begin, std::size_t end) {
    std::vector<std::size_t> v(end - begin);
    std::iota(v.begin(), v.end(), begin);
    return v;
}

struct BruteSplit {
    int feature = -1;
    double threshold = 0.0;
    double sse = std::numeric_limits<double>::infinity();
    double runner_up = std::numeric_limits<double>::infinity();
};

BruteSplit brute_force_split(const FeatureMatrix& x, const std::vector<double>& y) {
    BruteSplit best;
    auto sse_of = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double s = 0;
        for (double a : v) s += (a - m) * (a - m);
        return s;
    };
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::vector<double> vals;
        for (std::size_t r = 0; r < x.rows; ++r) vals.push_back(x.at(r, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            const double t = vals[i] + (vals[i + 1] - vals[i]) / 2.0;
            std::vector<double> l;
            std::vector<double> rr;
            for (std::size_t r = 0; r < x.rows; ++r) (x.at(r, f) <= t ? l : rr).push_back(y[r]);
            const double s = sse_of(l) + sse_of(rr);
            if (s < best.sse) {
                best.runner_up = best.sse;
                best = {static_cast<int>(f), t, s, best.runner_up};
            } else if (s < best.runner_up) {
                best.runner_up = s;
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("hyperparameter validation") {
    ForestHyperparams hp;
    hp.n_trees = 0;
    CHECK_THROWS_AS(hp.validate(), DomainError);
    hp = {};
    hp.min_samples_leaf = 0;
    CHECK_THROWS_AS(hp.validate(), DomainError);
    hp = {};
    hp.feature_fraction = 0.0;
    CHECK_THROWS_AS(hp.validate(), DomainError);
    hp.feature_fraction = 1.5;
    CHECK_THROWS_AS(hp.validate(), DomainError);
    hp = {};
    CHECK(hp.features_per_split(16) == 6);
    hp.feature_fraction = 1.0;
    CHECK(hp.features_per_split(16) == 16);
    hp.feature_fraction = 0.01;
    CHECK(hp.features_per_split(16) == 1);
}

TEST_CASE("constant targets give a single leaf") {
    const auto x = make_matrix(2, {0, 1, 2, 3, 4, 5, 6, 7});
    const std::vector<double> y(4, 7.25);
    ForestHyperparams hp;
    hp.n_trees = 10;
    const auto model = fit(x, y, hp);
    for (double p : predict(model, x)) CHECK(p == 7.25);
    for (const auto& t : model.trees) CHECK(t.nodes.size() == 1);
    for (double imp : model.importances) CHECK(imp == 0.0);
}

TEST_CASE("depth-1 split on the crafted dataset") {
    const auto x = make_matrix(1, {0, 1, 2, 3});
    const std::vector<double> y{0, 0, 10, 10};
    const auto model = fit(x, y, single_tree(1));
    const auto& nodes = model.trees[0].nodes;
    REQUIRE(nodes.size() == 3);
    CHECK(nodes[0].feature == 0);
    CHECK(nodes[0].threshold == 1.5);
    CHECK(nodes[static_cast<std::size_t>(nodes[0].left)].value == 0.0);
    CHECK(nodes[static_cast<std::size_t>(nodes[0].right)].value == 10.0);
}

TEST_CASE("depth-1 split matches brute force on random datasets") {
    Rng rng(31337);
    int unique_checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t rows = 3 + rng.bounded(20);
        const std::size_t cols = 1 + rng.bounded(4);
        std::vector<double> v(rows * cols);
        // Coarse values so ties and duplicates occur.
        for (auto& a : v) a = static_cast<double>(rng.bounded(6));
        std::vector<double> y(rows);
        for (auto& a : y) a = static_cast<double>(rng.bounded(10)) - 3.0;
        const auto x = make_matrix(cols, v);
        const auto brute = brute_force_split(x, y);
        const auto model = fit(x, y, single_tree(1));
        const auto& root = model.trees[0].nodes[0];
        if (brute.feature < 0) {
            CHECK(root.is_leaf());
            continue;
        }
        REQUIRE_FALSE(root.is_leaf());
        // Child SSE of the chosen split.
        std::vector<double> l;
        std::vector<double> r;
        for (std::size_t i = 0; i < rows; ++i) (x.at(i, static_cast<std::size_t>(root.feature)) <= root.threshold ? l : r).push_back(y[i]);
        auto sse = [](const std::vector<double>& s) {
            const double m = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
            double acc = 0;
            for (double a : s) acc += (a - m) * (a - m);
            return acc;
        };
        CHECK(sse(l) + sse(r) == Catch::Approx(brute.sse).margin(1e-9));
        if (brute.runner_up - brute.sse > 1e-6) {
            ++unique_checked;
            CHECK(root.feature == brute.feature);
            CHECK(root.threshold == brute.threshold);
        }
    }
    CHECK(unique_checked > 50);
}

TEST_CASE("ties go to the lower feature and lower threshold") {
    // Columns 0 and 1 are identical; every split of column 0 is mirrored.
    const auto x = make_matrix(2, {0, 0, 1, 1, 2, 2, 3, 3});
    const std::vector<double> y{1, 1, 5, 5};
    const auto model = fit(x, y, single_tree(1));
    CHECK(model.trees[0].nodes[0].feature == 0);
    // Symmetric targets: thresholds 0.5 and 2.5 give the same SSE.
    const auto x2 = make_matrix(1, {0, 1, 2, 3});
    const std::vector<double> y2{0, 5, 5, 0};
    const auto m2 = fit(x2, y2, single_tree(1));
    CHECK(m2.trees[0].nodes[0].threshold == 0.5);
}

TEST_CASE("unpruned single tree memorizes the training set") {
    const auto s = linear_oracle(200, 3, 4);
    const auto model = fit(s.x, s.y, single_tree());
    const auto pred = predict(model, s.x);
    for (std::size_t i = 0; i < s.y.size(); ++i) CHECK(pred[i] == s.y[i]);
}

TEST_CASE("min_samples_leaf is respected") {
    const auto s = linear_oracle(200, 3, 5);
    auto hp = single_tree();
    hp.min_samples_leaf = 7;
    const auto model = fit(s.x, s.y, hp);
    for (const auto& n : model.trees[0].nodes) {
        if (n.is_leaf()) CHECK(n.count >= 7);
        else CHECK(std::isfinite(n.threshold));
    }
}

TEST_CASE("synthetic regression oracle") {
    const auto s = linear_oracle(500, 5, 6);
    const auto train = select_rows(s.x, iota_n(0, 400));
    const auto test = select_rows(s.x, iota_n(400, 500));
    const std::vector<double> y_train(s.y.begin(), s.y.begin() + 400);
    const std::vector<double> y_test(s.y.begin() + 400, s.y.end());
    const auto model = fit(train, y_train, ForestHyperparams{});
    CHECK(r_squared(predict(model, test), y_test) >= 0.9);
    CHECK(model.importances[0] > 0.8);
    const double sum = std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(feature_importance(model) == model.importances);
}

TEST_CASE("duplicated informative feature shares importance") {
    const auto s = linear_oracle(400, 4, 8);
    ForestHyperparams hp;
    hp.n_trees = 200;
    const auto single = fit(s.x, s.y, hp);

    std::vector<double> v;
    for (std::size_t r = 0; r < s.x.rows; ++r) {
        v.push_back(s.x.at(r, 0));
        for (std::size_t c = 0; c < 4; ++c) v.push_back(s.x.at(r, c));
    }
    const auto dup = fit(make_matrix(5, v), s.y, hp);
    const double pair = dup.importances[0] + dup.importances[1];
    CHECK(std::abs(pair - single.importances[0]) < 0.1);
}

TEST_CASE("predictions stay within the training target range") {
    const auto s = linear_oracle(300, 4, 9);
    ForestHyperparams hp;
    hp.n_trees = 50;
    const auto model = fit(s.x, s.y, hp);
    const auto [lo, hi] = std::minmax_element(s.y.begin(), s.y.end());
    const auto probe = linear_oracle(300, 4, 10);
    FeatureMatrix wide = probe.x;
    for (auto& a : wide.values) a = a * 4.0 - 2.0;
    for (double p : predict(model, wide)) {
        CHECK(p >= *lo);
        CHECK(p <= *hi);
    }
}

TEST_CASE("row permutation does not change a bootstrap-free tree") {
    const auto s = linear_oracle(120, 3, 12);
    std::vector<std::size_t> perm = iota_n(0, 120);
    Rng rng(3);
    rng.shuffle(std::span<std::size_t>(perm));
    const auto px = select_rows(s.x, perm);
    std::vector<double> py;
    for (auto i : perm) py.push_back(s.y[i]);
    auto hp = single_tree();
    hp.min_samples_leaf = 2;
    const auto a = fit(s.x, s.y, hp);
    const auto b = fit(px, py, hp);
    REQUIRE(a.trees[0].nodes.size() == b.trees[0].nodes.size());
    for (std::size_t i = 0; i < a.trees[0].nodes.size(); ++i) {
        const auto& na = a.trees[0].nodes[i];
        const auto& nb = b.trees[0].nodes[i];
        CHECK(na.feature == nb.feature);
        CHECK(na.threshold == nb.threshold);
        CHECK(na.left == nb.left);
        CHECK(na.value == nb.value);
        CHECK(na.count == nb.count);
    }
}

TEST_CASE("ensemble variance shrinks with more trees") {
    const auto s = linear_oracle(200, 5, 13);
    const auto probe = linear_oracle(50, 5, 14);
    auto spread = [&](std::size_t trees) {
        std::vector<std::vector<double>> preds;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            ForestHyperparams hp;
            hp.n_trees = trees;
            hp.seed = seed;
            preds.push_back(predict(fit(s.x, s.y, hp), probe.x));
        }
        double total = 0;
        for (std::size_t r = 0; r < probe.x.rows; ++r) {
            double m = 0;
            for (const auto& p : preds) m += p[r];
            m /= 10.0;
            for (const auto& p : preds) total += (p[r] - m) * (p[r] - m);
        }
        return total / (10.0 * static_cast<double>(probe.x.rows));
    };
    const double v10 = spread(10);
    const double v50 = spread(50);
    const double v200 = spread(200);
    CHECK(v50 <= v10);
    CHECK(v200 <= v50);
}

TEST_CASE("prediction helpers") {
    ForestModel m;
    m.feature_names = {"a", "b"};
    Tree leaf42;
    leaf42.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 42.0, 1});
    m.trees = {leaf42};
    const auto x = make_matrix(2, {1, 2});
    CHECK(predict(m, x)[0] == 42.0);
    Tree t10;
    t10.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 10.0, 1});
    Tree t20;
    t20.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 20.0, 1});
    m.trees = {t10, t20};
    CHECK(predict(m, x)[0] == 15.0);
    const auto wrong = make_matrix(3, {1, 2, 3});
    CHECK_THROWS_AS(predict(m, wrong), SchemaError);
}

TEST_CASE("fit input errors") {
    const auto x = make_matrix(1, {1});
    CHECK_THROWS_AS(fit(x, std::vector<double>{1.0}, ForestHyperparams{}), DomainError);
    const auto x2 = make_matrix(1, {1, 2});
    CHECK_THROWS_AS(fit(x2, std::vector<double>{1.0}, ForestHyperparams{}), DomainError);
    CHECK_THROWS_AS(fit(x2, std::vector<double>{1.0, std::nan("")}, ForestHyperparams{}), NonFiniteError);
}

TEST_CASE("training is independent of worker count") {
    const auto s = linear_oracle(150, 4, 15);
    ForestHyperparams hp;
    hp.n_trees = 40;
    CHECK(to_json(fit(s.x, s.y, hp, 1)) == to_json(fit(s.x, s.y, hp, 4)));
}

TEST_CASE("model JSON round trip") {
    const auto s = linear_oracle(150, 4, 16);
    ForestHyperparams hp;
    hp.n_trees = 30;
    hp.max_depth = 6;
    auto model = fit(s.x, s.y, hp);
    model.dataset_fingerprint = "00ff";
    model.training = TrainingInfo{7, 0.8, 11, 5, false};
    const auto text = to_json(model);
    const auto back = from_json(text);
    CHECK(to_json(back) == text);
    CHECK(back.feature_names == model.feature_names);
    REQUIRE(back.training.has_value());
    CHECK(back.training->split_seed == 7);
    CHECK(back.hyperparams.max_depth == std::optional<std::size_t>(6));
    const auto a = predict(model, s.x);
    const auto b = predict(back, s.x);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::memcmp(&a[i], &b[i], sizeof(double)) == 0);

    CHECK_THROWS_AS(from_json("{}"), SchemaError);
    CHECK_THROWS_AS(from_json("not json"), SchemaError);
    auto j = text;
    j.replace(j.find("\"schema_version\": 1"), 19, "\"schema_version\": 9");
    CHECK_THROWS_AS(from_json(j), SchemaError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), IoError);
}

TEST_CASE("fold assignment") {
    const auto folds = fold_assignment(23, 5, 99);
    std::vector<int> sizes(5, 0);
    for (auto f : folds) ++sizes[f];
    for (int s : sizes) CHECK((s == 4 || s == 5));
    CHECK(fold_assignment(23, 5, 99) == folds);
    CHECK(fold_assignment(23, 5, 100) != folds);
}

TEST_CASE("grid search") {
    const auto s = linear_oracle(100, 3, 17);
    ForestHyperparams only;
    only.n_trees = 10;
    only.max_depth = 3;
    const std::vector<ForestHyperparams> one{only};
    const auto res = grid_search_cv(s.x, s.y, one, 5, 1);
    CHECK(res.best.label() == only.label());
    REQUIRE(res.table.size() == 1);
    CHECK(res.table[0].fold_rmse.size() == 5);

    CHECK_THROWS_AS(grid_search_cv(s.x, s.y, std::vector<ForestHyperparams>{}, 5, 1), DomainError);
    CHECK_THROWS_AS(grid_search_cv(s.x, s.y, one, 1, 1), DomainError);

    const auto grid = default_search_grid(16, 3);
    CHECK(grid.size() == 36);
}

TEST_CASE("grid search prefers regularization on pure noise") {
    Rng rng(21);
    std::vector<double> v(200 * 3);
    for (auto& a : v) a = rng.uniform();
    std::vector<double> y(200);
    for (auto& a : y) a = rng.uniform();
    const auto x = make_matrix(3, v);
    ForestHyperparams memorize;
    memorize.n_trees = 20;
    memorize.min_samples_leaf = 1;
    ForestHyperparams regularized = memorize;
    regularized.max_depth = 1;
    regularized.min_samples_leaf = 40;
    const std::vector<ForestHyperparams> grid{memorize, regularized};
    const auto a = grid_search_cv(x, y, grid, 5, 4);
    CHECK(a.best.label() == regularized.label());
    const auto b = grid_search_cv(x, y, grid, 5, 4);
    for (std::size_t i = 0; i < a.table.size(); ++i) CHECK(a.table[i].fold_rmse == b.table[i].fold_rmse);
}

TEST_CASE("grid search tie break prefers fewer trees") {
    const auto x = make_matrix(1, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    const std::vector<double> y(10, 3.0);
    ForestHyperparams big;
    big.n_trees = 20;
    ForestHyperparams small = big;
    small.n_trees = 5;
    const std::vector<ForestHyperparams> grid{big, small};
    CHECK(grid_search_cv(x, y, grid, 5, 1).best.n_trees == 5);
}
