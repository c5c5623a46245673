#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "procuraudit/explain.hpp"

using namespace procuraudit;
using namespace procuraudit::explain;
using Catch::Matchers::WithinAbs;

namespace {

features::FeatureMatrix matrix_1d(const std::vector<double>& xs) {
    features::FeatureMatrix m;
    m.column_names = {"x"};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        m.row_keys.push_back({"r" + std::to_string(i), i});
        m.data.push_back(xs[i]);
    }
    return m;
}

features::FeatureMatrix matrix_2d(const std::vector<std::pair<double, double>>& rows) {
    features::FeatureMatrix m;
    m.column_names = {"x", "y"};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.row_keys.push_back({"r" + std::to_string(i), i});
        m.data.push_back(rows[i].first);
        m.data.push_back(rows[i].second);
    }
    return m;
}

} // namespace

TEST_CASE("fit_tree on separable 1-D data splits at the midpoint") {
    auto m = matrix_1d({1, 2, 8, 9});
    auto tree = fit_tree(m, {0, 0, 1, 1});
    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.nodes[0].feature == 0);
    CHECK_THAT(tree.nodes[0].threshold, WithinAbs(5.0, 1e-12));
    CHECK(tree.nodes[tree.nodes[0].left].label == 0);
    CHECK(tree.nodes[tree.nodes[0].right].label == 1);
    // pure leaves -> perfect training accuracy
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        CHECK(predict(tree, m.row(r), m.n_cols()) == (r >= 2 ? 1 : 0));
}

TEST_CASE("single-class labels throw") {
    auto m = matrix_1d({1, 2, 3});
    CHECK_THROWS_AS(fit_tree(m, {1, 1, 1}), SingleClassError);
    CHECK_THROWS_AS(fit_tree(m, {0, 0, 0}), SingleClassError);
}

TEST_CASE("XOR square is separable at depth 2") {
    auto m = matrix_2d({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    std::vector<int> labels = {0, 1, 1, 0};
    TreeParams params;
    params.max_depth = 2;
    auto tree = fit_tree(m, labels, params);
    for (std::size_t r = 0; r < 4; ++r)
        CHECK(predict(tree, m.row(r), 2) == labels[r]);
}

TEST_CASE("predict routes threshold-equal points right") {
    auto m = matrix_1d({1, 2, 8, 9});
    auto tree = fit_tree(m, {0, 0, 1, 1});
    double at_threshold = tree.nodes[0].threshold;
    CHECK(predict(tree, &at_threshold, 1) == 1);
    double below = std::nextafter(at_threshold, -1e9);
    CHECK(predict(tree, &below, 1) == 0);
}

TEST_CASE("predict dimension mismatch") {
    auto m = matrix_1d({1, 2, 8, 9});
    auto tree = fit_tree(m, {0, 0, 1, 1});
    double x[2] = {0, 0};
    CHECK_THROWS_AS(predict(tree, x, 2), DimensionError);
}

TEST_CASE("feature_importance") {
    SECTION("single split has importance 1") {
        auto m = matrix_1d({1, 2, 8, 9});
        auto tree = fit_tree(m, {0, 0, 1, 1});
        auto report = feature_importance(tree, m.column_names);
        REQUIRE(report.entries.size() == 1);
        CHECK(report.entries[0].first == "x");
        CHECK_THAT(report.entries[0].second, WithinAbs(1.0, 1e-12));
    }
    SECTION("importances sum to 1 and are non-negative") {
        auto m = matrix_2d({{0, 0}, {0, 1}, {1, 0}, {1, 1}, {0.2, 0.3}, {0.9, 0.1}});
        std::vector<int> labels = {0, 1, 1, 0, 0, 1};
        auto tree = fit_tree(m, labels);
        auto report = feature_importance(tree, m.column_names);
        REQUIRE(!report.entries.empty());
        double sum = 0;
        for (const auto& [name, v] : report.entries) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK_THAT(sum, WithinAbs(1.0, 1e-9));
        // descending order
        for (std::size_t i = 1; i < report.entries.size(); ++i)
            CHECK(report.entries[i - 1].second >= report.entries[i].second);
    }
    SECTION("weighted decrease arithmetic") {
        // root split on f0 decreases weighted impurity by 0.3 with weight 1;
        // one child splits on f1 with node weight 0.5 and decrease 0.2 local
        // => contributions 0.3 and 0.1, normalized 0.75 / 0.25
        // construct: 8 rows, root gini 0.5
        features::FeatureMatrix m;
        m.column_names = {"f0", "f1"};
        // left of f0: 4 rows all label 0 (pure); right: mixed, separable by f1
        std::vector<std::pair<double, double>> rows = {
            {0, 0}, {0, 1}, {0, 0}, {0, 1}, {1, 0}, {1, 0}, {1, 1}, {1, 1}};
        std::vector<int> labels = {0, 0, 0, 0, 0, 0, 1, 1};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            m.row_keys.push_back({"r", i});
            m.data.push_back(rows[i].first);
            m.data.push_back(rows[i].second);
        }
        auto tree = fit_tree(m, labels);
        auto report = feature_importance(tree, m.column_names);
        REQUIRE(report.entries.size() == 2);
        // hand computation: root gini = 1 - (6/8)^2 - (2/8)^2 = 0.375
        // split f0: left pure 0, right gini 0.5 weight 4/8 -> weighted 0.25,
        // decrease 0.125, node weight 1 -> contribution 0.125
        // right child split f1: gini 0.5 -> 0, decrease 0.5, weight 4/8 -> 0.25
        // importances: f1 = 0.25/0.375 = 2/3, f0 = 0.125/0.375 = 1/3
        CHECK(report.entries[0].first == "f1");
        CHECK_THAT(report.entries[0].second, WithinAbs(2.0 / 3.0, 1e-9));
        CHECK_THAT(report.entries[1].second, WithinAbs(1.0 / 3.0, 1e-9));
    }
}

TEST_CASE("determinism: identical inputs give identical trees") {
    auto m = matrix_2d({{0.1, 0.9}, {0.4, 0.2}, {0.8, 0.7}, {0.3, 0.3}, {0.9, 0.5}, {0.2, 0.8}});
    std::vector<int> labels = {0, 1, 1, 0, 1, 0};
    auto a = tree_to_json(fit_tree(m, labels)).dump();
    auto b = tree_to_json(fit_tree(m, labels)).dump();
    CHECK(a == b);
}

TEST_CASE("max_depth bounds the tree") {
    auto m = matrix_1d({1, 2, 3, 4, 5, 6, 7, 8});
    std::vector<int> labels = {0, 1, 0, 1, 0, 1, 0, 1};
    TreeParams params;
    params.max_depth = 1;
    auto tree = fit_tree(m, labels, params);
    // depth 1: one internal node and two leaves at most
    CHECK(tree.nodes.size() <= 3);
}

TEST_CASE("text rendering includes split columns") {
    auto m = matrix_1d({1, 2, 8, 9});
    auto tree = fit_tree(m, {0, 0, 1, 1});
    std::ostringstream os;
    print_tree(os, tree, m.column_names);
    CHECK(os.str().find("x < 5") != std::string::npos);
    CHECK(os.str().find("leaf") != std::string::npos);
}
