#pragma once

// Decision-tree surrogate for the forest's anomaly labels: CART with Gini
// impurity, exhaustive midpoint split search, Gini-decrease importances.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procuraudit/errors.hpp"
#include "procuraudit/features.hpp"
#include "procuraudit/numfmt.hpp"

namespace procuraudit::explain {

struct TreeParams {
    std::size_t max_depth = 5;
    std::size_t min_samples_split = 2;
};

struct TreeNode {
    int feature = -1; // -1 -> leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::size_t n_samples = 0;
    double gini = 0.0;
    std::array<std::size_t, 2> class_counts{0, 0};
    int label = 0; // leaf majority, ties -> 0
    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // root at 0
    TreeParams params;
    std::size_t n_features = 0;
};

namespace detail {

inline double gini(std::size_t c0, std::size_t c1) {
    double n = static_cast<double>(c0 + c1);
    if (n == 0.0) return 0.0;
    double p0 = c0 / n, p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct BestSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double decrease = -1.0;
};

// Exhaustive scan over features and midpoints between consecutive sorted
// distinct values; ties broken by (lower feature index, lower threshold).
inline BestSplit find_best_split(const features::FeatureMatrix& m, const std::vector<int>& labels,
                                 const std::vector<std::size_t>& idx, double node_gini) {
    const std::size_t n = idx.size();
    BestSplit best;
    std::vector<std::pair<double, int>> column(n);
    for (std::size_t f = 0; f < m.n_cols(); ++f) {
        for (std::size_t i = 0; i < n; ++i)
            column[i] = {m.at(idx[i], f), labels[idx[i]]};
        std::sort(column.begin(), column.end());
        std::size_t total1 = 0;
        for (const auto& [v, lab] : column) total1 += lab;
        std::size_t left_n = 0, left1 = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_n += 1;
            left1 += column[i].second;
            if (column[i].first == column[i + 1].first) continue;
            double thr = 0.5 * (column[i].first + column[i + 1].first);
            std::size_t right_n = n - left_n;
            double g_left = gini(left_n - left1, left1);
            double g_right = gini(right_n - (total1 - left1), total1 - left1);
            double weighted = (left_n * g_left + right_n * g_right) / static_cast<double>(n);
            double decrease = node_gini - weighted;
            if (decrease < 0.0) decrease = 0.0;
            // Zero-decrease splits are allowed on impure nodes (an XOR
            // pattern needs them to become separable one level down).
            // Ascending (feature, threshold) scan + strict improvement
            // implements the (lower feature, lower threshold) tie-break.
            if (decrease > best.decrease) best = {true, static_cast<int>(f), thr, decrease};
        }
    }
    return best;
}

inline int build(DecisionTree& tree, const features::FeatureMatrix& m, const std::vector<int>& labels,
                 std::vector<std::size_t> idx, std::size_t depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& self = tree.nodes.back();
    self.n_samples = idx.size();
    for (std::size_t i : idx) ++self.class_counts[labels[i]];
    self.gini = gini(self.class_counts[0], self.class_counts[1]);
    self.label = self.class_counts[1] > self.class_counts[0] ? 1 : 0;

    bool pure = self.class_counts[0] == 0 || self.class_counts[1] == 0;
    if (pure || depth >= tree.params.max_depth || idx.size() < tree.params.min_samples_split)
        return id;

    BestSplit split = find_best_split(m, labels, idx, tree.nodes[id].gini);
    if (!split.found) return id;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
        if (m.at(i, split.feature) < split.threshold)
            left_idx.push_back(i);
        else
            right_idx.push_back(i);
    }
    tree.nodes[id].feature = split.feature;
    tree.nodes[id].threshold = split.threshold;
    int l = build(tree, m, labels, std::move(left_idx), depth + 1);
    int r = build(tree, m, labels, std::move(right_idx), depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
}

} // namespace detail

inline DecisionTree fit_tree(const features::FeatureMatrix& m, const std::vector<int>& labels,
                             const TreeParams& params = {}) {
    if (m.n_rows() != labels.size()) throw DimensionError("labels must align with matrix rows");
    bool has0 = false, has1 = false;
    for (int l : labels) (l ? has1 : has0) = true;
    if (!has0 || !has1) throw SingleClassError("both classes must be present");

    DecisionTree tree;
    tree.params = params;
    tree.n_features = m.n_cols();
    std::vector<std::size_t> idx(m.n_rows());
    std::iota(idx.begin(), idx.end(), 0);
    detail::build(tree, m, labels, std::move(idx), 0);
    return tree;
}

// Route feature < threshold -> left, else right.
inline int predict(const DecisionTree& tree, const double* x, std::size_t n_features) {
    if (n_features != tree.n_features) throw DimensionError("feature-count mismatch in predict");
    int id = 0;
    while (!tree.nodes[id].is_leaf()) {
        const TreeNode& node = tree.nodes[id];
        id = x[node.feature] < node.threshold ? node.left : node.right;
    }
    return tree.nodes[id].label;
}

struct ImportanceReport {
    // descending importance; zero-importance features omitted
    std::vector<std::pair<std::string, double>> entries;
};

inline ImportanceReport feature_importance(const DecisionTree& tree,
                                           const std::vector<std::string>& column_names) {
    std::map<int, double> raw;
    double n_total = tree.nodes.empty() ? 0.0 : static_cast<double>(tree.nodes[0].n_samples);
    for (const auto& node : tree.nodes) {
        if (node.is_leaf()) continue;
        const TreeNode& l = tree.nodes[node.left];
        const TreeNode& r = tree.nodes[node.right];
        double weighted_child =
            (l.n_samples * l.gini + r.n_samples * r.gini) / static_cast<double>(node.n_samples);
        raw[node.feature] += (node.n_samples / n_total) * (node.gini - weighted_child);
    }
    double sum = 0.0;
    for (const auto& [f, v] : raw) sum += v;

    ImportanceReport report;
    if (sum <= 0.0) return report;
    for (const auto& [f, v] : raw)
        if (v > 0.0) report.entries.emplace_back(column_names.at(f), v / sum);
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return report;
}

inline nlohmann::json tree_to_json(const DecisionTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
        if (n.is_leaf())
            nodes.push_back({{"label", n.label},
                             {"n", n.n_samples},
                             {"counts", {n.class_counts[0], n.class_counts[1]}}});
        else
            nodes.push_back({{"f", n.feature},
                             {"t", n.threshold},
                             {"l", n.left},
                             {"r", n.right},
                             {"n", n.n_samples},
                             {"gini", n.gini}});
    }
    return nlohmann::json{{"max_depth", tree.params.max_depth}, {"nodes", nodes}};
}

inline void print_tree(std::ostream& os, const DecisionTree& tree,
                       const std::vector<std::string>& column_names, int id = 0, int indent = 0) {
    const TreeNode& node = tree.nodes[id];
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    if (node.is_leaf()) {
        os << pad << "leaf label=" << node.label << " n=" << node.n_samples << " counts=["
           << node.class_counts[0] << "," << node.class_counts[1] << "]\n";
        return;
    }
    os << pad << column_names.at(node.feature) << " < " << fmt_double(node.threshold)
       << " (n=" << node.n_samples << ", gini=" << fmt_double(node.gini) << ")\n";
    print_tree(os, tree, column_names, node.left, indent + 1);
    print_tree(os, tree, column_names, node.right, indent + 1);
}

} // namespace procuraudit::explain
