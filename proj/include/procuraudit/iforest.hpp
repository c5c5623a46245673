#pragma once

// Isolation forest: randomized binary trees over subsamples, expected path
// lengths with the c(n) correction, anomaly scores in (0, 1].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procuraudit/errors.hpp"
#include "procuraudit/features.hpp"
#include "procuraudit/rng.hpp"

namespace procuraudit::iforest {

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t subsample_size = 256;
    std::size_t max_depth = 0; // 0 -> ceil(log2(subsample_size))
    std::uint64_t seed = 0;

    std::size_t effective_max_depth() const {
        if (max_depth) return max_depth;
        return static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(subsample_size))));
    }

    void validate() const {
        if (n_trees < 1) throw DegenerateInput("n_trees >= 1");
        if (subsample_size < 2) throw DegenerateInput("subsample_size >= 2");
    }
};

// Expected path length of an unsuccessful BST search among n points.
// Exact base cases at n <= 2; harmonic approximation above.
inline double avg_path_length_c(std::size_t n) {
    if (n <= 1) return 0.0;
    if (n == 2) return 1.0;
    constexpr double euler_gamma = 0.5772156649;
    double m = static_cast<double>(n);
    return 2.0 * (std::log(m - 1.0) + euler_gamma) - 2.0 * (m - 1.0) / m;
}

// Flat node storage; feature == -1 marks an external node.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::size_t size = 0; // external only
    bool is_external() const { return feature < 0; }
};

struct IsolationTree {
    std::vector<TreeNode> nodes; // preorder; root at 0
};

struct IsolationForest {
    ForestParams params;
    std::size_t psi_effective = 0;
    std::size_t n_features = 0;
    std::vector<IsolationTree> trees;
};

namespace detail {

inline int build_node(IsolationTree& tree, const features::FeatureMatrix& m,
                      std::vector<std::size_t>& sample, std::size_t begin, std::size_t end,
                      std::size_t depth, std::size_t max_depth, Rng& rng) {
    const std::size_t count = end - begin;
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    auto make_external = [&] {
        tree.nodes[id].feature = -1;
        tree.nodes[id].size = count;
        return id;
    };
    if (count <= 1 || depth >= max_depth) return make_external();

    // candidate features: non-constant over the sample
    std::vector<int> candidates;
    std::vector<std::pair<double, double>> ranges;
    for (std::size_t f = 0; f < m.n_cols(); ++f) {
        double lo = m.at(sample[begin], f), hi = lo;
        for (std::size_t i = begin + 1; i < end; ++i) {
            double v = m.at(sample[i], f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi > lo) {
            candidates.push_back(static_cast<int>(f));
            ranges.emplace_back(lo, hi);
        }
    }
    if (candidates.empty()) return make_external();

    std::size_t pick = static_cast<std::size_t>(rng.next_below(candidates.size()));
    int feature = candidates[pick];
    auto [lo, hi] = ranges[pick];
    double threshold = lo + rng.next_open() * (hi - lo);
    if (threshold <= lo) threshold = std::nextafter(lo, hi); // open interval
    if (threshold > hi) threshold = hi;

    // partition: strict-less left, greater-or-equal right
    std::size_t mid = begin;
    for (std::size_t i = begin; i < end; ++i)
        if (m.at(sample[i], feature) < threshold) std::swap(sample[mid++], sample[i]);

    tree.nodes[id].feature = feature;
    tree.nodes[id].threshold = threshold;
    int left = build_node(tree, m, sample, begin, mid, depth + 1, max_depth, rng);
    int right = build_node(tree, m, sample, mid, end, depth + 1, max_depth, rng);
    tree.nodes[id].left = left;
    tree.nodes[id].right = right;
    return id;
}

} // namespace detail

inline IsolationTree build_tree(const features::FeatureMatrix& m, std::vector<std::size_t> sample,
                                const ForestParams& params, Rng rng) {
    IsolationTree tree;
    detail::build_node(tree, m, sample, 0, sample.size(), 0, params.effective_max_depth(), rng);
    return tree;
}

inline IsolationForest build_forest(const features::FeatureMatrix& m, const ForestParams& params) {
    params.validate();
    const std::size_t n = m.n_rows();
    if (n < 2) throw InsufficientData("isolation forest requires at least 2 rows");

    IsolationForest forest;
    forest.params = params;
    forest.psi_effective = std::min(params.subsample_size, n);
    forest.n_features = m.n_cols();
    forest.trees.reserve(params.n_trees);

    Rng root(params.seed);
    for (std::size_t k = 0; k < params.n_trees; ++k) {
        Rng rng = root.child(k);
        // uniform subsample without replacement (partial Fisher-Yates)
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < forest.psi_effective; ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(forest.psi_effective);
        forest.trees.push_back(build_tree(m, std::move(idx), params, rng));
    }
    return forest;
}

// Edges from root to the reached external node plus c(size) for the
// unbuilt subtree.
inline double path_length(const IsolationTree& tree, const double* x, std::size_t n_features,
                          std::size_t expected_features) {
    if (n_features != expected_features) throw DimensionError("feature-count mismatch in path_length");
    double edges = 0.0;
    int id = 0;
    while (!tree.nodes[id].is_external()) {
        const TreeNode& node = tree.nodes[id];
        id = x[node.feature] < node.threshold ? node.left : node.right;
        edges += 1.0;
    }
    return edges + avg_path_length_c(tree.nodes[id].size);
}

struct ScoreVector {
    std::vector<double> expected_path; // E(h) per row
    std::vector<double> score;         // s = 2^(-E(h)/c(psi_eff))
};

inline ScoreVector score(const IsolationForest& forest, const features::FeatureMatrix& m) {
    if (m.n_cols() != forest.n_features) throw DimensionError("feature-count mismatch in score");
    ScoreVector out;
    const std::size_t n = m.n_rows();
    out.expected_path.resize(n);
    out.score.resize(n);
    const double c = avg_path_length_c(forest.psi_effective);
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0.0;
        for (const auto& tree : forest.trees)
            sum += path_length(tree, m.row(r), m.n_cols(), forest.n_features);
        double eh = sum / static_cast<double>(forest.trees.size());
        out.expected_path[r] = eh;
        out.score[r] = std::exp2(-eh / c);
    }
    return out;
}

// Top-k by score descending, ties by row position ascending.
inline std::vector<std::pair<std::size_t, double>> rank_anomalies(const ScoreVector& scores,
                                                                  std::size_t k) {
    if (k < 1) throw DegenerateInput("k >= 1");
    std::vector<std::size_t> order(scores.score.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores.score[a] != scores.score[b]) return scores.score[a] > scores.score[b];
        return a < b;
    });
    k = std::min(k, order.size());
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.emplace_back(order[i], scores.score[order[i]]);
    return out;
}

// Versioned JSON: {"version", "params", "psi_effective", "n_features",
// "trees": [flat node arrays]}
inline nlohmann::json forest_to_json(const IsolationForest& forest) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            if (n.is_external())
                nodes.push_back({{"size", n.size}});
            else
                nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right}});
        }
        trees.push_back(std::move(nodes));
    }
    return nlohmann::json{{"version", 1},
                          {"params",
                           {{"n_trees", forest.params.n_trees},
                            {"subsample_size", forest.params.subsample_size},
                            {"max_depth", forest.params.effective_max_depth()},
                            {"seed", forest.params.seed}}},
                          {"psi_effective", forest.psi_effective},
                          {"n_features", forest.n_features},
                          {"trees", trees}};
}

} // namespace procuraudit::iforest
