#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "wrse/errors.hpp"
#include "wrse/optim.hpp"

namespace wrse {

/// Gradient-boosted tree settings. paper() mirrors the reference learner's
/// published configuration; desk() is the small preset used by the test and
/// benchmark suites.
struct GbtConfig {
    int max_leaves = 64;
    int max_trees = 1000;
    double learning_rate = 0.01;
    int min_samples_leaf = 20;
    int early_stop_patience = 10;

    static GbtConfig paper() { return GbtConfig{}; }
    static GbtConfig desk() {
        GbtConfig c;
        c.max_leaves = 31;
        c.max_trees = 200;
        return c;
    }

    void validate() const {
        if (max_leaves < 1) throw DomainError("gbt: max_leaves must be positive");
        if (max_trees < 1) throw DomainError("gbt: max_trees must be positive");
        if (!(learning_rate >= 0.0)) throw DomainError("gbt: learning_rate must be nonnegative");
        if (min_samples_leaf < 1) throw DomainError("gbt: min_samples_leaf must be positive");
        if (early_stop_patience < 1) throw DomainError("gbt: early_stop_patience must be positive");
    }
};

struct GbtNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // goes left when x[feature] < threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double leaf_value = 0.0;    // already scaled by the learning rate

    bool is_leaf() const { return feature < 0; }
};

struct GbtTree {
    std::vector<GbtNode> nodes;

    double value(const double* x) const {
        std::int32_t i = 0;
        for (;;) {
            const GbtNode& n = nodes[static_cast<std::size_t>(i)];
            if (n.is_leaf()) return n.leaf_value;
            i = x[n.feature] < n.threshold ? n.left : n.right;
        }
    }
};

/// Additive tree model over the logistic link. predict() is sigmoid(base + sum
/// of tree values); a model with no trees therefore predicts the class prior.
struct GbtModel {
    std::uint32_t n_features = 0;
    double base_score = 0.0;  // prior log-odds
    std::vector<GbtTree> trees;
    bool single_class = false;  // degenerate training set, constant predictor
    int rounds_trained = 0;
    int best_round = -1;  // last round kept by early stopping

    double raw_score(std::span<const double> x) const {
        if (x.size() != n_features) throw DimensionMismatch("gbt: feature dimension mismatch");
        double s = base_score;
        for (const auto& t : trees) s += t.value(x.data());
        return s;
    }

    double predict(std::span<const double> x) const { return sigmoid(raw_score(x)); }
};

namespace detail {

// Exact greedy split search over presorted per-feature row orders. Node row
// sets are contiguous ranges of the order arrays; a split stably partitions
// each range so children stay sorted. Ties in gain break to the lowest
// feature index, then the lowest threshold, keeping training deterministic.
class GbtTreeBuilder {
public:
    GbtTreeBuilder(std::span<const double> x, std::size_t n_rows, std::size_t n_features,
                   const GbtConfig& cfg)
        : x_(x), n_(n_rows), d_(n_features), cfg_(cfg) {
        sorted_.resize(d_);
        for (std::size_t f = 0; f < d_; ++f) {
            auto& idx = sorted_[f];
            idx.resize(n_);
            for (std::size_t i = 0; i < n_; ++i) idx[i] = static_cast<std::uint32_t>(i);
            std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
                const double va = x_[a * d_ + f], vb = x_[b * d_ + f];
                return va < vb || (va == vb && a < b);
            });
        }
        work_.resize(d_);
        scratch_.resize(n_);
    }

    GbtTree build(std::span<const double> grad, std::span<const double> hess) {
        for (std::size_t f = 0; f < d_; ++f) work_[f] = sorted_[f];

        GbtTree tree;
        open_.clear();
        candidates_.clear();
        last_leaves_.clear();

        double g0 = 0.0, h0 = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            g0 += grad[i];
            h0 += hess[i];
        }
        tree.nodes.push_back(GbtNode{});
        open_.push_back(BuildNode{0, n_, g0, h0, 0});
        candidates_.push_back(find_split(open_[0], grad, hess));

        int n_leaves = 1;
        while (n_leaves < cfg_.max_leaves) {
            std::size_t best = candidates_.size();
            for (std::size_t c = 0; c < candidates_.size(); ++c) {
                if (!candidates_[c].valid) continue;
                if (best == candidates_.size() || candidates_[c].gain > candidates_[best].gain)
                    best = c;
            }
            if (best == candidates_.size()) break;

            const SplitCandidate cand = candidates_[best];
            const BuildNode node = open_[best];
            candidates_[best].valid = false;

            const std::size_t mid = partition(node, cand.feature, cand.threshold);
            const std::int32_t left_index = static_cast<std::int32_t>(tree.nodes.size());
            {
                GbtNode& parent = tree.nodes[static_cast<std::size_t>(node.node_index)];
                parent.feature = cand.feature;
                parent.threshold = cand.threshold;
                parent.left = left_index;
                parent.right = left_index + 1;
            }
            tree.nodes.push_back(GbtNode{});
            tree.nodes.push_back(GbtNode{});

            const BuildNode left{node.begin, mid, cand.left_grad, cand.left_hess, left_index};
            const BuildNode right{mid, node.end, node.sum_grad - cand.left_grad,
                                  node.sum_hess - cand.left_hess, left_index + 1};
            open_[best] = left;
            candidates_[best] = find_split(left, grad, hess);
            open_.push_back(right);
            candidates_.push_back(find_split(right, grad, hess));
            ++n_leaves;
        }

        // Leaf values: Newton step scaled by the learning rate.
        for (const BuildNode& leaf : open_) {
            GbtNode& n = tree.nodes[static_cast<std::size_t>(leaf.node_index)];
            if (!n.is_leaf()) continue;
            n.leaf_value = -cfg_.learning_rate * leaf.sum_grad / (leaf.sum_hess + kHessGuard);
            last_leaves_.push_back(leaf);
        }
        return tree;
    }

    /// After build(): apply the freshly built tree to the training scores
    /// without re-traversing it (leaf row ranges are still known).
    void add_to_scores(const GbtTree& tree, std::span<double> scores) const {
        for (const BuildNode& leaf : last_leaves_) {
            const double v = tree.nodes[static_cast<std::size_t>(leaf.node_index)].leaf_value;
            const auto& rows = work_[0];
            for (std::size_t i = leaf.begin; i < leaf.end; ++i) scores[rows[i]] += v;
        }
    }

private:
    static constexpr double kHessGuard = 1e-6;
    static constexpr double kMinGain = 1e-12;

    struct BuildNode {
        std::size_t begin = 0, end = 0;
        double sum_grad = 0.0, sum_hess = 0.0;
        std::int32_t node_index = 0;
    };

    struct SplitCandidate {
        double gain = 0.0;
        std::int32_t feature = -1;
        double threshold = 0.0;
        double left_grad = 0.0, left_hess = 0.0;
        bool valid = false;
    };

    SplitCandidate find_split(const BuildNode& node, std::span<const double> grad,
                              std::span<const double> hess) const {
        SplitCandidate best;
        best.gain = kMinGain;
        const std::size_t n_node = node.end - node.begin;
        const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);
        if (n_node < 2 * min_leaf) return best;
        const double parent_score = node.sum_grad * node.sum_grad / (node.sum_hess + kHessGuard);
        for (std::size_t f = 0; f < d_; ++f) {
            const auto& rows = work_[f];
            double gl = 0.0, hl = 0.0;
            double prev_value = 0.0;
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::uint32_t row = rows[i];
                const double value = x_[row * d_ + f];
                const std::size_t left_count = i - node.begin;
                if (left_count >= min_leaf && n_node - left_count >= min_leaf &&
                    value > prev_value) {
                    const double gr = node.sum_grad - gl;
                    const double hr = node.sum_hess - hl;
                    const double gain = gl * gl / (hl + kHessGuard) +
                                        gr * gr / (hr + kHessGuard) - parent_score;
                    if (gain > best.gain) {
                        best.valid = true;
                        best.gain = gain;
                        best.feature = static_cast<std::int32_t>(f);
                        best.threshold = prev_value + 0.5 * (value - prev_value);
                        best.left_grad = gl;
                        best.left_hess = hl;
                    }
                }
                gl += grad[row];
                hl += hess[row];
                prev_value = value;
            }
        }
        return best;
    }

    /// Stable partition of every feature order within [begin, end); returns
    /// the boundary. Rows with x[feature] < threshold go left.
    std::size_t partition(const BuildNode& node, std::int32_t feature, double threshold) {
        std::size_t mid = node.begin;
        for (std::size_t f = 0; f < d_; ++f) {
            auto& rows = work_[f];
            std::size_t lo = node.begin;
            std::size_t hi = 0;
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::uint32_t row = rows[i];
                if (x_[row * d_ + static_cast<std::size_t>(feature)] < threshold)
                    rows[lo++] = row;
                else
                    scratch_[hi++] = row;
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(hi),
                      rows.begin() + static_cast<std::ptrdiff_t>(lo));
            mid = lo;
        }
        return mid;
    }

    std::span<const double> x_;
    std::size_t n_, d_;
    GbtConfig cfg_;
    std::vector<std::vector<std::uint32_t>> sorted_;
    std::vector<std::vector<std::uint32_t>> work_;
    std::vector<std::uint32_t> scratch_;
    std::vector<BuildNode> open_;
    std::vector<SplitCandidate> candidates_;
    std::vector<BuildNode> last_leaves_;
};

}  // namespace detail

/// Boosts logistic-loss trees with leaf-wise growth and validation-loss early
/// stopping; the returned model is truncated to the best validation round.
/// Training is single-threaded and fully deterministic.
inline GbtModel train_gbt_raw(std::span<const double> x_train, std::span<const double> y_train,
                              std::size_t n_train, std::span<const double> x_valid,
                              std::span<const double> y_valid, std::size_t n_valid,
                              std::size_t n_features, const GbtConfig& cfg) {
    cfg.validate();
    if (n_train == 0) throw EmptyInput("gbt: empty training set");

    GbtModel model;
    model.n_features = static_cast<std::uint32_t>(n_features);

    double pos = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) pos += y_train[i];
    const double prior = pos / static_cast<double>(n_train);
    if (prior == 0.0 || prior == 1.0) {
        // Single-class training data: constant predictor at the (clamped) prior.
        const double p = std::clamp(prior, 1e-6, 1.0 - 1e-6);
        model.base_score = std::log(p / (1.0 - p));
        model.single_class = true;
        return model;
    }
    model.base_score = std::log(prior / (1.0 - prior));

    std::vector<double> train_scores(n_train, model.base_score);
    std::vector<double> valid_scores(n_valid, model.base_score);
    std::vector<double> grad(n_train), hess(n_train);

    detail::GbtTreeBuilder builder(x_train, n_train, n_features, cfg);
    EarlyStopper stopper(cfg.early_stop_patience);

    auto valid_loss = [&] {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_valid; ++i)
            acc += log_loss_term(sigmoid(valid_scores[i]), y_valid[i]);
        return acc / static_cast<double>(n_valid);
    };

    for (int round = 0; round < cfg.max_trees; ++round) {
        for (std::size_t i = 0; i < n_train; ++i) {
            const double p = sigmoid(train_scores[i]);
            grad[i] = p - y_train[i];
            hess[i] = p * (1.0 - p);
        }
        GbtTree tree = builder.build(grad, hess);
        builder.add_to_scores(tree, train_scores);
        for (std::size_t i = 0; i < n_valid; ++i)
            valid_scores[i] += tree.value(x_valid.data() + i * n_features);
        model.trees.push_back(std::move(tree));
        ++model.rounds_trained;
        if (n_valid > 0 && !stopper.observe(valid_loss())) break;
    }
    if (n_valid > 0) {
        model.best_round = stopper.best_epoch();
        model.trees.resize(static_cast<std::size_t>(std::max(0, model.best_round + 1)));
    } else {
        model.best_round = model.rounds_trained - 1;
    }
    return model;
}

}  // namespace wrse
