#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "wrse/errors.hpp"

namespace wrse {

/// Nondecreasing least-squares fit m*_1 <= ... <= m*_K.
struct MonotoneFit {
    std::vector<double> values;
};

/// Pool-adjacent-violators: exact linear-time minimizer of
///   sum_k w_k (m*_k - v_k)^2   subject to   m*_1 <= ... <= m*_K.
/// Idempotent on already-monotone input and weighted-mean preserving.
inline MonotoneFit pava(std::span<const double> values, std::span<const double> weights = {}) {
    if (values.empty()) throw EmptyInput("pava: empty input");
    if (!weights.empty() && weights.size() != values.size())
        throw LengthMismatch("pava: weights length differs from values");
    for (double w : weights)
        if (!(w > 0.0)) throw DomainError("pava: weights must be positive");

    // Blocks carry their mean directly: a singleton block is exactly its
    // input value, which keeps the solver bitwise idempotent.
    struct Block {
        double weight;
        double mean;
        std::size_t count;
    };
    std::vector<Block> stack;
    stack.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        stack.push_back({w, values[i], 1});
        while (stack.size() >= 2 && stack[stack.size() - 2].mean > stack.back().mean) {
            Block top = stack.back();
            stack.pop_back();
            Block& merged = stack.back();
            merged.mean = (merged.weight * merged.mean + top.weight * top.mean) /
                          (merged.weight + top.weight);
            merged.weight += top.weight;
            merged.count += top.count;
        }
    }
    MonotoneFit fit;
    fit.values.reserve(values.size());
    for (const Block& b : stack) fit.values.insert(fit.values.end(), b.count, b.mean);
    return fit;
}

/// Monotone step map from raw predicted probabilities to calibrated ones,
/// fitted on held-out (prediction, outcome) pairs.
struct RecalibrationMap {
    std::vector<double> thresholds;  // ascending distinct predicted values
    std::vector<double> outputs;     // nondecreasing calibrated probabilities
    bool degenerate = false;         // all predictions identical
};

/// Sorts pairs by prediction, merges ties into weighted points, and projects
/// the outcome means onto the monotone cone. The resulting step function is
/// the squared-error-optimal monotone remapping of the training predictions.
inline RecalibrationMap fit_recalibration(std::span<const double> predicted,
                                          std::span<const double> outcomes) {
    if (predicted.size() != outcomes.size())
        throw LengthMismatch("fit_recalibration: predicted/outcomes lengths differ");
    if (predicted.size() < 2) throw DomainError("fit_recalibration: needs at least 2 pairs");

    std::map<double, std::pair<double, double>> grouped;  // predicted -> (count, outcome sum)
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        auto& cell = grouped[predicted[i]];
        cell.first += 1.0;
        cell.second += outcomes[i];
    }
    RecalibrationMap map;
    map.degenerate = grouped.size() == 1;
    std::vector<double> means, counts;
    means.reserve(grouped.size());
    counts.reserve(grouped.size());
    for (const auto& [p, cell] : grouped) {
        map.thresholds.push_back(p);
        means.push_back(cell.second / cell.first);
        counts.push_back(cell.first);
    }
    map.outputs = pava(means, counts).values;
    return map;
}

/// Right-continuous lower-step lookup with clamping outside the fitted range.
inline double apply_recalibration(const RecalibrationMap& map, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("apply_recalibration: p outside [0, 1]");
    if (map.thresholds.empty()) throw EmptyInput("apply_recalibration: empty map");
    if (p <= map.thresholds.front()) return map.outputs.front();
    if (p >= map.thresholds.back()) return map.outputs.back();
    const auto it = std::upper_bound(map.thresholds.begin(), map.thresholds.end(), p);
    const std::size_t i = static_cast<std::size_t>(it - map.thresholds.begin());
    return map.outputs[i - 1];
}

}  // namespace wrse
