#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "wrse/core.hpp"
#include "wrse/ensemble.hpp"
#include "wrse/errors.hpp"
#include "wrse/optim.hpp"
#include "wrse/rng.hpp"
#include "wrse/threading.hpp"

namespace wrse {

/// Permutation feature importance of a fitted ensemble, evaluated on a
/// held-out dataset. For each base model the loss is its own horizon's
/// logistic loss; per-feature scores aggregate across base models with the
/// decay weights w(h_k / 24h).
struct ImportanceReport {
    std::size_t n_features = 0;
    std::vector<double> horizons_hours;              // one row per base model
    std::vector<std::vector<double>> raw;            // raw[k][f]: loss increase
    double gamma = 0.5;
    std::vector<double> weighted_scores;             // per feature
};

/// Raw importance matrix imp[k][f]: mean increase in base model k's
/// validation log-loss over n_repeats independent permutations of feature f.
/// A feature the model never consults leaves predictions untouched, so its
/// importance is exactly zero. Deterministic given the seed: every
/// (model, feature, repeat) triple derives its own permutation stream.
inline std::vector<std::vector<double>> permutation_importance_raw(const WrseModel& model,
                                                                   const Dataset& valid,
                                                                   int n_repeats,
                                                                   std::uint64_t seed,
                                                                   int workers = 1) {
    if (n_repeats < 1) throw DomainError("permutation importance: n_repeats must be >= 1");
    if (valid.stays.empty()) throw EmptyInput("permutation importance: empty validation set");

    const std::vector<Snapshot> snaps = snapshots_of(valid);
    const std::size_t d = model.n_features;
    const std::size_t K = model.k();

    std::vector<HorizonLabeledSet> sets(K);
    for (std::size_t k = 0; k < K; ++k)
        sets[k] = make_horizon_labels(snaps, model.grid.horizons_hours[k]);

    auto labeled_loss = [&](std::size_t k, const std::vector<double>& x) {
        const HorizonLabeledSet& set = sets[k];
        double acc = 0.0;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const double p = model.classifiers[k].predict({x.data() + i * d, d});
            acc += log_loss_term(p, set.labels[i]);
        }
        return acc / static_cast<double>(set.size());
    };

    std::vector<double> base_loss(K);
    std::vector<std::vector<double>> imp(K, std::vector<double>(d, 0.0));
    parallel_tasks(K, workers, [&](std::size_t k) {
        base_loss[k] = labeled_loss(k, sets[k].x);
        const std::size_t n = sets[k].size();
        std::vector<double> permuted = sets[k].x;
        std::vector<std::uint32_t> perm(n);
        for (std::size_t f = 0; f < d; ++f) {
            double delta = 0.0;
            for (int rep = 0; rep < n_repeats; ++rep) {
                SplitMix64 rng = SplitMix64::stream(
                    seed, (k * d + f) * static_cast<std::size_t>(n_repeats) +
                              static_cast<std::size_t>(rep));
                std::iota(perm.begin(), perm.end(), 0u);
                rng.shuffle(perm.data(), perm.size());
                for (std::size_t i = 0; i < n; ++i)
                    permuted[i * d + f] = sets[k].x[perm[i] * d + f];
                delta += labeled_loss(k, permuted) - base_loss[k];
            }
            // Restore the column before moving on.
            for (std::size_t i = 0; i < n; ++i) permuted[i * d + f] = sets[k].x[i * d + f];
            imp[k][f] = delta / n_repeats;
        }
    });
    return imp;
}

/// Decay-weighted aggregation of a raw importance matrix: short-horizon base
/// models contribute more, mirroring how the metrics weight the near future.
inline std::vector<double> aggregate_importance(const std::vector<std::vector<double>>& raw,
                                                const HorizonGrid& grid, double gamma) {
    if (raw.size() != grid.size()) throw LengthMismatch("aggregate_importance: K mismatch");
    DecayWeighting decay(gamma);
    const std::size_t d = raw.empty() ? 0 : raw.front().size();
    std::vector<double> scores(d, 0.0);
    double total_weight = 0.0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const double w = decay.weight(grid.horizons_hours[k] / kHoursPerDay);
        total_weight += w;
        for (std::size_t f = 0; f < d; ++f) scores[f] += w * raw[k][f];
    }
    for (double& s : scores) s /= total_weight;
    return scores;
}

inline ImportanceReport permutation_importance(const WrseModel& model, const Dataset& valid,
                                               double gamma, int n_repeats, std::uint64_t seed,
                                               int workers = 1) {
    ImportanceReport report;
    report.n_features = model.n_features;
    report.horizons_hours = model.grid.horizons_hours;
    report.gamma = gamma;
    report.raw = permutation_importance_raw(model, valid, n_repeats, seed, workers);
    report.weighted_scores = aggregate_importance(report.raw, model.grid, gamma);
    return report;
}

}  // namespace wrse
