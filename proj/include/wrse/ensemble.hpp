#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "wrse/core.hpp"
#include "wrse/errors.hpp"
#include "wrse/isotonic.hpp"
#include "wrse/learners.hpp"
#include "wrse/threading.hpp"
#include "wrse/weighting.hpp"

namespace wrse {

struct WrseConfig {
    BaseKind base_kind = BaseKind::GradientBoostedTrees;
    GbtConfig gbt = GbtConfig::desk();
    LogisticConfig logistic;
    FfnetConfig ffnet;
    BeyondLast beyond_last = BeyondLast::Clamp;
};

/// K horizon-anchored binary classifiers plus the monotone projection that
/// turns their raw outputs into one survival distribution per snapshot.
struct WrseModel {
    HorizonGrid grid;
    std::vector<BinaryClassifier> classifiers;  // aligned with grid
    BaseKind base_kind = BaseKind::GradientBoostedTrees;
    BeyondLast beyond_last = BeyondLast::Clamp;
    std::size_t n_features = 0;

    std::size_t k() const { return grid.size(); }
};

/// Trains one classifier per horizon. Horizon trainings are mutually
/// independent and read-only over the shared snapshot stream, so they may run
/// on a worker pool; results are identical to sequential execution.
inline WrseModel fit_wrse(const Dataset& train, const Dataset& valid, const HorizonGrid& grid,
                          const WrseConfig& cfg = {}, int workers = 1) {
    grid.validate();
    if (train.stays.empty()) throw EmptyInput("fit_wrse: empty training dataset");

    const std::vector<Snapshot> train_snaps = snapshots_of(train);
    const std::vector<Snapshot> valid_snaps = snapshots_of(valid);

    WrseModel model;
    model.grid = grid;
    model.base_kind = cfg.base_kind;
    model.beyond_last = cfg.beyond_last;
    model.n_features = train_snaps.empty() ? 0 : train_snaps.front().x.size();
    model.classifiers.resize(grid.size());

    // Label sets first (cheap) so the pool can schedule the heaviest
    // trainings earliest; scheduling order never changes the result.
    std::vector<HorizonLabeledSet> train_sets(grid.size()), valid_sets(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double h = grid.horizons_hours[k];
        try {
            train_sets[k] = make_horizon_labels(train_snaps, h);
            valid_sets[k] = make_horizon_labels(valid_snaps, h);
        } catch (const Error& e) {
            throw Error("horizon " + std::to_string(k + 1) + " (h=" + std::to_string(h) +
                        "h): " + e.what());
        }
    }
    std::vector<std::size_t> order(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return train_sets[a].size() > train_sets[b].size();
    });

    parallel_tasks_ordered(order, workers, [&](std::size_t k) {
        try {
            switch (cfg.base_kind) {
                case BaseKind::GradientBoostedTrees:
                    model.classifiers[k] = train_gbt(train_sets[k], valid_sets[k], cfg.gbt);
                    break;
                case BaseKind::Logistic:
                    model.classifiers[k] = train_logistic(train_sets[k], valid_sets[k], cfg.logistic);
                    break;
                case BaseKind::FeedForward:
                    model.classifiers[k] = train_ffnet(train_sets[k], valid_sets[k], cfg.ffnet);
                    break;
            }
        } catch (const Error& e) {
            throw Error("horizon " + std::to_string(k + 1) + " (h=" +
                        std::to_string(grid.horizons_hours[k]) + "h): " + e.what());
        }
    });
    return model;
}

/// Raw per-horizon death probabilities projected onto the monotone cone: the
/// least-squares fit of the base outputs under nondecreasing constraints.
inline SurvivalCurve predict_cdf(const WrseModel& model, std::span<const double> x) {
    if (x.size() != model.n_features) throw DimensionMismatch("predict_cdf: dimension mismatch");
    std::vector<double> raw(model.k());
    for (std::size_t k = 0; k < model.k(); ++k) {
        double p = model.classifiers[k].predict(x);
        raw[k] = std::clamp(p, 0.0, 1.0);
    }
    MonotoneFit fit = pava(raw);
    return SurvivalCurve(model.grid.horizons_hours, std::move(fit.values), model.beyond_last);
}

/// Order-preserving batch prediction; pure, so parallel execution over any
/// worker count matches the sequential result element for element.
inline std::vector<SurvivalCurve> predict_batch(const WrseModel& model,
                                                const std::vector<Snapshot>& snapshots,
                                                int workers = 1) {
    std::vector<SurvivalCurve> curves(snapshots.size());
    parallel_chunks(snapshots.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) curves[i] = predict_cdf(model, snapshots[i].x);
    });
    return curves;
}

}  // namespace wrse
