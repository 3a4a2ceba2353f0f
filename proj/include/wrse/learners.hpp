#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "wrse/core.hpp"
#include "wrse/errors.hpp"
#include "wrse/gbt.hpp"
#include "wrse/nn.hpp"
#include "wrse/optim.hpp"

namespace wrse {

/// Binary training set for one horizon h: label 1 when the snapshot's subject
/// died within h hours, 0 when it survived past h. Snapshots censored before
/// h have unknown status and are excluded rather than imputed.
struct HorizonLabeledSet {
    std::size_t n_features = 0;
    std::vector<double> x;               // n * n_features, row-major
    std::vector<double> labels;          // 0/1
    std::vector<std::size_t> kept_indices;  // into the source snapshot stream

    std::size_t size() const { return labels.size(); }
};

inline HorizonLabeledSet make_horizon_labels(const std::vector<Snapshot>& snapshots,
                                             double h_hours) {
    if (!(h_hours > 0.0)) throw DomainError("horizon must be positive");
    HorizonLabeledSet set;
    if (!snapshots.empty()) set.n_features = snapshots.front().x.size();
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        const Snapshot& s = snapshots[i];
        if (s.y_hours <= h_hours && s.censored) continue;  // status at h unknown
        set.x.insert(set.x.end(), s.x.begin(), s.x.end());
        set.labels.push_back(s.y_hours <= h_hours ? 1.0 : 0.0);
        set.kept_indices.push_back(i);
    }
    if (!snapshots.empty() && set.labels.empty())
        throw EmptyResult("every snapshot censored before horizon " + std::to_string(h_hours));
    return set;
}

// ---------------------------------------------------------------------------
// base classifiers
// ---------------------------------------------------------------------------

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    bool single_class = false;
    int best_epoch = -1;

    double predict(std::span<const double> x) const {
        if (x.size() != weights.size()) throw DimensionMismatch("logistic: dimension mismatch");
        double z = bias;
        for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
        return sigmoid(z);
    }
};

struct FfnetModel {
    DenseNet net;  // single raw output, sigmoid applied at predict time
    bool single_class = false;
    double constant_prior = 0.5;
    int best_epoch = -1;

    double predict(std::span<const double> x) const {
        if (single_class) return constant_prior;
        auto ws = net.make_workspace();
        return sigmoid(net.forward(x, ws)[0]);
    }
};

enum class BaseKind { GradientBoostedTrees, Logistic, FeedForward };

/// One fitted per-horizon base model. Immutable after training; prediction is
/// safe from any number of threads.
struct BinaryClassifier {
    std::variant<GbtModel, LogisticModel, FfnetModel> model;

    BaseKind kind() const {
        if (std::holds_alternative<GbtModel>(model)) return BaseKind::GradientBoostedTrees;
        if (std::holds_alternative<LogisticModel>(model)) return BaseKind::Logistic;
        return BaseKind::FeedForward;
    }

    double predict(std::span<const double> x) const {
        return std::visit([&](const auto& m) { return m.predict(x); }, model);
    }
};

inline double predict_proba(const BinaryClassifier& clf, std::span<const double> x) {
    return clf.predict(x);
}

// ---------------------------------------------------------------------------
// trainers
// ---------------------------------------------------------------------------

inline BinaryClassifier train_gbt(const HorizonLabeledSet& train, const HorizonLabeledSet& valid,
                                  const GbtConfig& cfg) {
    GbtModel m = train_gbt_raw(train.x, train.labels, train.size(), valid.x, valid.labels,
                               valid.size(), train.n_features, cfg);
    return BinaryClassifier{std::move(m)};
}

struct LogisticConfig {
    double learning_rate = 0.1;
    double l2 = 0.0;
    int max_epochs = 500;
    int patience = 10;

    void validate() const {
        if (!(learning_rate > 0.0)) throw DomainError("logistic: learning_rate must be positive");
        if (l2 < 0.0) throw DomainError("logistic: l2 must be nonnegative");
        if (max_epochs < 0) throw DomainError("logistic: max_epochs must be nonnegative");
        if (patience < 1) throw DomainError("logistic: patience must be >= 1");
    }
};

/// Full-batch gradient descent on L2-regularized logistic loss (bias
/// unregularized), early-stopped on validation loss with best-epoch restore.
inline BinaryClassifier train_logistic(const HorizonLabeledSet& train,
                                       const HorizonLabeledSet& valid,
                                       const LogisticConfig& cfg) {
    cfg.validate();
    const std::size_t n = train.size();
    if (n == 0) throw EmptyInput("logistic: empty training set");
    const std::size_t d = train.n_features;

    LogisticModel model;
    model.weights.assign(d, 0.0);

    double pos = 0.0;
    for (double y : train.labels) pos += y;
    if (pos == 0.0 || pos == static_cast<double>(n)) {
        const double p = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
        model.bias = std::log(p / (1.0 - p));
        model.single_class = true;
        return BinaryClassifier{std::move(model)};
    }

    std::vector<double> gw(d);
    std::vector<double> best_w = model.weights;
    double best_b = model.bias;
    EarlyStopper stopper(cfg.patience);

    auto valid_loss = [&] {
        double acc = 0.0;
        for (std::size_t i = 0; i < valid.size(); ++i)
            acc += log_loss_term(model.predict({valid.x.data() + i * d, d}), valid.labels[i]);
        return valid.size() ? acc / static_cast<double>(valid.size()) : 0.0;
    };

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = train.x.data() + i * d;
            const double err = model.predict({xi, d}) - train.labels[i];
            for (std::size_t f = 0; f < d; ++f) gw[f] += err * xi[f];
            gb += err;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t f = 0; f < d; ++f)
            model.weights[f] -= cfg.learning_rate * (gw[f] * inv_n + cfg.l2 * model.weights[f]);
        model.bias -= cfg.learning_rate * gb * inv_n;

        if (valid.size() > 0) {
            const bool keep_going = stopper.observe(valid_loss());
            if (stopper.best_epoch() == epoch) {
                best_w = model.weights;
                best_b = model.bias;
            }
            if (!keep_going) break;
        }
    }
    if (valid.size() > 0 && stopper.best_epoch() >= 0) {
        model.weights = best_w;
        model.bias = best_b;
        model.best_epoch = stopper.best_epoch();
    }
    return BinaryClassifier{std::move(model)};
}

struct FfnetConfig {
    std::vector<std::size_t> hidden_sizes{50, 50};
    double learning_rate = 1e-4;
    double l2 = 0.01;
    int max_epochs = 500;
    int patience = 10;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(learning_rate > 0.0)) throw DomainError("ffnet: learning_rate must be positive");
        if (l2 < 0.0) throw DomainError("ffnet: l2 must be nonnegative");
        if (max_epochs < 0) throw DomainError("ffnet: max_epochs must be nonnegative");
        if (patience < 1) throw DomainError("ffnet: patience must be >= 1");
    }
};

/// ReLU MLP with sigmoid output trained by full-batch Adam on logistic loss.
/// With no hidden layers this is exactly logistic regression.
inline BinaryClassifier train_ffnet(const HorizonLabeledSet& train, const HorizonLabeledSet& valid,
                                    const FfnetConfig& cfg) {
    cfg.validate();
    const std::size_t n = train.size();
    if (n == 0) throw EmptyInput("ffnet: empty training set");
    const std::size_t d = train.n_features;

    FfnetModel model;
    double pos = 0.0;
    for (double y : train.labels) pos += y;
    if (pos == 0.0 || pos == static_cast<double>(n)) {
        model.single_class = true;
        model.constant_prior = pos / static_cast<double>(n);
        model.net = DenseNet(d, {}, 1, cfg.seed);
        return BinaryClassifier{std::move(model)};
    }

    model.net = DenseNet(d, cfg.hidden_sizes, 1, cfg.seed);
    AdamOptimizer adam(model.net.params().size(), cfg.learning_rate);
    auto ws = model.net.make_workspace();
    std::vector<double> grad(model.net.params().size());
    std::vector<double> best_params = model.net.params();
    EarlyStopper stopper(cfg.patience);

    auto valid_loss = [&] {
        double acc = 0.0;
        for (std::size_t i = 0; i < valid.size(); ++i) {
            const double p = sigmoid(model.net.forward({valid.x.data() + i * d, d}, ws)[0]);
            acc += log_loss_term(p, valid.labels[i]);
        }
        return valid.size() ? acc / static_cast<double>(valid.size()) : 0.0;
    };

    const double inv_n = 1.0 / static_cast<double>(n);
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::span<const double> xi{train.x.data() + i * d, d};
            const double p = sigmoid(model.net.forward(xi, ws)[0]);
            loss += log_loss_term(p, train.labels[i]);
            const double dout = (p - train.labels[i]) * inv_n;  // d(mean logloss)/d raw
            model.net.backward(xi, {&dout, 1}, ws, grad);
        }
        loss *= inv_n;
        loss += model.net.l2_penalty(cfg.l2, grad);
        if (!std::isfinite(loss)) throw NonFiniteLoss("ffnet: non-finite training loss");
        adam.step(model.net.params(), grad);

        if (valid.size() > 0) {
            const bool keep_going = stopper.observe(valid_loss());
            if (stopper.best_epoch() == epoch) best_params = model.net.params();
            if (!keep_going) break;
        }
    }
    if (valid.size() > 0 && stopper.best_epoch() >= 0) {
        model.net.params() = best_params;
        model.best_epoch = stopper.best_epoch();
    }
    return BinaryClassifier{std::move(model)};
}

}  // namespace wrse
