#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "wrse/errors.hpp"

namespace wrse {

/// Patience-based early stopping on a validation loss. Training continues
/// until the loss has failed to improve strictly for `patience` consecutive
/// epochs; the best epoch index is retained so callers can restore it.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {
        if (patience < 1) throw DomainError("early stopping patience must be >= 1");
    }

    /// Feed one validation loss; returns true if training should continue.
    bool observe(double val_loss) {
        const int epoch = epochs_seen_++;
        if (val_loss < best_loss_) {
            best_loss_ = val_loss;
            best_epoch_ = epoch;
            since_best_ = 0;
            return true;
        }
        ++since_best_;
        return since_best_ < patience_;
    }

    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }
    int epochs_seen() const { return epochs_seen_; }

private:
    int patience_;
    double best_loss_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = -1;
    int since_best_ = 0;
    int epochs_seen_ = 0;
};

/// Adaptive-moment gradient stepper, standard defaults (0.9 / 0.999, eps 1e-8).
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::size_t n_params, double learning_rate,
                           double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon),
          m_(n_params, 0.0), v_(n_params, 0.0) {}

    void step(std::span<double> params, std::span<const double> grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw LengthMismatch("adam: parameter/gradient size mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
            params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
        }
    }

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// softplus(x) = log(1 + e^x), overflow-safe.
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

/// Numerically guarded binary cross-entropy for a single probability.
inline double log_loss_term(double p, double y) {
    constexpr double eps = 1e-12;
    const double q = p < eps ? eps : (p > 1.0 - eps ? 1.0 - eps : p);
    return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

}  // namespace wrse
