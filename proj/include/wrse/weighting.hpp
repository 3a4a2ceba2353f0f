#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wrse/errors.hpp"

namespace wrse {

constexpr double kHoursPerDay = 24.0;

/// Exponential decay w(tau) = gamma^tau with tau in days. The same function
/// controls metric aggregation and the spacing of ensemble base models.
class DecayWeighting {
public:
    explicit DecayWeighting(double gamma) : gamma_(gamma) {
        if (!(gamma > 0.0 && gamma < 1.0))
            throw DomainError("decay rate gamma must lie in (0, 1), got " + std::to_string(gamma));
    }

    double gamma() const { return gamma_; }

    /// w(tau) = gamma^tau for tau >= 0 (days).
    double weight(double tau_days) const {
        if (!(tau_days >= 0.0)) throw DomainError("weight() requires tau_days >= 0");
        return std::pow(gamma_, tau_days);
    }

    /// w^-1(p) = log(p) / log(gamma), defined for p in (0, 1].
    /// log2 is used so that p = gamma^m with both representable exactly
    /// (e.g. gamma = 0.5) inverts to the exact integer m.
    double inverse(double p) const {
        if (!(p > 0.0 && p <= 1.0)) throw DomainError("inverse weight requires p in (0, 1]");
        return std::log2(p) / std::log2(gamma_);
    }

private:
    double gamma_;
};

inline double weight(double gamma, double tau_days) { return DecayWeighting(gamma).weight(tau_days); }
inline double inverse_weight(double gamma, double p) { return DecayWeighting(gamma).inverse(p); }

enum class SpacingKind { Weighted, Even };

/// Strictly ascending positive horizons (hours) where base classifiers anchor.
struct HorizonGrid {
    std::vector<double> horizons_hours;
    SpacingKind spacing = SpacingKind::Weighted;
    double gamma = 0.0;      // meaningful for Weighted
    double span_days = 0.0;  // meaningful for Even

    std::size_t size() const { return horizons_hours.size(); }

    void validate() const {
        if (horizons_hours.empty()) throw DomainError("horizon grid must hold at least one horizon");
        double prev = 0.0;
        for (double h : horizons_hours) {
            if (!(h > prev)) throw DomainError("horizons must be strictly ascending and positive");
            prev = h;
        }
    }
};

/// h_k = w^-1(1 - k/(K+1)) days, expressed in hours: denser coverage of the
/// short-term future, thinning out toward the tail.
inline HorizonGrid weighted_horizons(double gamma, int k_models) {
    if (k_models < 1) throw DomainError("weighted_horizons requires K >= 1");
    DecayWeighting decay(gamma);
    HorizonGrid grid;
    grid.spacing = SpacingKind::Weighted;
    grid.gamma = gamma;
    grid.horizons_hours.reserve(static_cast<std::size_t>(k_models));
    for (int k = 1; k <= k_models; ++k) {
        const double p = 1.0 - static_cast<double>(k) / static_cast<double>(k_models + 1);
        grid.horizons_hours.push_back(kHoursPerDay * decay.inverse(p));
    }
    grid.validate();
    return grid;
}

/// h_k = k * span/K days in hours; the uniform comparison grid.
inline HorizonGrid even_horizons(int k_models, double span_days = 10.0) {
    if (k_models < 1) throw DomainError("even_horizons requires K >= 1");
    if (!(span_days > 0.0)) throw DomainError("even_horizons requires span_days > 0");
    HorizonGrid grid;
    grid.spacing = SpacingKind::Even;
    grid.span_days = span_days;
    grid.horizons_hours.reserve(static_cast<std::size_t>(k_models));
    for (int k = 1; k <= k_models; ++k)
        grid.horizons_hours.push_back(kHoursPerDay * span_days * static_cast<double>(k) /
                                      static_cast<double>(k_models));
    grid.validate();
    return grid;
}

}  // namespace wrse
