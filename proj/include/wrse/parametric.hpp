#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "wrse/core.hpp"
#include "wrse/errors.hpp"
#include "wrse/nn.hpp"
#include "wrse/optim.hpp"
#include "wrse/weighting.hpp"

namespace wrse {

// ---------------------------------------------------------------------------
// survival CRPS
// ---------------------------------------------------------------------------

/// Closed-form survival CRPS for the exponential CDF F(tau) = 1 - exp(-lambda tau):
///   integral of F^2 over [0, y]  +  (1 - c) * integral of (1 - F)^2 over [y, inf)
///   = (4 e^{-ly} - c e^{-2ly} - 3) / (2l) + y.
/// c = 1 marks a censored observation (the post-y term vanishes).
inline double crps_exponential(double lambda, double y, bool censored) {
    if (!(lambda > 0.0)) throw DomainError("crps_exponential: lambda must be positive");
    if (!(y > 0.0)) throw DomainError("crps_exponential: y must be positive");
    const double e1 = std::exp(-lambda * y);
    const double c = censored ? 1.0 : 0.0;
    return (4.0 * e1 - c * e1 * e1 - 3.0) / (2.0 * lambda) + y;
}

/// Analytic d/dlambda of crps_exponential; used by the training loop and the
/// finite-difference checks.
inline double crps_exponential_dlambda(double lambda, double y, bool censored) {
    if (!(lambda > 0.0)) throw DomainError("crps_exponential_dlambda: lambda must be positive");
    if (!(y > 0.0)) throw DomainError("crps_exponential_dlambda: y must be positive");
    const double e1 = std::exp(-lambda * y);
    const double e2 = e1 * e1;
    const double c = censored ? 1.0 : 0.0;
    const double numerator = 4.0 * e1 - c * e2 - 3.0;
    const double d_numerator = -4.0 * y * e1 + 2.0 * c * y * e2;
    return d_numerator / (2.0 * lambda) - numerator / (2.0 * lambda * lambda);
}

/// Integration grid for the trapezoidal CRPS. tail_horizon bounds the upper
/// limit of the censored-free term; the truncated remainder is reported, not
/// silently dropped.
struct GridSpec {
    int points_per_segment = 1024;
    double tail_horizon = 0.0;  // required when c = 0

    void validate() const {
        if (points_per_segment < 1) throw DomainError("grid: points_per_segment must be >= 1");
    }
};

struct TrapezoidCrps {
    double value = 0.0;
    double tail_bound = 0.0;  // analytic bound on the mass beyond tail_horizon
};

namespace detail {

/// Tail of the uncensored term split into geometrically doubling pieces
/// [y, 2y], [2y, 4y], ..., capped at the horizon: composite trapezoid nodes
/// track the integrand's decay instead of spreading uniformly over a span
/// that can be thousands of hours long.
inline std::vector<std::pair<double, double>> tail_segments(double y, double tail_horizon) {
    std::vector<std::pair<double, double>> segments;
    double lo = y;
    while (lo < tail_horizon) {
        const double hi = std::min(tail_horizon, 2.0 * lo);
        segments.emplace_back(lo, hi);
        lo = hi;
    }
    return segments;
}

}  // namespace detail

/// Trapezoidal survival CRPS for an arbitrary CDF functor; second-order
/// accurate in the step size and differentiable term by term, which is what
/// the log-normal training path relies on.
template <typename CdfFn>
TrapezoidCrps crps_trapezoid(CdfFn&& cdf, double y, bool censored, const GridSpec& grid,
                             double tail_bound = 0.0) {
    if (!(y > 0.0)) throw DomainError("crps_trapezoid: y must be positive");
    grid.validate();
    const int n = grid.points_per_segment;

    auto trapezoid = [n](double lo, double hi, auto&& f) {
        if (!(hi > lo)) return 0.0;
        const double h = (hi - lo) / n;
        double acc = 0.5 * (f(lo) + f(hi));
        for (int i = 1; i < n; ++i) acc += f(lo + h * i);
        return acc * h;
    };

    TrapezoidCrps out;
    out.value = trapezoid(0.0, y, [&](double tau) {
        const double F = cdf(tau);
        return F * F;
    });
    if (!censored) {
        if (!(grid.tail_horizon > y))
            throw DomainError("crps_trapezoid: tail_horizon must exceed y for uncensored terms");
        auto survival_sq = [&](double tau) {
            const double s = 1.0 - cdf(tau);
            return s * s;
        };
        for (const auto& [lo, hi] : detail::tail_segments(y, grid.tail_horizon))
            out.value += trapezoid(lo, hi, survival_sq);
        out.tail_bound = tail_bound;
    }
    return out;
}

/// Standard normal CDF through the C99 erf routine (absolute error well below
/// 1e-12 on conforming libms).
inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double standard_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::acos(-1.0));
}

inline double lognormal_cdf(double tau, double mu, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("lognormal_cdf: sigma must be positive");
    if (tau <= 0.0) return 0.0;
    return standard_normal_cdf((std::log(tau) - mu) / sigma);
}

/// Survival CRPS of a log-normal head via the trapezoidal rule. No closed
/// form exists, so the censored-free term is truncated at exp(mu + 8 sigma)
/// with the partial-expectation tail bound reported alongside.
inline TrapezoidCrps crps_lognormal(double mu, double sigma, double y, bool censored,
                                    GridSpec grid = {}) {
    if (!(sigma > 0.0)) throw DomainError("crps_lognormal: sigma must be positive");
    if (!(y > 0.0)) throw DomainError("crps_lognormal: y must be positive");
    double tail_bound = 0.0;
    if (!censored) {
        double t = std::exp(mu + 8.0 * sigma);
        if (!(t > y)) t = 2.0 * y;
        grid.tail_horizon = t;
        // integral over [T, inf) of (1-F)^2 <= integral of (1-F) = E[(X - T)+]
        const double z = (std::log(t) - mu) / sigma;
        tail_bound = std::exp(mu + 0.5 * sigma * sigma) * standard_normal_cdf(sigma - z) -
                     t * (1.0 - standard_normal_cdf(z));
        tail_bound = std::max(0.0, tail_bound);
    }
    return crps_trapezoid([&](double tau) { return lognormal_cdf(tau, mu, sigma); }, y, censored,
                          grid, tail_bound);
}

// ---------------------------------------------------------------------------
// parametric survival models
// ---------------------------------------------------------------------------

enum class HeadKind : std::uint32_t { Exponential = 0, LogNormal = 1 };

/// Softplus positivity links keep the head parameters strictly inside their
/// domains for every real predictor output.
inline double lambda_link(double raw) { return softplus(raw) + 1e-8; }
inline double sigma_link(double raw) { return softplus(raw) + 1e-6; }

/// Distribution head over a linear or feedforward predictor. The predictor
/// emits one raw value (exponential rate) or two (log-normal mu, sigma);
/// links map them into the valid parameter space.
struct ParametricModel {
    HeadKind head = HeadKind::Exponential;
    DenseNet predictor;
    BeyondLast beyond_last = BeyondLast::Clamp;

    std::size_t n_features() const { return predictor.n_inputs(); }

    double rate_per_hour(std::span<const double> x) const {
        auto ws = predictor.make_workspace();
        return lambda_link(predictor.forward(x, ws)[0]);
    }

    std::pair<double, double> lognormal_params(std::span<const double> x) const {
        auto ws = predictor.make_workspace();
        auto out = predictor.forward(x, ws);
        return {out[0], sigma_link(out[1])};
    }

    double cdf_at(std::span<const double> x, double tau_hours) const {
        if (head == HeadKind::Exponential)
            return 1.0 - std::exp(-rate_per_hour(x) * tau_hours);
        auto [mu, sigma] = lognormal_params(x);
        return lognormal_cdf(tau_hours, mu, sigma);
    }
};

struct ParametricConfig {
    std::vector<std::size_t> hidden_sizes;  // empty = linear predictor
    double learning_rate = 1e-4;
    double l2 = 0.01;
    int max_epochs = 2000;
    int patience = 10;
    int crps_points = 64;  // trapezoid resolution during log-normal training
    std::uint64_t seed = 1;

    void validate() const {
        if (!(learning_rate > 0.0)) throw DomainError("parametric: learning_rate must be positive");
        if (l2 < 0.0) throw DomainError("parametric: l2 must be nonnegative");
        if (max_epochs < 1) throw DomainError("parametric: max_epochs must be >= 1");
        if (patience < 1) throw DomainError("parametric: patience must be >= 1");
        if (crps_points < 2) throw DomainError("parametric: crps_points must be >= 2");
    }
};

namespace detail {

/// Mean survival CRPS over a snapshot batch; optionally accumulates the
/// gradient with respect to the predictor parameters.
inline double parametric_loss(const ParametricModel& model, const std::vector<Snapshot>& snaps,
                              const ParametricConfig& cfg, DenseNet::Workspace& ws,
                              std::vector<double>* grad) {
    const std::size_t n = snaps.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double loss = 0.0;
    for (const Snapshot& s : snaps) {
        auto raw = model.predictor.forward(s.x, ws);
        if (model.head == HeadKind::Exponential) {
            const double lambda = lambda_link(raw[0]);
            loss += crps_exponential(lambda, s.y_hours, s.censored) * inv_n;
            if (grad) {
                const double dcrps = crps_exponential_dlambda(lambda, s.y_hours, s.censored);
                const double dout = dcrps * sigmoid(raw[0]) * inv_n;  // chain softplus'
                model.predictor.backward(s.x, {&dout, 1}, ws, *grad);
            }
        } else {
            const double mu = raw[0];
            const double sigma = sigma_link(raw[1]);
            GridSpec grid;
            grid.points_per_segment = cfg.crps_points;
            // Differentiable trapezoid: accumulate value and d/dmu, d/dsigma in
            // one sweep over the same nodes crps_lognormal would use.
            double t = std::exp(mu + 8.0 * sigma);
            if (!(t > s.y_hours)) t = 2.0 * s.y_hours;
            double value = 0.0, dmu = 0.0, dsigma = 0.0;
            auto accumulate = [&](double lo, double hi, double sign_flip) {
                const double h = (hi - lo) / grid.points_per_segment;
                for (int i = 0; i <= grid.points_per_segment; ++i) {
                    const double tau = lo + h * i;
                    const double w = (i == 0 || i == grid.points_per_segment) ? 0.5 * h : h;
                    double F = 0.0, dF_dmu = 0.0, dF_dsigma = 0.0;
                    if (tau > 0.0) {
                        const double z = (std::log(tau) - mu) / sigma;
                        F = standard_normal_cdf(z);
                        const double phi = standard_normal_pdf(z);
                        dF_dmu = -phi / sigma;
                        dF_dsigma = -phi * z / sigma;
                    }
                    // sign_flip = 0: F^2 term; 1: (1-F)^2 term.
                    const double g = sign_flip == 0.0 ? F : 1.0 - F;
                    const double dg = sign_flip == 0.0 ? 1.0 : -1.0;
                    value += w * g * g;
                    dmu += w * 2.0 * g * dg * dF_dmu;
                    dsigma += w * 2.0 * g * dg * dF_dsigma;
                }
            };
            accumulate(0.0, s.y_hours, 0.0);
            if (!s.censored)
                for (const auto& [lo, hi] : tail_segments(s.y_hours, t)) accumulate(lo, hi, 1.0);
            loss += value * inv_n;
            if (grad) {
                const double douts[2] = {dmu * inv_n, dsigma * sigmoid(raw[1]) * inv_n};
                model.predictor.backward(s.x, {douts, 2}, ws, *grad);
            }
        }
    }
    return loss;
}

}  // namespace detail

/// Minimizes mean survival CRPS over the training snapshots with full-batch
/// Adam and patience-based early stopping on the validation snapshots.
inline ParametricModel train_parametric(const Dataset& train, const Dataset& valid, HeadKind head,
                                        const ParametricConfig& cfg = {}) {
    cfg.validate();
    if (train.stays.empty()) throw EmptyInput("train_parametric: empty training dataset");
    const std::vector<Snapshot> train_snaps = snapshots_of(train);
    const std::vector<Snapshot> valid_snaps = snapshots_of(valid);
    if (train_snaps.empty()) throw EmptyInput("train_parametric: no training snapshots");

    ParametricModel model;
    model.head = head;
    const std::size_t d = train_snaps.front().x.size();
    const std::size_t n_out = head == HeadKind::Exponential ? 1 : 2;
    model.predictor = DenseNet(d, cfg.hidden_sizes, n_out, cfg.seed);

    AdamOptimizer adam(model.predictor.params().size(), cfg.learning_rate);
    auto ws = model.predictor.make_workspace();
    std::vector<double> grad(model.predictor.params().size());
    std::vector<double> best_params = model.predictor.params();
    EarlyStopper stopper(cfg.patience);

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = detail::parametric_loss(model, train_snaps, cfg, ws, &grad);
        loss += model.predictor.l2_penalty(cfg.l2, grad);
        if (!std::isfinite(loss))
            throw NonFiniteLoss("train_parametric: non-finite loss at epoch " +
                                std::to_string(epoch));
        adam.step(model.predictor.params(), grad);

        if (!valid_snaps.empty()) {
            const double vloss = detail::parametric_loss(model, valid_snaps, cfg, ws, nullptr);
            if (!std::isfinite(vloss))
                throw NonFiniteLoss("train_parametric: non-finite validation loss");
            const bool keep_going = stopper.observe(vloss);
            if (stopper.best_epoch() == epoch) best_params = model.predictor.params();
            if (!keep_going) break;
        }
    }
    if (!valid_snaps.empty() && stopper.best_epoch() >= 0)
        model.predictor.params() = best_params;
    return model;
}

/// Discretizes the head's analytic CDF onto a shared horizon grid so metrics
/// treat parametric and ensemble models uniformly.
inline SurvivalCurve predict_parametric_curve(const ParametricModel& model,
                                              std::span<const double> x,
                                              const HorizonGrid& grid) {
    if (x.size() != model.n_features())
        throw DimensionMismatch("predict_parametric_curve: dimension mismatch");
    std::vector<double> cdf(grid.size());
    if (model.head == HeadKind::Exponential) {
        const double lambda = model.rate_per_hour(x);
        for (std::size_t i = 0; i < grid.size(); ++i)
            cdf[i] = 1.0 - std::exp(-lambda * grid.horizons_hours[i]);
    } else {
        auto [mu, sigma] = model.lognormal_params(x);
        for (std::size_t i = 0; i < grid.size(); ++i)
            cdf[i] = lognormal_cdf(grid.horizons_hours[i], mu, sigma);
    }
    // Analytic CDFs are monotone; guard against rounding at extreme params.
    for (std::size_t i = 1; i < cdf.size(); ++i) cdf[i] = std::max(cdf[i], cdf[i - 1]);
    return SurvivalCurve(grid.horizons_hours, std::move(cdf), model.beyond_last);
}

}  // namespace wrse
