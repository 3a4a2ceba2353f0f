#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wrse/core.hpp"
#include "wrse/errors.hpp"
#include "wrse/rng.hpp"
#include "wrse/threading.hpp"

namespace wrse {

enum class ScenarioKind : std::uint32_t { ExponentialPH, WeibullPH, TimeVaryingHazard };

/// Synthetic censored cohort with analytically known conditional survival.
/// Death times follow a proportional-hazards law on standard-normal features;
/// discharge (censoring) is an independent exponential clock. One SplitMix64
/// stream per stay makes generation deterministic under any parallelism.
struct Scenario {
    ScenarioKind kind = ScenarioKind::ExponentialPH;
    std::size_t d = 5;
    std::vector<double> beta;             // log-hazard coefficients, length d
    double baseline_rate_per_hour = 1.0 / 40.0;  // exponential / time-varying base rate
    double weibull_shape = 1.3;
    double weibull_scale_hours = 60.0;
    double censor_rate_per_hour = 1.0 / 60.0;    // 0 disables censoring
    double ar1_rho = 0.95;                // hourly feature drift (time-varying only)
    std::size_t max_window_hours = 720;   // time-varying hazard path length
    std::uint64_t seed = 1;

    void validate() const {
        if (d == 0) throw DomainError("scenario: d must be positive");
        if (beta.size() != d) throw DomainError("scenario: beta length must equal d");
        if (!(baseline_rate_per_hour > 0.0)) throw DomainError("scenario: baseline rate must be positive");
        if (!(weibull_shape > 0.0) || !(weibull_scale_hours > 0.0))
            throw DomainError("scenario: weibull parameters must be positive");
        if (censor_rate_per_hour < 0.0) throw DomainError("scenario: censor rate must be nonnegative");
        if (!(ar1_rho > -1.0 && ar1_rho < 1.0)) throw DomainError("scenario: ar1_rho must be in (-1, 1)");
        if (max_window_hours < 1) throw DomainError("scenario: max_window_hours must be positive");
    }

    double relative_risk(std::span<const double> x) const {
        double z = 0.0;
        for (std::size_t i = 0; i < d; ++i) z += beta[i] * x[i];
        return std::exp(z);
    }
};

namespace detail {

/// Events land on the half-hour marks between snapshot hours: the smallest
/// m + 0.5 at or above the raw event time. Snapshot times (whole hours) can
/// then never tie with event times, keeping exact death-time matching in the
/// metrics well defined.
inline double quantize_event_time(double raw_hours) {
    const double base = std::floor(raw_hours);
    return base + 0.5 >= raw_hours ? base + 0.5 : base + 1.5;
}

inline std::string make_stay_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "S%06zu", index);
    return buf;
}

/// Draw order per stay is fixed (features, then death, then censor) so the
/// oracle can re-derive the same trajectory from (seed, stay index).
struct StayDraw {
    std::vector<double> path;  // hourly feature rows, row-major
    double death_hours = 0.0;
    double censor_hours = 0.0;
};

inline StayDraw draw_stay(const Scenario& sc, std::size_t stay_index) {
    SplitMix64 rng = SplitMix64::stream(sc.seed, stay_index);
    StayDraw draw;
    if (sc.kind == ScenarioKind::TimeVaryingHazard) {
        // AR(1) feature drift with stationary N(0,1) marginals; the hazard is
        // piecewise constant over each hour.
        draw.path.resize(sc.max_window_hours * sc.d);
        for (std::size_t f = 0; f < sc.d; ++f) draw.path[f] = rng.normal();
        const double innovation = std::sqrt(1.0 - sc.ar1_rho * sc.ar1_rho);
        for (std::size_t t = 1; t < sc.max_window_hours; ++t)
            for (std::size_t f = 0; f < sc.d; ++f)
                draw.path[t * sc.d + f] =
                    sc.ar1_rho * draw.path[(t - 1) * sc.d + f] + innovation * rng.normal();

        const double target = rng.exponential(1.0);  // cumulative hazard at death
        double cum = 0.0;
        double death = -1.0;
        double rate = sc.baseline_rate_per_hour;
        for (std::size_t t = 0; t < sc.max_window_hours; ++t) {
            rate = sc.baseline_rate_per_hour *
                   sc.relative_risk({draw.path.data() + t * sc.d, sc.d});
            if (cum + rate > target) {
                death = static_cast<double>(t) + (target - cum) / rate;
                break;
            }
            cum += rate;
        }
        if (death < 0.0)  // beyond the window: hold the last hazard
            death = static_cast<double>(sc.max_window_hours) + (target - cum) / rate;
        draw.death_hours = death;
    } else {
        draw.path.resize(sc.d);
        for (std::size_t f = 0; f < sc.d; ++f) draw.path[f] = rng.normal();
        const double risk = sc.relative_risk(draw.path);
        if (sc.kind == ScenarioKind::ExponentialPH) {
            draw.death_hours = rng.exponential(sc.baseline_rate_per_hour * risk);
        } else {
            // S(t) = exp(-risk (t / scale)^shape)  =>  inverse transform.
            const double u = rng.exponential(1.0);
            draw.death_hours =
                sc.weibull_scale_hours * std::pow(u / risk, 1.0 / sc.weibull_shape);
        }
    }
    draw.censor_hours = sc.censor_rate_per_hour > 0.0
                            ? rng.exponential(sc.censor_rate_per_hour)
                            : std::numeric_limits<double>::infinity();
    return draw;
}

}  // namespace detail

inline Dataset generate(const Scenario& sc, std::size_t n_stays, SplitTag tag = SplitTag::Train,
                        int workers = 1) {
    sc.validate();
    if (n_stays < 1) throw DomainError("generate: n_stays must be >= 1");
    Dataset out;
    out.split_tag = tag;
    out.stays.resize(n_stays);
    parallel_chunks(n_stays, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const detail::StayDraw draw = detail::draw_stay(sc, i);
            StayRecord stay;
            stay.stay_id = detail::make_stay_id(i);
            stay.censored = draw.censor_hours < draw.death_hours;
            stay.event_time_hours =
                detail::quantize_event_time(std::min(draw.death_hours, draw.censor_hours));
            const std::size_t rows = stay.snapshot_count();
            stay.features.rows = rows;
            stay.features.cols = sc.d;
            stay.features.data.resize(rows * sc.d);
            for (std::size_t t = 0; t < rows; ++t) {
                const std::size_t src = sc.kind == ScenarioKind::TimeVaryingHazard
                                            ? std::min(t, sc.max_window_hours - 1) * sc.d
                                            : 0;
                std::copy(draw.path.begin() + static_cast<std::ptrdiff_t>(src),
                          draw.path.begin() + static_cast<std::ptrdiff_t>(src + sc.d),
                          stay.features.data.begin() + static_cast<std::ptrdiff_t>(t * sc.d));
            }
            out.stays[i] = std::move(stay);
        }
    });
    out.validate();
    return out;
}

/// Ground-truth conditional survival S(tau | survived to t, x) for a snapshot
/// of a generated cohort. Exponential hazards are memoryless; Weibull
/// conditions the baseline; the time-varying case replays the stay's own
/// hazard path (re-derived from the seed), holding the last hazard constant
/// beyond the generation window.
class OracleCurve {
public:
    static OracleCurve exponential(double rate_per_hour) {
        OracleCurve oc;
        oc.kind_ = ScenarioKind::ExponentialPH;
        oc.rate_ = rate_per_hour;
        return oc;
    }

    double survival(double tau_hours) const {
        if (!(tau_hours >= 0.0)) throw DomainError("oracle: tau must be nonnegative");
        switch (kind_) {
            case ScenarioKind::ExponentialPH:
                return std::exp(-rate_ * tau_hours);
            case ScenarioKind::WeibullPH: {
                const double a = std::pow((t_ + tau_hours) / scale_, shape_);
                const double b = std::pow(t_ / scale_, shape_);
                return std::exp(-risk_ * (a - b));
            }
            case ScenarioKind::TimeVaryingHazard:
                return std::exp(-(cumulative_hazard(t_ + tau_hours) - cumulative_hazard(t_)));
        }
        return 0.0;
    }

    double cdf(double tau_hours) const { return 1.0 - survival(tau_hours); }

private:
    friend OracleCurve oracle_curve(const Scenario&, const Snapshot&);

    double cumulative_hazard(double t) const {
        // Piecewise-constant hourly hazards.
        double acc = 0.0;
        const auto n = static_cast<std::size_t>(hazards_.size());
        const auto full = std::min(static_cast<std::size_t>(std::floor(t)), n);
        for (std::size_t h = 0; h < full; ++h) acc += hazards_[h];
        const double rest = t - static_cast<double>(full);
        acc += rest * (full < n ? hazards_[full] : hazards_.back());
        return acc;
    }

    ScenarioKind kind_ = ScenarioKind::ExponentialPH;
    double rate_ = 0.0;                     // exponential
    double risk_ = 0.0, shape_ = 0.0, scale_ = 0.0, t_ = 0.0;  // weibull
    std::vector<double> hazards_;           // time-varying
};

inline OracleCurve oracle_curve(const Scenario& sc, const Snapshot& snapshot) {
    sc.validate();
    if (snapshot.x.size() != sc.d)
        throw ScenarioMismatch("oracle_curve: snapshot dimension differs from scenario");
    OracleCurve oc;
    oc.kind_ = sc.kind;
    oc.t_ = snapshot.t_hours;
    switch (sc.kind) {
        case ScenarioKind::ExponentialPH:
            oc.rate_ = sc.baseline_rate_per_hour * sc.relative_risk(snapshot.x);
            break;
        case ScenarioKind::WeibullPH:
            oc.risk_ = sc.relative_risk(snapshot.x);
            oc.shape_ = sc.weibull_shape;
            oc.scale_ = sc.weibull_scale_hours;
            break;
        case ScenarioKind::TimeVaryingHazard: {
            if (snapshot.stay_id.size() < 2 || snapshot.stay_id[0] != 'S')
                throw ScenarioMismatch("oracle_curve: unrecognized stay id " + snapshot.stay_id);
            const std::size_t index = std::stoul(snapshot.stay_id.substr(1));
            const detail::StayDraw draw = detail::draw_stay(sc, index);
            const auto t = static_cast<std::size_t>(snapshot.t_hours);
            if ((t + 1) * sc.d > draw.path.size())
                throw ScenarioMismatch("oracle_curve: snapshot beyond generated window");
            for (std::size_t f = 0; f < sc.d; ++f)
                if (draw.path[t * sc.d + f] != snapshot.x[f])
                    throw ScenarioMismatch("oracle_curve: snapshot features do not match scenario");
            oc.hazards_.resize(sc.max_window_hours);
            for (std::size_t h = 0; h < sc.max_window_hours; ++h)
                oc.hazards_[h] = sc.baseline_rate_per_hour *
                                 sc.relative_risk({draw.path.data() + h * sc.d, sc.d});
            break;
        }
    }
    return oc;
}

/// Discretizes an oracle onto a knot grid so it can stand in for a model.
inline SurvivalCurve oracle_to_curve(const OracleCurve& oracle, std::span<const double> knots,
                                     BeyondLast beyond = BeyondLast::Clamp) {
    std::vector<double> cdf(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) cdf[i] = oracle.cdf(knots[i]);
    for (std::size_t i = 1; i < cdf.size(); ++i) cdf[i] = std::max(cdf[i], cdf[i - 1]);
    return SurvivalCurve(std::vector<double>(knots.begin(), knots.end()), std::move(cdf), beyond);
}

}  // namespace wrse
