#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "wrse/core.hpp"
#include "wrse/errors.hpp"
#include "wrse/threading.hpp"
#include "wrse/weighting.hpp"

namespace wrse {

/// One evaluation instance: a predicted survival distribution plus what was
/// actually observed after the snapshot.
struct EvalInstance {
    SurvivalCurve curve;
    double y_hours = 0;
    bool censored = false;
};

// ---------------------------------------------------------------------------
// calibration
// ---------------------------------------------------------------------------

struct CalibrationResult {
    double area = 0.0;
    std::uint64_t instance_count = 0;
};

/// Reliability curve at one horizon: mean predicted probability of nonempty
/// bins against the realized fraction of positives, read as the piecewise
/// linear function through (0,0), the bin points, and (1,1).
struct CalibrationCurve {
    std::vector<double> bin_mean_predicted;
    std::vector<double> bin_fraction_positive;
    std::vector<double> bin_counts;  // nonempty bins only, same order
    std::uint64_t instance_count = 0;

    std::vector<std::pair<double, double>> polyline() const {
        std::vector<std::pair<double, double>> points;
        points.reserve(bin_mean_predicted.size() + 2);
        points.emplace_back(0.0, 0.0);
        for (std::size_t b = 0; b < bin_mean_predicted.size(); ++b)
            points.emplace_back(bin_mean_predicted[b], bin_fraction_positive[b]);
        points.emplace_back(1.0, 1.0);
        std::stable_sort(points.begin(), points.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        points.erase(std::unique(points.begin(), points.end()), points.end());
        return points;
    }

    /// Exact integral of |c(q) - q|, splitting each linear segment at the
    /// diagonal crossing when the deviation changes sign.
    double area_around_diagonal() const {
        const auto points = polyline();
        double area = 0.0;
        for (std::size_t i = 1; i < points.size(); ++i) {
            const double q0 = points[i - 1].first, v0 = points[i - 1].second;
            const double q1 = points[i].first, v1 = points[i].second;
            const double dq = q1 - q0;
            if (dq <= 0.0) continue;
            const double d0 = v0 - q0, d1 = v1 - q1;
            if (d0 * d1 >= 0.0) {
                area += 0.5 * std::abs(d0 + d1) * dq;
            } else {
                const double t = d0 / (d0 - d1);
                area += 0.5 * (std::abs(d0) * t + std::abs(d1) * (1.0 - t)) * dq;
            }
        }
        return area;
    }
};

/// Bins predictions F̂(tau) against observed death-within-tau outcomes on an
/// equal-width probability grid. Instances censored before tau are excluded
/// because their status at tau is unknown.
inline CalibrationCurve calibration_curve_at(std::span<const EvalInstance> instances,
                                             double tau_hours, int n_bins = 10) {
    if (n_bins < 1) throw DomainError("calibration: n_bins must be >= 1");
    if (!(tau_hours > 0.0)) throw DomainError("calibration: tau must be positive");

    std::vector<double> bin_count(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> bin_pred(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> bin_pos(static_cast<std::size_t>(n_bins), 0.0);
    std::uint64_t used = 0;
    for (const EvalInstance& inst : instances) {
        if (inst.censored && inst.y_hours <= tau_hours) continue;
        const double p = inst.curve.cdf_at(tau_hours);
        const double outcome = (!inst.censored && inst.y_hours <= tau_hours) ? 1.0 : 0.0;
        auto b = static_cast<std::size_t>(std::min<int>(
            n_bins - 1, static_cast<int>(p * static_cast<double>(n_bins))));
        bin_count[b] += 1.0;
        bin_pred[b] += p;
        bin_pos[b] += outcome;
        ++used;
    }
    if (used == 0) throw NoInstances("calibration: every instance excluded at tau");

    CalibrationCurve curve;
    curve.instance_count = used;
    for (int b = 0; b < n_bins; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        if (bin_count[bi] == 0.0) continue;
        curve.bin_mean_predicted.push_back(bin_pred[bi] / bin_count[bi]);
        curve.bin_fraction_positive.push_back(bin_pos[bi] / bin_count[bi]);
        curve.bin_counts.push_back(bin_count[bi]);
    }
    return curve;
}

/// Absolute area between the reliability curve and the diagonal at a fixed
/// horizon.
inline CalibrationResult calibration_area_at(std::span<const EvalInstance> instances,
                                             double tau_hours, int n_bins = 10) {
    const CalibrationCurve curve = calibration_curve_at(instances, tau_hours, n_bins);
    return CalibrationResult{curve.area_around_diagonal(), curve.instance_count};
}

struct CalWeighted {
    double value = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> used_horizons;
    std::vector<double> dropped_horizons;  // horizons with no usable instances
};

/// Weighted mean of per-horizon calibration areas, w(tau) = gamma^(tau/24h).
/// Horizons where every instance is excluded drop out of both sums.
inline CalWeighted cal_weighted(std::span<const EvalInstance> instances,
                                std::span<const double> horizon_hours, double gamma,
                                int n_bins = 10) {
    if (horizon_hours.empty()) throw EmptyInput("cal_weighted: empty horizon set");
    DecayWeighting decay(gamma);
    CalWeighted out;
    double num = 0.0, den = 0.0;
    for (double tau : horizon_hours) {
        double area;
        try {
            area = calibration_area_at(instances, tau, n_bins).area;
        } catch (const NoInstances&) {
            out.dropped_horizons.push_back(tau);
            continue;
        }
        const double w = decay.weight(tau / kHoursPerDay);
        num += w * area;
        den += w;
        out.used_horizons.push_back(tau);
    }
    if (den > 0.0) out.value = num / den;
    return out;
}

// ---------------------------------------------------------------------------
// discrimination
// ---------------------------------------------------------------------------

enum class TieMode { Strict, HalfCredit };

struct ConcordanceResult {
    double fraction = std::numeric_limits<double>::quiet_NaN();
    double concordant = 0.0;  // fractional under HalfCredit
    std::uint64_t pair_count = 0;
};

namespace detail {

/// Per-death-time tallies shared by the per-horizon metric and the weighted
/// index. For tau, pairs are (i dies exactly at tau, j still at risk: y_j >=
/// tau, j != i); a pair counts when Ŝ_i(tau) < Ŝ_j(tau), ties optionally 0.5.
struct TauTally {
    double tau = 0.0;
    double concordant = 0.0;
    std::uint64_t pairs = 0;
};

inline std::vector<TauTally> concordance_tallies(std::span<const EvalInstance> instances,
                                                 TieMode tie, int workers = 1) {
    std::vector<std::size_t> by_y_desc(instances.size());
    std::iota(by_y_desc.begin(), by_y_desc.end(), std::size_t{0});
    std::stable_sort(by_y_desc.begin(), by_y_desc.end(), [&](std::size_t a, std::size_t b) {
        return instances[a].y_hours > instances[b].y_hours;
    });

    std::vector<double> death_times;
    for (const EvalInstance& inst : instances)
        if (!inst.censored) death_times.push_back(inst.y_hours);
    std::sort(death_times.begin(), death_times.end());
    death_times.erase(std::unique(death_times.begin(), death_times.end()), death_times.end());

    // At-risk sets are prefixes of the y-descending order.
    std::vector<std::size_t> prefix_len(death_times.size());
    {
        std::size_t p = 0;
        for (std::size_t t = death_times.size(); t-- > 0;) {
            const double tau = death_times[t];
            while (p < by_y_desc.size() && instances[by_y_desc[p]].y_hours >= tau) ++p;
            prefix_len[t] = p;
        }
    }

    std::vector<TauTally> tallies(death_times.size());
    parallel_tasks(death_times.size(), workers, [&](std::size_t t) {
        const double tau = death_times[t];
        const std::size_t n_risk = prefix_len[t];
        std::vector<double> survival(n_risk);
        for (std::size_t i = 0; i < n_risk; ++i)
            survival[i] = instances[by_y_desc[i]].curve.survival_at(tau);
        std::vector<double> sorted_survival = survival;
        std::sort(sorted_survival.begin(), sorted_survival.end());

        TauTally tally;
        tally.tau = tau;
        for (std::size_t i = 0; i < n_risk; ++i) {
            const EvalInstance& inst = instances[by_y_desc[i]];
            if (inst.censored || inst.y_hours != tau) continue;
            const double s_i = survival[i];
            const auto hi = std::upper_bound(sorted_survival.begin(), sorted_survival.end(), s_i);
            tally.concordant += static_cast<double>(sorted_survival.end() - hi);
            if (tie == TieMode::HalfCredit) {
                const auto lo = std::lower_bound(sorted_survival.begin(), sorted_survival.end(), s_i);
                tally.concordant += 0.5 * static_cast<double>(hi - lo - 1);  // ties minus self
            }
            tally.pairs += n_risk - 1;
        }
        tallies[t] = tally;
    });
    return tallies;
}

}  // namespace detail

/// Fraction of concordant (dead, at-risk) pairs at one horizon. pair_count of
/// zero means no deaths occurred exactly at tau; the fraction is undefined
/// then and such horizons are skipped by the weighted aggregate.
inline ConcordanceResult concordant_fraction_at(std::span<const EvalInstance> instances,
                                                double tau_hours, TieMode tie = TieMode::Strict) {
    ConcordanceResult out;
    std::vector<std::size_t> at_risk;
    for (std::size_t j = 0; j < instances.size(); ++j)
        if (instances[j].y_hours >= tau_hours) at_risk.push_back(j);
    std::vector<double> survival(at_risk.size());
    for (std::size_t j = 0; j < at_risk.size(); ++j)
        survival[j] = instances[at_risk[j]].curve.survival_at(tau_hours);
    std::vector<double> sorted_survival = survival;
    std::sort(sorted_survival.begin(), sorted_survival.end());
    for (std::size_t j = 0; j < at_risk.size(); ++j) {
        const EvalInstance& inst = instances[at_risk[j]];
        if (inst.censored || inst.y_hours != tau_hours) continue;
        const double s_i = survival[j];
        const auto hi = std::upper_bound(sorted_survival.begin(), sorted_survival.end(), s_i);
        out.concordant += static_cast<double>(sorted_survival.end() - hi);
        if (tie == TieMode::HalfCredit) {
            const auto lo = std::lower_bound(sorted_survival.begin(), sorted_survival.end(), s_i);
            out.concordant += 0.5 * static_cast<double>(hi - lo - 1);
        }
        out.pair_count += at_risk.size() - 1;
    }
    if (out.pair_count > 0)
        out.fraction = out.concordant / static_cast<double>(out.pair_count);
    return out;
}

/// Weighted time-dependent discrimination index over the distinct death times
/// of the instance set, w(tau) = gamma^(tau/24h).
inline double ctd_weighted(std::span<const EvalInstance> instances, double gamma,
                           TieMode tie = TieMode::Strict, int workers = 1) {
    DecayWeighting decay(gamma);
    bool any_death = false;
    for (const EvalInstance& inst : instances)
        if (!inst.censored) any_death = true;
    if (!any_death) throw NoDeaths("ctd_weighted: no uncensored instances");

    const auto tallies = detail::concordance_tallies(instances, tie, workers);
    double num = 0.0, den = 0.0;
    for (const auto& tally : tallies) {  // ascending tau
        const double w = decay.weight(tally.tau / kHoursPerDay);
        num += tally.concordant * w;
        den += static_cast<double>(tally.pairs) * w;
    }
    return den > 0.0 ? num / den : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

struct HorizonMetrics {
    double cal_area = std::numeric_limits<double>::quiet_NaN();
    double concordant_fraction = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t pair_count = 0;
    std::uint64_t instance_count = 0;
};

struct WeightedMetrics {
    double cal_w = std::numeric_limits<double>::quiet_NaN();
    double ctd_w = std::numeric_limits<double>::quiet_NaN();
};

struct SummaryStat {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
};

/// Per-horizon curves plus the weighted scalar metrics, optionally aggregated
/// across split replicates (mean and standard error).
struct MetricReport {
    std::map<double, HorizonMetrics> per_horizon;  // keyed by tau_hours
    std::map<double, WeightedMetrics> weighted;    // keyed by gamma
    std::vector<double> dropped_calibration_horizons;
    int n_splits = 1;
    bool insufficient_replicates = false;  // single split: se reported as 0
    std::map<double, SummaryStat> ctd_w_stats;  // across splits, keyed by gamma
    std::map<double, SummaryStat> cal_w_stats;
};

struct MetricConfig {
    std::vector<double> gammas{0.3, 0.5, 0.8};
    std::vector<double> horizon_hours{24, 48, 72, 96, 120, 144, 168, 192, 216, 240};
    int n_bins = 10;
    TieMode tie_mode = TieMode::Strict;
};

/// Full single-split evaluation: calibration on the configured horizon grid,
/// discrimination at every distinct death time, and the weighted aggregates
/// for each configured gamma.
inline MetricReport compute_metric_report(std::span<const EvalInstance> instances,
                                          const MetricConfig& cfg, int workers = 1) {
    MetricReport report;

    std::vector<CalibrationResult> cal(cfg.horizon_hours.size());
    // One byte per slot: parallel writers must not share vector<bool> bits.
    std::vector<std::uint8_t> cal_ok(cfg.horizon_hours.size(), 0);
    parallel_tasks(cfg.horizon_hours.size(), workers, [&](std::size_t h) {
        try {
            cal[h] = calibration_area_at(instances, cfg.horizon_hours[h], cfg.n_bins);
            cal_ok[h] = 1;
        } catch (const NoInstances&) {
            cal_ok[h] = 0;
        }
    });
    for (std::size_t h = 0; h < cfg.horizon_hours.size(); ++h) {
        auto& row = report.per_horizon[cfg.horizon_hours[h]];
        if (cal_ok[h]) {
            row.cal_area = cal[h].area;
            row.instance_count = cal[h].instance_count;
        } else {
            report.dropped_calibration_horizons.push_back(cfg.horizon_hours[h]);
        }
    }

    const auto tallies = detail::concordance_tallies(instances, cfg.tie_mode, workers);
    for (const auto& tally : tallies) {
        auto& row = report.per_horizon[tally.tau];
        row.pair_count = tally.pairs;
        if (tally.pairs > 0)
            row.concordant_fraction = tally.concordant / static_cast<double>(tally.pairs);
    }

    const bool any_death = !tallies.empty();
    for (double gamma : cfg.gammas) {
        DecayWeighting decay(gamma);
        WeightedMetrics wm;
        double num = 0.0, den = 0.0;
        for (std::size_t h = 0; h < cfg.horizon_hours.size(); ++h) {
            if (!cal_ok[h]) continue;
            const double w = decay.weight(cfg.horizon_hours[h] / kHoursPerDay);
            num += w * cal[h].area;
            den += w;
        }
        if (den > 0.0) wm.cal_w = num / den;
        if (any_death) {
            double cnum = 0.0, cden = 0.0;
            for (const auto& tally : tallies) {
                const double w = decay.weight(tally.tau / kHoursPerDay);
                cnum += tally.concordant * w;
                cden += static_cast<double>(tally.pairs) * w;
            }
            if (cden > 0.0) wm.ctd_w = cnum / cden;
        }
        report.weighted[gamma] = wm;
    }
    return report;
}

/// Mean and standard error (sample std / sqrt(n)) of every weighted metric
/// across split replicates. A single replicate reports se = 0 and raises the
/// insufficient_replicates flag.
inline MetricReport aggregate_splits(std::span<const MetricReport> reports) {
    if (reports.empty()) throw EmptyInput("aggregate_splits: no reports");
    MetricReport out;
    out.n_splits = static_cast<int>(reports.size());
    out.insufficient_replicates = reports.size() < 2;

    auto stat_of = [&](auto&& getter) {
        std::vector<double> values;
        for (const MetricReport& r : reports) {
            const double v = getter(r);
            if (!std::isnan(v)) values.push_back(v);
        }
        SummaryStat s;
        if (values.empty()) return s;
        const double n = static_cast<double>(values.size());
        s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        if (values.size() < 2) {
            s.se = 0.0;
        } else {
            double ss = 0.0;
            for (double v : values) ss += (v - s.mean) * (v - s.mean);
            s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
        }
        return s;
    };

    for (const auto& [gamma, wm] : reports.front().weighted) {
        (void)wm;
        const double g = gamma;
        out.ctd_w_stats[g] = stat_of([g](const MetricReport& r) {
            const auto it = r.weighted.find(g);
            return it == r.weighted.end() ? std::numeric_limits<double>::quiet_NaN()
                                          : it->second.ctd_w;
        });
        out.cal_w_stats[g] = stat_of([g](const MetricReport& r) {
            const auto it = r.weighted.find(g);
            return it == r.weighted.end() ? std::numeric_limits<double>::quiet_NaN()
                                          : it->second.cal_w;
        });
        out.weighted[g] = WeightedMetrics{out.cal_w_stats[g].mean, out.ctd_w_stats[g].mean};
    }

    // Per-horizon rows: mean over splits where defined, counts summed.
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> rows;
    for (const MetricReport& r : reports) {
        for (const auto& [tau, hm] : r.per_horizon) {
            auto& cell = rows[tau];
            if (!std::isnan(hm.cal_area)) cell.first.push_back(hm.cal_area);
            if (!std::isnan(hm.concordant_fraction))
                cell.second.push_back(hm.concordant_fraction);
            auto& agg = out.per_horizon[tau];
            agg.pair_count += hm.pair_count;
            agg.instance_count += hm.instance_count;
        }
    }
    for (auto& [tau, cell] : rows) {
        auto& agg = out.per_horizon[tau];
        if (!cell.first.empty())
            agg.cal_area = std::accumulate(cell.first.begin(), cell.first.end(), 0.0) /
                           static_cast<double>(cell.first.size());
        if (!cell.second.empty())
            agg.concordant_fraction =
                std::accumulate(cell.second.begin(), cell.second.end(), 0.0) /
                static_cast<double>(cell.second.size());
    }
    return out;
}

}  // namespace wrse
