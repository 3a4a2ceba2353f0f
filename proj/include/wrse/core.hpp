#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "wrse/errors.hpp"

namespace wrse {

/// Dense row-major matrix of hourly feature rows.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols

    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

/// One ICU stay: hourly feature trajectory plus its (possibly censored) event time.
/// Times are hours since admission everywhere in this library; decay weighting
/// converts to days only at the metric boundary.
struct StayRecord {
    std::string stay_id;
    FeatureMatrix features;        // k_i hourly rows, row t sampled at t hours
    double event_time_hours = 0;   // death or discharge
    bool censored = false;         // true = discharged, false = died

    /// Whole-hour snapshots are emitted at t = 0, 1, ... while t < event time.
    std::size_t snapshot_count() const {
        const double e = event_time_hours;
        const double c = std::ceil(e);
        return static_cast<std::size_t>(c == e ? e : c);
    }

    void validate() const {
        if (features.rows < 1) throw DomainError("stay " + stay_id + ": needs at least one feature row");
        if (features.data.size() != features.rows * features.cols)
            throw DomainError("stay " + stay_id + ": feature matrix shape mismatch");
        if (!(event_time_hours > 0.0))
            throw DomainError("stay " + stay_id + ": event time must be positive");
        // Rows are hourly starting at t=0, so the last row sits at k_i - 1 hours.
        if (event_time_hours < static_cast<double>(features.rows - 1))
            throw DomainError("stay " + stay_id + ": event time precedes last feature row");
        if (features.rows < snapshot_count())
            throw DomainError("stay " + stay_id + ": too few feature rows for hourly snapshots");
        for (double v : features.data)
            if (!std::isfinite(v)) throw DomainError("stay " + stay_id + ": non-finite feature value");
    }
};

/// One hourly prediction instance: the feature vector observed t hours into a
/// stay and the remaining time y to the stay's event.
struct Snapshot {
    std::string stay_id;
    double t_hours = 0;
    std::vector<double> x;
    double y_hours = 0;  // event_time - t, always > 0
    bool censored = false;
};

enum class SplitTag { Train, Validation, Test };

struct Dataset {
    std::vector<StayRecord> stays;
    SplitTag split_tag = SplitTag::Train;

    void validate() const {
        std::unordered_set<std::string> seen;
        for (const auto& s : stays) {
            s.validate();
            if (!seen.insert(s.stay_id).second)
                throw DomainError("duplicate stay_id " + s.stay_id);
        }
    }
};

/// Emits every hourly snapshot of every stay, in stay order then ascending t.
/// Deterministic: two calls on the same dataset produce identical streams.
inline std::vector<Snapshot> snapshots_of(const Dataset& dataset) {
    std::vector<Snapshot> out;
    std::size_t total = 0;
    for (const auto& s : dataset.stays) total += s.snapshot_count();
    out.reserve(total);
    for (const auto& s : dataset.stays) {
        const std::size_t n = s.snapshot_count();
        for (std::size_t t = 0; t < n; ++t) {
            Snapshot snap;
            snap.stay_id = s.stay_id;
            snap.t_hours = static_cast<double>(t);
            snap.x.assign(s.features.row(t), s.features.row(t) + s.features.cols);
            snap.y_hours = s.event_time_hours - snap.t_hours;
            snap.censored = s.censored;
            out.push_back(std::move(snap));
        }
    }
    return out;
}

enum class BeyondLast { Clamp, Undefined };

/// Number of curve evaluations that were clamped past the last knot since
/// process start. Diagnostic only; never affects results.
inline std::atomic<std::uint64_t>& clamp_warning_count() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

/// Monotone CDF knots (h_k, F_k) with piecewise-linear evaluation anchored at
/// (0, 0). Beyond the last knot the curve either clamps or refuses to answer.
class SurvivalCurve {
public:
    SurvivalCurve() = default;
    SurvivalCurve(std::vector<double> knots, std::vector<double> cdf,
                  BeyondLast beyond_last = BeyondLast::Clamp)
        : knots_(std::move(knots)), cdf_(std::move(cdf)), beyond_last_(beyond_last) {
        if (knots_.empty()) throw DomainError("survival curve needs at least one knot");
        if (knots_.size() != cdf_.size()) throw LengthMismatch("knots and cdf lengths differ");
        double prev_knot = 0.0, prev_cdf = 0.0;
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            if (!(knots_[i] > prev_knot)) throw DomainError("knots must be strictly ascending and positive");
            if (cdf_[i] < prev_cdf || cdf_[i] < 0.0 || cdf_[i] > 1.0)
                throw DomainError("cdf values must be nondecreasing within [0, 1]");
            prev_knot = knots_[i];
            prev_cdf = cdf_[i];
        }
    }

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& cdf() const { return cdf_; }
    BeyondLast beyond_last() const { return beyond_last_; }

    /// F̂(tau): 0 at tau = 0, linear between knots, clamp or error past h_K.
    double cdf_at(double tau_hours) const {
        if (!(tau_hours >= 0.0)) throw DomainError("curve evaluation requires tau >= 0");
        if (tau_hours == 0.0) return 0.0;
        if (tau_hours >= knots_.back()) {
            if (tau_hours == knots_.back()) return cdf_.back();
            if (beyond_last_ == BeyondLast::Undefined)
                throw QueryBeyondSupport("tau beyond last horizon of a strict curve");
            clamp_warning_count().fetch_add(1, std::memory_order_relaxed);
            return cdf_.back();
        }
        const auto it = std::lower_bound(knots_.begin(), knots_.end(), tau_hours);
        const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
        const double k1 = knots_[i];
        const double f1 = cdf_[i];
        const double k0 = i == 0 ? 0.0 : knots_[i - 1];
        const double f0 = i == 0 ? 0.0 : cdf_[i - 1];
        if (tau_hours == k1) return f1;
        return f0 + (f1 - f0) * (tau_hours - k0) / (k1 - k0);
    }

    /// Ŝ(tau) = 1 - F̂(tau).
    double survival_at(double tau_hours) const { return 1.0 - cdf_at(tau_hours); }

private:
    std::vector<double> knots_;
    std::vector<double> cdf_;
    BeyondLast beyond_last_ = BeyondLast::Clamp;
};

}  // namespace wrse
