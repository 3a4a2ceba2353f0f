#include <catch2/catch_amalgamated.hpp>

#include "wrse/core.hpp"

using namespace wrse;

namespace {

StayRecord make_stay(const std::string& id, double event_time, bool censored,
                     std::size_t d = 2) {
    StayRecord s;
    s.stay_id = id;
    s.event_time_hours = event_time;
    s.censored = censored;
    s.features.rows = s.snapshot_count();
    s.features.cols = d;
    s.features.data.assign(s.features.rows * d, 0.0);
    for (std::size_t t = 0; t < s.features.rows; ++t)
        for (std::size_t f = 0; f < d; ++f)
            s.features.data[t * d + f] = static_cast<double>(t) + 0.1 * static_cast<double>(f);
    return s;
}

}  // namespace

TEST_CASE("hourly snapshots of a 2.5h stay") {
    Dataset ds;
    ds.stays.push_back(make_stay("a", 2.5, false));
    const auto snaps = snapshots_of(ds);
    REQUIRE(snaps.size() == 3);
    CHECK(snaps[0].t_hours == 0.0);
    CHECK(snaps[0].y_hours == 2.5);
    CHECK(snaps[1].y_hours == 1.5);
    CHECK(snaps[2].y_hours == 0.5);
    CHECK(snaps[2].x[0] == 2.0);
    CHECK_FALSE(snaps[2].censored);
}

TEST_CASE("integer event time excludes the boundary snapshot") {
    Dataset ds;
    ds.stays.push_back(make_stay("a", 1.0, true));
    const auto snaps = snapshots_of(ds);
    REQUIRE(snaps.size() == 1);
    CHECK(snaps[0].t_hours == 0.0);
    CHECK(snaps[0].y_hours == 1.0);
    CHECK(snaps[0].censored);
}

TEST_CASE("snapshot count sums over stays") {
    Dataset ds;
    ds.stays.push_back(make_stay("a", 2.0, false));
    ds.stays.push_back(make_stay("b", 3.0, false));
    ds.stays.push_back(make_stay("c", 1.0, true));
    CHECK(snapshots_of(ds).size() == 6);
}

TEST_CASE("empty dataset yields an empty stream") {
    CHECK(snapshots_of(Dataset{}).empty());
}

TEST_CASE("snapshot streams are deterministic") {
    Dataset ds;
    ds.stays.push_back(make_stay("a", 5.5, false));
    ds.stays.push_back(make_stay("b", 2.5, true));
    const auto first = snapshots_of(ds);
    const auto second = snapshots_of(ds);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].stay_id == second[i].stay_id);
        CHECK(first[i].t_hours == second[i].t_hours);
        CHECK(first[i].y_hours == second[i].y_hours);
        CHECK(first[i].x == second[i].x);
    }
}

TEST_CASE("dataset rejects duplicate stay ids") {
    Dataset ds;
    ds.stays.push_back(make_stay("a", 2.0, false));
    ds.stays.push_back(make_stay("a", 3.0, false));
    CHECK_THROWS_AS(ds.validate(), DomainError);
}

TEST_CASE("curve evaluation at knots, between, and beyond") {
    SurvivalCurve curve({24.0, 48.0}, {0.2, 0.4}, BeyondLast::Clamp);
    CHECK(curve.cdf_at(24.0) == 0.2);
    CHECK(curve.cdf_at(36.0) == Catch::Approx(0.3).margin(1e-15));
    CHECK(curve.cdf_at(100.0) == 0.4);
    CHECK(curve.cdf_at(0.0) == 0.0);
    CHECK(curve.cdf_at(12.0) == Catch::Approx(0.1).margin(1e-15));
}

TEST_CASE("strict curves refuse queries beyond the last knot") {
    SurvivalCurve curve({24.0}, {0.3}, BeyondLast::Undefined);
    CHECK(curve.cdf_at(24.0) == 0.3);
    CHECK_THROWS_AS(curve.cdf_at(24.0001), QueryBeyondSupport);
    CHECK_THROWS_AS(curve.cdf_at(-1.0), DomainError);
}

TEST_CASE("clamped evaluations bump the warning counter") {
    SurvivalCurve curve({10.0}, {0.5});
    const auto before = clamp_warning_count().load();
    (void)curve.cdf_at(11.0);
    CHECK(clamp_warning_count().load() == before + 1);
}

TEST_CASE("curve construction enforces monotone cdf and ascending knots") {
    CHECK_THROWS_AS(SurvivalCurve({2.0, 1.0}, {0.1, 0.2}), DomainError);
    CHECK_THROWS_AS(SurvivalCurve({1.0, 2.0}, {0.3, 0.2}), DomainError);
    CHECK_THROWS_AS(SurvivalCurve({1.0, 2.0}, {0.3, 1.2}), DomainError);
    CHECK_THROWS_AS(SurvivalCurve({1.0}, {0.1, 0.2}), LengthMismatch);
}

TEST_CASE("cdf monotone in tau and survival complements it exactly") {
    SurvivalCurve curve({5.0, 20.0, 30.0}, {0.1, 0.15, 0.8});
    double prev = -1.0;
    for (double tau = 0.0; tau <= 35.0; tau += 0.25) {
        const double f = curve.cdf_at(tau);
        CHECK(f >= prev);
        CHECK(curve.survival_at(tau) == 1.0 - f);
        prev = f;
    }
}

TEST_CASE("stay validation catches bad shapes") {
    StayRecord s = make_stay("a", 3.5, false);
    s.event_time_hours = -1.0;
    CHECK_THROWS_AS(s.validate(), DomainError);

    StayRecord too_few = make_stay("b", 3.5, false);
    too_few.features.rows = 2;
    too_few.features.data.resize(2 * too_few.features.cols);
    CHECK_THROWS_AS(too_few.validate(), DomainError);
}
