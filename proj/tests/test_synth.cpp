#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wrse/synth.hpp"

using namespace wrse;

namespace {

Scenario base_scenario() {
    Scenario sc;
    sc.kind = ScenarioKind::ExponentialPH;
    sc.d = 3;
    sc.beta = {0.5, -0.4, 0.0};
    sc.baseline_rate_per_hour = 1.0 / 40.0;
    sc.censor_rate_per_hour = 1.0 / 60.0;
    sc.seed = 99;
    return sc;
}

}  // namespace

TEST_CASE("generation is deterministic and worker-independent") {
    const Scenario sc = base_scenario();
    const Dataset a = generate(sc, 200, SplitTag::Train, 1);
    const Dataset b = generate(sc, 200, SplitTag::Train, 4);
    REQUIRE(a.stays.size() == b.stays.size());
    for (std::size_t i = 0; i < a.stays.size(); ++i) {
        CHECK(a.stays[i].stay_id == b.stays[i].stay_id);
        CHECK(a.stays[i].event_time_hours == b.stays[i].event_time_hours);
        CHECK(a.stays[i].censored == b.stays[i].censored);
        CHECK(a.stays[i].features.data == b.stays[i].features.data);
    }
    Scenario other = sc;
    other.seed = 100;
    const Dataset c = generate(other, 200);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.stays.size(); ++i)
        any_diff |= a.stays[i].event_time_hours != c.stays[i].event_time_hours;
    CHECK(any_diff);
}

TEST_CASE("zero censor rate produces no censored stays") {
    Scenario sc = base_scenario();
    sc.censor_rate_per_hour = 0.0;
    const Dataset data = generate(sc, 300);
    for (const StayRecord& s : data.stays) CHECK_FALSE(s.censored);
}

TEST_CASE("event times sit on half-hour offsets and snapshots never tie") {
    const Dataset data = generate(base_scenario(), 400);
    for (const StayRecord& s : data.stays) {
        const double frac = s.event_time_hours - std::floor(s.event_time_hours);
        CHECK(frac == 0.5);
        CHECK(s.event_time_hours > 0.0);
    }
    for (const Snapshot& snap : snapshots_of(data)) {
        CHECK(snap.y_hours > 0.0);
        CHECK(snap.y_hours - std::floor(snap.y_hours) == 0.5);
    }
}

TEST_CASE("uncensored marginal mean matches the baseline rate") {
    Scenario sc = base_scenario();
    sc.beta = {0.0, 0.0, 0.0};
    sc.baseline_rate_per_hour = 1.0 / 100.0;
    sc.censor_rate_per_hour = 0.0;
    sc.seed = 7;
    const Dataset data = generate(sc, 10000);
    double mean = 0.0;
    for (const StayRecord& s : data.stays) mean += s.event_time_hours;
    mean /= static_cast<double>(data.stays.size());
    const double expected = 100.0;
    const double se = expected / std::sqrt(10000.0);
    CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("death fraction before a horizon matches the closed-form retained-set value") {
    // Among stays not censored before h, the death fraction converges to
    // a z / (a z + 1 - z) with a = lambda/(lambda+mu), z = 1 - exp(-(lambda+mu) h).
    Scenario sc = base_scenario();
    sc.beta = {0.0, 0.0, 0.0};
    sc.seed = 11;
    const double lambda = sc.baseline_rate_per_hour, mu = sc.censor_rate_per_hour;
    const Dataset data = generate(sc, 6000);
    const double h = 48.5;  // quantization-exact boundary
    std::size_t deaths = 0, retained = 0;
    for (const StayRecord& s : data.stays) {
        if (s.censored && s.event_time_hours <= h) continue;
        ++retained;
        if (!s.censored && s.event_time_hours <= h) ++deaths;
    }
    const double a = lambda / (lambda + mu);
    const double z = 1.0 - std::exp(-(lambda + mu) * h);
    const double expected = a * z / (a * z + 1.0 - z);
    const double fraction = static_cast<double>(deaths) / static_cast<double>(retained);
    const double se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(retained));
    CHECK(std::abs(fraction - expected) < 3.0 * se);
}

TEST_CASE("exponential oracle is memoryless and correct") {
    Scenario sc = base_scenario();
    sc.censor_rate_per_hour = 0.0;
    const Dataset data = generate(sc, 5);
    const auto snaps = snapshots_of(data);
    // Fixture value: lambda = 1/24 gives S(24) = e^-1.
    Scenario fixed = sc;
    fixed.beta = {0.0, 0.0, 0.0};
    fixed.baseline_rate_per_hour = 1.0 / 24.0;
    const OracleCurve oc = oracle_curve(fixed, snaps.front());
    CHECK(oc.survival(24.0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(oc.survival(24.0) == Catch::Approx(0.367879).margin(1e-6));
    CHECK(oc.survival(0.0) == 1.0);

    // Memorylessness: every snapshot of the same stay shares the curve.
    const std::string first_id = snaps.front().stay_id;
    std::vector<const Snapshot*> same_stay;
    for (const auto& s : snaps)
        if (s.stay_id == first_id) same_stay.push_back(&s);
    REQUIRE(same_stay.size() >= 2);
    const OracleCurve at0 = oracle_curve(sc, *same_stay.front());
    const OracleCurve later = oracle_curve(sc, *same_stay.back());
    for (double tau : {1.0, 12.0, 48.0, 200.0})
        CHECK(at0.survival(tau) == later.survival(tau));
}

TEST_CASE("weibull oracle conditions the baseline correctly") {
    Scenario sc;
    sc.kind = ScenarioKind::WeibullPH;
    sc.d = 2;
    sc.beta = {0.3, -0.3};
    sc.weibull_shape = 1.4;
    sc.weibull_scale_hours = 50.0;
    sc.censor_rate_per_hour = 0.0;
    sc.seed = 5;
    const Dataset data = generate(sc, 10);
    const auto snaps = snapshots_of(data);
    const Snapshot* later = nullptr;
    for (const auto& s : snaps)
        if (s.t_hours >= 3.0) {
            later = &s;
            break;
        }
    REQUIRE(later != nullptr);
    const OracleCurve oc = oracle_curve(sc, *later);
    const double eta = sc.relative_risk(later->x);
    auto s0 = [&](double t) {
        return std::exp(-std::pow(t / sc.weibull_scale_hours, sc.weibull_shape));
    };
    for (double tau : {1.0, 10.0, 40.0}) {
        const double expected = std::pow(s0(later->t_hours + tau), eta) /
                                std::pow(s0(later->t_hours), eta);
        CHECK(oc.survival(tau) == Catch::Approx(expected).epsilon(1e-10));
    }
    CHECK(oc.survival(0.0) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("time-varying oracle replays the stay's hazard path") {
    Scenario sc;
    sc.kind = ScenarioKind::TimeVaryingHazard;
    sc.d = 2;
    sc.beta = {0.6, -0.2};
    sc.baseline_rate_per_hour = 1.0 / 50.0;
    sc.censor_rate_per_hour = 1.0 / 100.0;
    sc.ar1_rho = 0.9;
    sc.seed = 41;
    const Dataset data = generate(sc, 20);
    const auto snaps = snapshots_of(data);
    const OracleCurve oc = oracle_curve(sc, snaps.front());
    CHECK(oc.survival(0.0) == 1.0);
    double prev = 1.0;
    for (double tau = 1.0; tau <= 240.0; tau += 7.0) {
        const double s = oc.survival(tau);
        CHECK(s <= prev);
        CHECK(s >= 0.0);
        prev = s;
    }
    // A snapshot whose features disagree with the scenario's path is rejected.
    Snapshot tampered = snaps.front();
    tampered.x[0] += 1.0;
    CHECK_THROWS_AS(oracle_curve(sc, tampered), ScenarioMismatch);
    Snapshot wrong_dim = snaps.front();
    wrong_dim.x.push_back(0.0);
    CHECK_THROWS_AS(oracle_curve(sc, wrong_dim), ScenarioMismatch);
}

TEST_CASE("oracle discretization produces valid monotone curves") {
    Scenario sc = base_scenario();
    const Dataset data = generate(sc, 10);
    const auto snaps = snapshots_of(data);
    const std::vector<double> knots{24, 48, 72, 96, 120};
    const SurvivalCurve curve = oracle_to_curve(oracle_curve(sc, snaps.front()), knots);
    for (std::size_t k = 1; k < curve.cdf().size(); ++k)
        CHECK(curve.cdf()[k] >= curve.cdf()[k - 1]);
}

TEST_CASE("scenario validation") {
    Scenario sc = base_scenario();
    sc.beta = {1.0};  // wrong length
    CHECK_THROWS_AS(sc.validate(), DomainError);
    sc = base_scenario();
    sc.baseline_rate_per_hour = 0.0;
    CHECK_THROWS_AS(sc.validate(), DomainError);
    CHECK_THROWS_AS(generate(base_scenario(), 0), DomainError);
}
