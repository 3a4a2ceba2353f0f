#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wrse/ensemble.hpp"
#include "wrse/rng.hpp"
#include "wrse/serialize.hpp"
#include "wrse/synth.hpp"

using namespace wrse;

namespace {

BinaryClassifier constant_classifier(double p, std::uint32_t d) {
    GbtModel m;
    m.n_features = d;
    m.base_score = std::log(p / (1.0 - p));
    return BinaryClassifier{std::move(m)};
}

WrseModel constant_model(const std::vector<double>& levels) {
    WrseModel model;
    model.grid.horizons_hours.resize(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k)
        model.grid.horizons_hours[k] = 24.0 * static_cast<double>(k + 1);
    model.n_features = 1;
    for (double p : levels) model.classifiers.push_back(constant_classifier(p, 1));
    return model;
}

Scenario small_scenario() {
    Scenario sc;
    sc.d = 2;
    sc.beta = {0.8, -0.5};
    sc.baseline_rate_per_hour = 1.0 / 30.0;
    sc.censor_rate_per_hour = 1.0 / 60.0;
    sc.seed = 17;
    return sc;
}

}  // namespace

TEST_CASE("raw base outputs are projected onto the monotone cone") {
    const WrseModel model = constant_model({0.3, 0.2, 0.5});
    const SurvivalCurve curve = predict_cdf(model, std::vector<double>{0.0});
    REQUIRE(curve.cdf().size() == 3);
    CHECK(curve.cdf()[0] == Catch::Approx(0.25).margin(1e-9));
    CHECK(curve.cdf()[1] == Catch::Approx(0.25).margin(1e-9));
    CHECK(curve.cdf()[2] == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("already monotone base outputs pass through unchanged") {
    const WrseModel model = constant_model({0.1, 0.4, 0.8});
    const SurvivalCurve curve = predict_cdf(model, std::vector<double>{0.0});
    CHECK(curve.cdf()[0] == Catch::Approx(0.1).margin(1e-9));
    CHECK(curve.cdf()[1] == Catch::Approx(0.4).margin(1e-9));
    CHECK(curve.cdf()[2] == Catch::Approx(0.8).margin(1e-9));
}

TEST_CASE("curve evaluation at a knot returns the projected value exactly") {
    const WrseModel model = constant_model({0.3, 0.2, 0.5});
    const SurvivalCurve curve = predict_cdf(model, std::vector<double>{0.0});
    for (std::size_t k = 0; k < curve.knots().size(); ++k)
        CHECK(curve.cdf_at(curve.knots()[k]) == curve.cdf()[k]);
}

TEST_CASE("every predicted curve satisfies the monotone invariant") {
    SplitMix64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> levels(1 + rng.next() % 12);
        for (auto& p : levels) p = 0.01 + 0.98 * rng.uniform();
        const SurvivalCurve curve =
            predict_cdf(constant_model(levels), std::vector<double>{0.0});
        for (std::size_t k = 1; k < curve.cdf().size(); ++k)
            CHECK(curve.cdf()[k] >= curve.cdf()[k - 1]);
    }
}

TEST_CASE("monotone projection never moves further from any monotone vector") {
    SplitMix64 rng(24);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.next() % 10;
        std::vector<double> raw(n), monotone(n);
        for (auto& v : raw) v = rng.uniform();
        monotone[0] = rng.uniform();
        for (std::size_t i = 1; i < n; ++i) monotone[i] = monotone[i - 1] + 0.2 * rng.uniform();
        const auto projected = pava(raw).values;
        double d_raw = 0.0, d_proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d_raw += (raw[i] - monotone[i]) * (raw[i] - monotone[i]);
            d_proj += (projected[i] - monotone[i]) * (projected[i] - monotone[i]);
        }
        CHECK(d_proj <= d_raw + 1e-12);
    }
}

TEST_CASE("K=1 reduces to a single fixed-horizon classifier") {
    const Scenario sc = small_scenario();
    const Dataset train = generate(sc, 120);
    Scenario valid_sc = sc;
    valid_sc.seed = 18;
    const Dataset valid = generate(valid_sc, 40, SplitTag::Validation);
    WrseConfig cfg;
    cfg.gbt.max_trees = 20;
    const HorizonGrid grid = weighted_horizons(0.5, 1);
    const WrseModel model = fit_wrse(train, valid, grid, cfg);
    REQUIRE(model.k() == 1);
    const std::vector<double> x{0.3, -0.7};
    const double p = model.classifiers[0].predict(x);
    const SurvivalCurve curve = predict_cdf(model, x);
    CHECK(curve.cdf()[0] == p);
}

TEST_CASE("sequential and concurrent training produce bit-identical models") {
    const Scenario sc = small_scenario();
    const Dataset train = generate(sc, 150);
    Scenario valid_sc = sc;
    valid_sc.seed = 19;
    const Dataset valid = generate(valid_sc, 50, SplitTag::Validation);
    WrseConfig cfg;
    cfg.gbt.max_trees = 25;
    const HorizonGrid grid = weighted_horizons(0.5, 4);
    const WrseModel sequential = fit_wrse(train, valid, grid, cfg, 1);
    const WrseModel concurrent = fit_wrse(train, valid, grid, cfg, 4);
    CHECK(serialize_wrse(sequential) == serialize_wrse(concurrent));
}

TEST_CASE("parallel batch prediction matches sequential") {
    const Scenario sc = small_scenario();
    const Dataset data = generate(sc, 80);
    Scenario valid_sc = sc;
    valid_sc.seed = 20;
    const Dataset valid = generate(valid_sc, 30, SplitTag::Validation);
    WrseConfig cfg;
    cfg.gbt.max_trees = 15;
    const WrseModel model = fit_wrse(data, valid, weighted_horizons(0.5, 3), cfg);
    const auto snaps = snapshots_of(valid);
    const auto seq = predict_batch(model, snaps, 1);
    const auto par = predict_batch(model, snaps, 4);
    REQUIRE(seq.size() == par.size());
    for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i].cdf() == par[i].cdf());
}

TEST_CASE("empty batch yields empty output") {
    const WrseModel model = constant_model({0.2});
    CHECK(predict_batch(model, {}).empty());
}

TEST_CASE("archive round trip reproduces predictions bit for bit") {
    const Scenario sc = small_scenario();
    const Dataset train = generate(sc, 100);
    Scenario valid_sc = sc;
    valid_sc.seed = 21;
    const Dataset valid = generate(valid_sc, 40, SplitTag::Validation);
    for (BaseKind base : {BaseKind::GradientBoostedTrees, BaseKind::Logistic,
                          BaseKind::FeedForward}) {
        WrseConfig cfg;
        cfg.base_kind = base;
        cfg.gbt.max_trees = 10;
        cfg.logistic.max_epochs = 50;
        cfg.ffnet.max_epochs = 30;
        cfg.ffnet.hidden_sizes = {6};
        cfg.ffnet.learning_rate = 0.01;
        const WrseModel model = fit_wrse(train, valid, weighted_horizons(0.5, 3), cfg);
        const WrseModel reloaded = deserialize_wrse(serialize_wrse(model));
        const auto snaps = snapshots_of(valid);
        for (std::size_t i = 0; i < std::min<std::size_t>(snaps.size(), 50); ++i) {
            const auto a = predict_cdf(model, snaps[i].x);
            const auto b = predict_cdf(reloaded, snaps[i].x);
            CHECK(a.cdf() == b.cdf());
        }
        CHECK(serialize_wrse(model) == serialize_wrse(reloaded));
    }
}

TEST_CASE("fit_wrse rejects empty training data and mismatched predictions") {
    const WrseModel model = constant_model({0.2, 0.4});
    CHECK_THROWS_AS(predict_cdf(model, std::vector<double>{1.0, 2.0}), DimensionMismatch);
    Dataset empty;
    CHECK_THROWS_AS(fit_wrse(empty, empty, weighted_horizons(0.5, 2), {}), EmptyInput);
}

TEST_CASE("learner failures carry the horizon annotation") {
    // A horizon so short that every stay is censored before it: every label
    // build fails and the error names the horizon.
    Scenario sc = small_scenario();
    sc.censor_rate_per_hour = 10.0;  // censor almost immediately
    sc.baseline_rate_per_hour = 1e-6;
    const Dataset train = generate(sc, 50);
    try {
        fit_wrse(train, train, even_horizons(1, 30.0), {});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("horizon 1") != std::string::npos);
    }
}
