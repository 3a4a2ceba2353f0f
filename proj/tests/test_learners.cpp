#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "wrse/learners.hpp"
#include "wrse/rng.hpp"

using namespace wrse;

namespace {

Snapshot snap(double y, bool censored, std::vector<double> x) {
    Snapshot s;
    s.stay_id = "s";
    s.t_hours = 0;
    s.x = std::move(x);
    s.y_hours = y;
    s.censored = censored;
    return s;
}

HorizonLabeledSet toy_set(std::size_t n, std::uint64_t seed,
                          double (*boundary)(double, double)) {
    // label 1 when boundary(x0, x1) > 0
    HorizonLabeledSet set;
    set.n_features = 2;
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = 2.0 * rng.uniform() - 1.0;
        const double x1 = 2.0 * rng.uniform() - 1.0;
        set.x.push_back(x0);
        set.x.push_back(x1);
        set.labels.push_back(boundary(x0, x1) > 0.0 ? 1.0 : 0.0);
        set.kept_indices.push_back(i);
    }
    return set;
}

double linear_boundary(double x0, double x1) { return x0 + x1; }
double xor_boundary(double x0, double x1) { return x0 * x1; }

double mean_log_loss(const BinaryClassifier& clf, const HorizonLabeledSet& set) {
    double acc = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i)
        acc += log_loss_term(clf.predict({set.x.data() + i * set.n_features, set.n_features}),
                             set.labels[i]);
    return acc / static_cast<double>(set.size());
}

double accuracy(const BinaryClassifier& clf, const HorizonLabeledSet& set) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double p = clf.predict({set.x.data() + i * set.n_features, set.n_features});
        if ((p > 0.5) == (set.labels[i] > 0.5)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(set.size());
}

}  // namespace

TEST_CASE("horizon labeling rules") {
    std::vector<Snapshot> snaps{snap(10, false, {0.0}), snap(30, true, {0.0}),
                                snap(10, true, {0.0})};
    const auto set = make_horizon_labels(snaps, 24.0);
    REQUIRE(set.size() == 2);
    CHECK(set.labels[0] == 1.0);          // died within horizon
    CHECK(set.labels[1] == 0.0);          // survived past horizon, censorship irrelevant
    CHECK(set.kept_indices == std::vector<std::size_t>{0, 1});  // censored-short excluded
}

TEST_CASE("horizon labeling throws when everything is excluded") {
    std::vector<Snapshot> snaps{snap(5, true, {0.0}), snap(7, true, {0.0})};
    CHECK_THROWS_AS(make_horizon_labels(snaps, 24.0), EmptyResult);
    CHECK_THROWS_AS(make_horizon_labels(snaps, 0.0), DomainError);
}

TEST_CASE("positives nest across horizons") {
    SplitMix64 rng(31);
    std::vector<Snapshot> snaps;
    for (int i = 0; i < 300; ++i)
        snaps.push_back(snap(0.5 + 100.0 * rng.uniform(), rng.uniform() < 0.4, {rng.normal()}));
    const double h1 = 12.0, h2 = 48.0;
    const auto set1 = make_horizon_labels(snaps, h1);
    const auto set2 = make_horizon_labels(snaps, h2);
    // Every snapshot positive at h1 must appear positive at h2.
    std::vector<bool> positive2(snaps.size(), false);
    for (std::size_t i = 0; i < set2.size(); ++i)
        if (set2.labels[i] == 1.0) positive2[set2.kept_indices[i]] = true;
    for (std::size_t i = 0; i < set1.size(); ++i)
        if (set1.labels[i] == 1.0) CHECK(positive2[set1.kept_indices[i]]);
}

TEST_CASE("gbt separates a linear toy problem") {
    const auto train = toy_set(200, 1, linear_boundary);
    const auto valid = toy_set(100, 2, linear_boundary);
    GbtConfig cfg;
    cfg.max_leaves = 8;
    cfg.max_trees = 300;
    cfg.learning_rate = 0.2;
    cfg.min_samples_leaf = 5;
    cfg.early_stop_patience = 30;
    const auto clf = train_gbt(train, valid, cfg);
    CHECK(mean_log_loss(clf, train) < 0.1);
    CHECK(accuracy(clf, valid) > 0.9);
}

TEST_CASE("gbt on single-class data degenerates to the prior") {
    HorizonLabeledSet set = toy_set(50, 3, linear_boundary);
    std::fill(set.labels.begin(), set.labels.end(), 1.0);
    const auto clf = train_gbt(set, set, GbtConfig::desk());
    const auto& model = std::get<GbtModel>(clf.model);
    CHECK(model.single_class);
    CHECK(model.trees.empty());
    CHECK(clf.predict(std::vector<double>{0.3, -0.2}) > 0.999);
}

TEST_CASE("gbt rejects max_trees = 0") {
    GbtConfig cfg;
    cfg.max_trees = 0;
    const auto set = toy_set(50, 4, linear_boundary);
    CHECK_THROWS_AS(train_gbt(set, set, cfg), DomainError);
}

TEST_CASE("gbt with zero learning rate never leaves the prior") {
    const auto train = toy_set(120, 5, linear_boundary);
    const auto valid = toy_set(60, 6, linear_boundary);
    GbtConfig cfg = GbtConfig::desk();
    cfg.learning_rate = 0.0;
    const auto clf = train_gbt(train, valid, cfg);
    double prior = 0.0;
    for (double y : train.labels) prior += y;
    prior /= static_cast<double>(train.size());
    SplitMix64 rng(7);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> x{rng.normal(), rng.normal()};
        CHECK(clf.predict(x) == Catch::Approx(prior).margin(1e-12));
    }
}

TEST_CASE("gbt with zero trees predicts sigmoid(base score)") {
    GbtModel model;
    model.n_features = 2;
    model.base_score = std::log(0.25 / 0.75);
    const BinaryClassifier clf{model};
    CHECK(clf.predict(std::vector<double>{1.0, -1.0}) == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("logistic learns a threshold rule") {
    HorizonLabeledSet train, valid;
    train.n_features = valid.n_features = 1;
    SplitMix64 rng(8);
    for (int i = 0; i < 400; ++i) {
        const double x = 4.0 * rng.uniform() - 2.0;
        auto& set = i < 300 ? train : valid;
        set.x.push_back(x);
        set.labels.push_back(x > 0.3 ? 1.0 : 0.0);
        set.kept_indices.push_back(set.labels.size() - 1);
    }
    LogisticConfig cfg;
    cfg.learning_rate = 1.0;
    cfg.max_epochs = 3000;
    cfg.patience = 50;
    const auto clf = train_logistic(train, valid, cfg);
    CHECK(accuracy(clf, valid) > 0.95);
}

TEST_CASE("untrained logistic predicts one half everywhere") {
    const auto set = toy_set(60, 9, linear_boundary);
    LogisticConfig cfg;
    cfg.max_epochs = 0;
    const auto clf = train_logistic(set, set, cfg);
    CHECK(clf.predict(std::vector<double>{0.7, -0.4}) == 0.5);
    CHECK(clf.predict(std::vector<double>{5.0, 5.0}) == 0.5);
}

TEST_CASE("huge l2 pins a balanced logistic model at the prior") {
    // Balanced labels: as l2 grows the weights collapse and predictions sit
    // at the 0.5 prior (logit zero).
    HorizonLabeledSet set;
    set.n_features = 1;
    for (int i = 0; i < 100; ++i) {
        set.x.push_back(i < 50 ? -1.0 : 1.0);
        set.labels.push_back(i < 50 ? 0.0 : 1.0);
        set.kept_indices.push_back(static_cast<std::size_t>(i));
    }
    LogisticConfig cfg;
    cfg.learning_rate = 5e-7;  // keep lr * l2 below 1 so descent stays stable
    cfg.l2 = 1e6;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    const auto clf = train_logistic(set, set, cfg);
    const auto& model = std::get<LogisticModel>(clf.model);
    CHECK(std::abs(model.weights[0]) < 1e-4);
    CHECK(clf.predict(std::vector<double>{0.9}) == Catch::Approx(0.5).margin(1e-3));
}

TEST_CASE("ffnet has nonlinear capacity (xor pattern)") {
    const auto train = toy_set(400, 10, xor_boundary);
    const auto valid = toy_set(200, 11, xor_boundary);
    FfnetConfig cfg;
    cfg.hidden_sizes = {16, 16};
    cfg.learning_rate = 0.02;
    cfg.max_epochs = 800;
    cfg.patience = 100;
    cfg.seed = 3;
    const auto clf = train_ffnet(train, valid, cfg);
    CHECK(accuracy(clf, train) > 0.9);
}

TEST_CASE("ffnet with no hidden layers behaves like logistic regression") {
    const auto train = toy_set(300, 12, linear_boundary);
    const auto valid = toy_set(150, 13, linear_boundary);
    FfnetConfig cfg;
    cfg.hidden_sizes = {};
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 1500;
    cfg.patience = 50;
    const auto clf = train_ffnet(train, valid, cfg);
    CHECK(accuracy(clf, valid) > 0.9);
}

TEST_CASE("predicted probabilities stay within [0, 1]") {
    SplitMix64 rng(14);
    const auto train = toy_set(80, 15, linear_boundary);
    const auto valid = toy_set(40, 16, linear_boundary);
    GbtConfig gcfg = GbtConfig::desk();
    gcfg.max_trees = 30;
    const std::vector<BinaryClassifier> models{
        train_gbt(train, valid, gcfg), train_logistic(train, valid, {}),
        train_ffnet(train, valid, FfnetConfig{{8}, 0.05, 0.0, 50, 10, 4})};
    for (const auto& clf : models) {
        for (int i = 0; i < 200; ++i) {
            const std::vector<double> x{20.0 * rng.normal(), 20.0 * rng.normal()};
            const double p = predict_proba(clf, x);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("dimension mismatch is rejected at prediction time") {
    const auto set = toy_set(60, 17, linear_boundary);
    const auto clf = train_logistic(set, set, {});
    CHECK_THROWS_AS(clf.predict(std::vector<double>{1.0, 2.0, 3.0}), DimensionMismatch);
}
