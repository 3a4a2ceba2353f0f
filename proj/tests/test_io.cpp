#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "wrse/dataset_io.hpp"
#include "wrse/ensemble.hpp"
#include "wrse/parametric.hpp"
#include "wrse/serialize.hpp"
#include "wrse/synth.hpp"

using namespace wrse;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("wrse_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Scenario io_scenario() {
    Scenario sc;
    sc.d = 2;
    sc.beta = {0.6, -0.4};
    sc.baseline_rate_per_hour = 1.0 / 20.0;
    sc.censor_rate_per_hour = 1.0 / 50.0;
    sc.seed = 31;
    return sc;
}

}  // namespace

TEST_CASE("dataset files round-trip bit for bit") {
    TempDir tmp;
    const Dataset original = generate(io_scenario(), 60);
    save_dataset(original, tmp.path / "stays.csv", tmp.path / "features.csv");
    const Dataset loaded = load_dataset(tmp.path / "stays.csv", tmp.path / "features.csv");
    REQUIRE(loaded.stays.size() == original.stays.size());
    for (std::size_t i = 0; i < loaded.stays.size(); ++i) {
        CHECK(loaded.stays[i].stay_id == original.stays[i].stay_id);
        CHECK(loaded.stays[i].event_time_hours == original.stays[i].event_time_hours);
        CHECK(loaded.stays[i].censored == original.stays[i].censored);
        CHECK(loaded.stays[i].features.data == original.stays[i].features.data);
    }
}

TEST_CASE("unknown stay id in the features file is a hard error") {
    TempDir tmp;
    std::ofstream(tmp.path / "stays.csv") << "stay_id,event_time_hours,censored\nA,2.5,0\n";
    std::ofstream(tmp.path / "features.csv")
        << "stay_id,t_hours,f0\nA,0,1.0\nA,1,1.1\nA,2,1.2\nGHOST,0,9.9\n";
    CHECK_THROWS_AS(load_dataset(tmp.path / "stays.csv", tmp.path / "features.csv"),
                    DataFormatError);
}

TEST_CASE("header and value validation") {
    TempDir tmp;
    std::ofstream(tmp.path / "stays.csv") << "id,event,c\nA,2.5,0\n";
    std::ofstream(tmp.path / "features.csv") << "stay_id,t_hours,f0\n";
    CHECK_THROWS_AS(load_dataset(tmp.path / "stays.csv", tmp.path / "features.csv"),
                    DataFormatError);

    std::ofstream(tmp.path / "stays2.csv") << "stay_id,event_time_hours,censored\nA,2.5,2\n";
    CHECK_THROWS_AS(load_dataset(tmp.path / "stays2.csv", tmp.path / "features.csv"),
                    DataFormatError);

    std::ofstream(tmp.path / "stays3.csv") << "stay_id,event_time_hours,censored\nA,2.5,0\n";
    std::ofstream(tmp.path / "features3.csv") << "stay_id,t_hours,f0\nA,0,1.0\nA,2,1.2\n";
    CHECK_THROWS_AS(load_dataset(tmp.path / "stays3.csv", tmp.path / "features3.csv"),
                    DataFormatError);  // hole in the hourly grid

    CHECK_THROWS_AS(load_dataset(tmp.path / "nope.csv", tmp.path / "features.csv"),
                    DataFormatError);
}

TEST_CASE("missing feature rows for a stay are rejected") {
    TempDir tmp;
    std::ofstream(tmp.path / "stays.csv")
        << "stay_id,event_time_hours,censored\nA,1.5,0\nB,1.5,0\n";
    std::ofstream(tmp.path / "features.csv") << "stay_id,t_hours,f0\nA,0,1.0\nA,1,2.0\n";
    CHECK_THROWS_AS(load_dataset(tmp.path / "stays.csv", tmp.path / "features.csv"),
                    DataFormatError);
}

TEST_CASE("ensemble archives round-trip on disk") {
    TempDir tmp;
    const Scenario sc = io_scenario();
    const Dataset train = generate(sc, 80);
    Scenario vs = sc;
    vs.seed = 32;
    const Dataset valid = generate(vs, 30, SplitTag::Validation);
    WrseConfig cfg;
    cfg.gbt.max_trees = 12;
    const WrseModel model = fit_wrse(train, valid, weighted_horizons(0.5, 3), cfg);
    save_wrse(model, tmp.path / "model.bin");
    const WrseModel loaded = load_wrse(tmp.path / "model.bin");
    CHECK(serialize_wrse(loaded) == serialize_wrse(model));
    CHECK(loaded.grid.horizons_hours == model.grid.horizons_hours);

    // Corrupted magic is rejected.
    std::ofstream(tmp.path / "bad.bin", std::ios::binary) << "NOTMAGIC";
    CHECK_THROWS_AS(load_wrse(tmp.path / "bad.bin"), DataFormatError);
}

TEST_CASE("parametric archives round-trip on disk") {
    TempDir tmp;
    ParametricModel model;
    model.head = HeadKind::LogNormal;
    model.predictor = DenseNet(3, {4}, 2, 5);
    save_parametric(model, tmp.path / "p.bin");
    const ParametricModel loaded = load_parametric(tmp.path / "p.bin");
    CHECK(loaded.head == HeadKind::LogNormal);
    CHECK(loaded.predictor.params() == model.predictor.params());
    CHECK(loaded.predictor.sizes() == model.predictor.sizes());
    CHECK_THROWS_AS(load_parametric(tmp.path / "missing.bin"), DataFormatError);

    // Loading an ensemble archive as parametric fails cleanly.
    WrseModel wm;
    wm.grid.horizons_hours = {24.0};
    GbtModel gbt;
    gbt.n_features = 3;
    wm.classifiers.push_back(BinaryClassifier{gbt});
    wm.n_features = 3;
    save_wrse(wm, tmp.path / "w.bin");
    CHECK_THROWS_AS(load_parametric(tmp.path / "w.bin"), DataFormatError);
}
