#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wrse/ensemble.hpp"
#include "wrse/errors.hpp"
#include "wrse/metrics.hpp"
#include "wrse/parametric.hpp"
#include "wrse/synth.hpp"

namespace wrse {

// Experiment configuration: one JSON document with blocks
//   scenario | split | models | metrics | runtime
// Exactly one data source must be given inside "scenario": either a synthetic
// scenario ("kind" + parameters) or a file pair ("stays_file", "features_file").
// Validation failures throw ConfigError with the offending field path.

struct SplitConfig {
    int n_splits = 5;
    std::vector<double> fractions{0.6, 0.2, 0.2};  // train / validation / test
    double window_fraction = 0.7;  // share of the cohort each rolled split sees
};

struct WrseModelConfig {
    bool enabled = true;
    double gamma = 0.5;
    int k = 10;
    SpacingKind spacing = SpacingKind::Weighted;
    double span_days = 10.0;
    BaseKind base_learner = BaseKind::GradientBoostedTrees;
    GbtConfig gbt = GbtConfig::desk();
    LogisticConfig logistic;
    FfnetConfig ffnet;
    bool recalibrate = false;  // opt-in; raw ensemble output is the default

    HorizonGrid grid() const {
        return spacing == SpacingKind::Weighted ? weighted_horizons(gamma, k)
                                                : even_horizons(k, span_days);
    }
};

struct ParametricModelConfig {
    HeadKind head = HeadKind::Exponential;
    ParametricConfig training;
    std::string label() const {
        return head == HeadKind::Exponential ? "exponential" : "lognormal";
    }
};

struct SweepConfig {
    std::vector<std::string> spacings{"even", "weighted:0.3", "weighted:0.5", "weighted:0.8"};
    std::vector<int> ks{5, 7, 10};
    std::vector<std::string> bases{"gbt"};
};

struct ImportanceConfig {
    int n_repeats = 5;
    std::vector<double> gammas{0.3, 0.8};  // the two headline aggregations
};

struct ExperimentConfig {
    // data source
    std::optional<Scenario> scenario;
    std::size_t n_stays = 2000;
    std::optional<std::filesystem::path> stays_file;
    std::optional<std::filesystem::path> features_file;

    SplitConfig split;
    std::optional<WrseModelConfig> wrse;
    std::vector<ParametricModelConfig> parametric;
    std::vector<std::string> reference;  // oracle | random | anti_oracle | constant
    MetricConfig metrics;
    SweepConfig sweep;
    ImportanceConfig importance;

    int workers = 1;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "out";
    bool benchmark_sequential = false;  // also time a 1-worker ensemble fit
};

namespace cfg_detail {

inline const nlohmann::json* find(const nlohmann::json& j, const std::string& key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline double number_at(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

inline int int_at(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return j.get<int>();
}

inline std::string string_at(const nlohmann::json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
}

inline double gamma_at(const nlohmann::json& j, const std::string& path) {
    const double g = number_at(j, path);
    if (!(g > 0.0 && g < 1.0))
        throw ConfigError(path + ": gamma must lie in the open interval (0, 1), got " +
                          std::to_string(g));
    return g;
}

inline void parse_scenario(const nlohmann::json& j, ExperimentConfig& out) {
    const bool has_kind = find(j, "kind") != nullptr;
    const bool has_files = find(j, "stays_file") != nullptr || find(j, "features_file") != nullptr;
    if (has_kind == has_files)
        throw ConfigError(
            "scenario: exactly one data source required (either 'kind' or "
            "'stays_file'+'features_file')");
    if (has_files) {
        if (!find(j, "stays_file") || !find(j, "features_file"))
            throw ConfigError("scenario: both stays_file and features_file are required");
        out.stays_file = string_at(*find(j, "stays_file"), "scenario.stays_file");
        out.features_file = string_at(*find(j, "features_file"), "scenario.features_file");
        return;
    }
    Scenario sc;
    const std::string kind = string_at(*find(j, "kind"), "scenario.kind");
    if (kind == "exponential_ph")
        sc.kind = ScenarioKind::ExponentialPH;
    else if (kind == "weibull_ph")
        sc.kind = ScenarioKind::WeibullPH;
    else if (kind == "time_varying")
        sc.kind = ScenarioKind::TimeVaryingHazard;
    else
        throw ConfigError("scenario.kind: unknown kind '" + kind + "'");
    if (const auto* v = find(j, "d")) sc.d = static_cast<std::size_t>(int_at(*v, "scenario.d"));
    if (const auto* v = find(j, "beta")) {
        if (!v->is_array()) throw ConfigError("scenario.beta: expected an array");
        sc.beta.clear();
        for (std::size_t i = 0; i < v->size(); ++i)
            sc.beta.push_back(number_at((*v)[i], "scenario.beta[" + std::to_string(i) + "]"));
    } else {
        sc.beta.assign(sc.d, 0.0);
    }
    if (const auto* v = find(j, "baseline_rate_per_hour"))
        sc.baseline_rate_per_hour = number_at(*v, "scenario.baseline_rate_per_hour");
    if (const auto* v = find(j, "weibull_shape"))
        sc.weibull_shape = number_at(*v, "scenario.weibull_shape");
    if (const auto* v = find(j, "weibull_scale_hours"))
        sc.weibull_scale_hours = number_at(*v, "scenario.weibull_scale_hours");
    if (const auto* v = find(j, "censor_rate_per_hour"))
        sc.censor_rate_per_hour = number_at(*v, "scenario.censor_rate_per_hour");
    if (const auto* v = find(j, "ar1_rho")) sc.ar1_rho = number_at(*v, "scenario.ar1_rho");
    if (const auto* v = find(j, "seed"))
        sc.seed = static_cast<std::uint64_t>(number_at(*v, "scenario.seed"));
    if (const auto* v = find(j, "n_stays")) {
        const int n = int_at(*v, "scenario.n_stays");
        if (n < 1) throw ConfigError("scenario.n_stays: must be >= 1");
        out.n_stays = static_cast<std::size_t>(n);
    }
    try {
        sc.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    out.scenario = sc;
}

inline void parse_split(const nlohmann::json& j, SplitConfig& out) {
    if (const auto* v = find(j, "n_splits")) {
        out.n_splits = int_at(*v, "split.n_splits");
        if (out.n_splits < 1) throw ConfigError("split.n_splits: must be >= 1");
    }
    if (const auto* v = find(j, "fractions")) {
        if (!v->is_array() || v->size() != 3)
            throw ConfigError("split.fractions: expected [train, validation, test]");
        for (std::size_t i = 0; i < 3; ++i)
            out.fractions[i] = number_at((*v)[i], "split.fractions[" + std::to_string(i) + "]");
        double total = 0.0;
        for (double f : out.fractions) {
            if (!(f > 0.0)) throw ConfigError("split.fractions: every fraction must be positive");
            total += f;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split.fractions: must sum to 1");
    }
    if (const auto* v = find(j, "window_fraction")) {
        out.window_fraction = number_at(*v, "split.window_fraction");
        if (!(out.window_fraction > 0.0 && out.window_fraction <= 1.0))
            throw ConfigError("split.window_fraction: must lie in (0, 1]");
    }
}

inline void parse_gbt(const nlohmann::json& j, const std::string& prefix, GbtConfig& out) {
    if (const auto* v = find(j, "max_leaves")) out.max_leaves = int_at(*v, prefix + ".max_leaves");
    if (const auto* v = find(j, "max_trees")) out.max_trees = int_at(*v, prefix + ".max_trees");
    if (const auto* v = find(j, "learning_rate"))
        out.learning_rate = number_at(*v, prefix + ".learning_rate");
    if (const auto* v = find(j, "min_samples_leaf"))
        out.min_samples_leaf = int_at(*v, prefix + ".min_samples_leaf");
    if (const auto* v = find(j, "early_stop_patience"))
        out.early_stop_patience = int_at(*v, prefix + ".early_stop_patience");
    try {
        out.validate();
    } catch (const Error& e) {
        throw ConfigError(prefix + ": " + e.what());
    }
}

inline void parse_wrse(const nlohmann::json& j, WrseModelConfig& out) {
    if (const auto* v = find(j, "gamma")) out.gamma = gamma_at(*v, "models.wrse.gamma");
    if (const auto* v = find(j, "k")) {
        out.k = int_at(*v, "models.wrse.k");
        if (out.k < 1) throw ConfigError("models.wrse.k: must be >= 1");
    }
    if (const auto* v = find(j, "spacing")) {
        const std::string s = string_at(*v, "models.wrse.spacing");
        if (s == "weighted")
            out.spacing = SpacingKind::Weighted;
        else if (s == "even")
            out.spacing = SpacingKind::Even;
        else
            throw ConfigError("models.wrse.spacing: expected 'weighted' or 'even'");
    }
    if (const auto* v = find(j, "span_days")) {
        out.span_days = number_at(*v, "models.wrse.span_days");
        if (!(out.span_days > 0.0)) throw ConfigError("models.wrse.span_days: must be positive");
    }
    if (const auto* v = find(j, "base_learner")) {
        const std::string s = string_at(*v, "models.wrse.base_learner");
        if (s == "gbt")
            out.base_learner = BaseKind::GradientBoostedTrees;
        else if (s == "logistic")
            out.base_learner = BaseKind::Logistic;
        else if (s == "ffnet")
            out.base_learner = BaseKind::FeedForward;
        else
            throw ConfigError("models.wrse.base_learner: expected gbt, logistic, or ffnet");
    }
    if (const auto* v = find(j, "preset")) {
        const std::string s = string_at(*v, "models.wrse.preset");
        if (s == "paper")
            out.gbt = GbtConfig::paper();
        else if (s == "desk")
            out.gbt = GbtConfig::desk();
        else
            throw ConfigError("models.wrse.preset: expected 'paper' or 'desk'");
    }
    if (const auto* v = find(j, "gbt")) parse_gbt(*v, "models.wrse.gbt", out.gbt);
    if (const auto* v = find(j, "recalibrate")) {
        if (!v->is_boolean()) throw ConfigError("models.wrse.recalibrate: expected a boolean");
        out.recalibrate = v->get<bool>();
    }
    if (const auto* v = find(j, "logistic")) {
        if (const auto* lr = find(*v, "learning_rate"))
            out.logistic.learning_rate = number_at(*lr, "models.wrse.logistic.learning_rate");
        if (const auto* l2 = find(*v, "l2")) out.logistic.l2 = number_at(*l2, "models.wrse.logistic.l2");
        if (const auto* me = find(*v, "max_epochs"))
            out.logistic.max_epochs = int_at(*me, "models.wrse.logistic.max_epochs");
        if (const auto* pa = find(*v, "patience"))
            out.logistic.patience = int_at(*pa, "models.wrse.logistic.patience");
    }
    if (const auto* v = find(j, "ffnet")) {
        if (const auto* hs = find(*v, "hidden_sizes")) {
            if (!hs->is_array()) throw ConfigError("models.wrse.ffnet.hidden_sizes: expected an array");
            out.ffnet.hidden_sizes.clear();
            for (const auto& h : *hs)
                out.ffnet.hidden_sizes.push_back(
                    static_cast<std::size_t>(int_at(h, "models.wrse.ffnet.hidden_sizes[]")));
        }
        if (const auto* lr = find(*v, "learning_rate"))
            out.ffnet.learning_rate = number_at(*lr, "models.wrse.ffnet.learning_rate");
        if (const auto* l2 = find(*v, "l2")) out.ffnet.l2 = number_at(*l2, "models.wrse.ffnet.l2");
        if (const auto* me = find(*v, "max_epochs"))
            out.ffnet.max_epochs = int_at(*me, "models.wrse.ffnet.max_epochs");
        if (const auto* pa = find(*v, "patience"))
            out.ffnet.patience = int_at(*pa, "models.wrse.ffnet.patience");
    }
}

inline void parse_parametric_entry(const nlohmann::json& j, const std::string& prefix,
                                   ParametricModelConfig& out) {
    if (const auto* v = find(j, "head")) {
        const std::string s = string_at(*v, prefix + ".head");
        if (s == "exponential")
            out.head = HeadKind::Exponential;
        else if (s == "lognormal")
            out.head = HeadKind::LogNormal;
        else
            throw ConfigError(prefix + ".head: expected 'exponential' or 'lognormal'");
    }
    if (const auto* v = find(j, "predictor")) {
        const std::string s = string_at(*v, prefix + ".predictor");
        if (s == "linear")
            out.training.hidden_sizes.clear();
        else if (s == "ffnet")
            out.training.hidden_sizes = {50, 50};
        else
            throw ConfigError(prefix + ".predictor: expected 'linear' or 'ffnet'");
    }
    if (const auto* v = find(j, "hidden_sizes")) {
        if (!v->is_array()) throw ConfigError(prefix + ".hidden_sizes: expected an array");
        out.training.hidden_sizes.clear();
        for (const auto& h : *v)
            out.training.hidden_sizes.push_back(
                static_cast<std::size_t>(int_at(h, prefix + ".hidden_sizes[]")));
    }
    if (const auto* v = find(j, "learning_rate"))
        out.training.learning_rate = number_at(*v, prefix + ".learning_rate");
    if (const auto* v = find(j, "l2")) out.training.l2 = number_at(*v, prefix + ".l2");
    if (const auto* v = find(j, "max_epochs"))
        out.training.max_epochs = int_at(*v, prefix + ".max_epochs");
    if (const auto* v = find(j, "patience")) out.training.patience = int_at(*v, prefix + ".patience");
    if (const auto* v = find(j, "crps_points"))
        out.training.crps_points = int_at(*v, prefix + ".crps_points");
    try {
        out.training.validate();
    } catch (const Error& e) {
        throw ConfigError(prefix + ": " + e.what());
    }
}

inline void parse_metrics(const nlohmann::json& j, MetricConfig& out) {
    if (const auto* v = find(j, "gammas")) {
        if (!v->is_array() || v->empty()) throw ConfigError("metrics.gammas: expected a nonempty array");
        out.gammas.clear();
        for (std::size_t i = 0; i < v->size(); ++i)
            out.gammas.push_back(gamma_at((*v)[i], "metrics.gammas[" + std::to_string(i) + "]"));
    }
    if (const auto* v = find(j, "horizons_days")) {
        if (!v->is_array() || v->empty())
            throw ConfigError("metrics.horizons_days: expected a nonempty array");
        out.horizon_hours.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            const double d = number_at((*v)[i], "metrics.horizons_days[" + std::to_string(i) + "]");
            if (!(d > 0.0)) throw ConfigError("metrics.horizons_days: horizons must be positive");
            out.horizon_hours.push_back(d * kHoursPerDay);
        }
    }
    if (const auto* v = find(j, "n_bins")) {
        out.n_bins = int_at(*v, "metrics.n_bins");
        if (out.n_bins < 1) throw ConfigError("metrics.n_bins: must be >= 1");
    }
    if (const auto* v = find(j, "tie_mode")) {
        const std::string s = string_at(*v, "metrics.tie_mode");
        if (s == "strict")
            out.tie_mode = TieMode::Strict;
        else if (s == "half")
            out.tie_mode = TieMode::HalfCredit;
        else
            throw ConfigError("metrics.tie_mode: expected 'strict' or 'half'");
    }
}

inline void parse_sweep(const nlohmann::json& j, SweepConfig& out) {
    if (const auto* v = find(j, "spacings")) {
        if (!v->is_array() || v->empty()) throw ConfigError("sweep.spacings: expected a nonempty array");
        out.spacings.clear();
        for (const auto& s : *v) out.spacings.push_back(string_at(s, "sweep.spacings[]"));
    }
    if (const auto* v = find(j, "ks")) {
        if (!v->is_array() || v->empty()) throw ConfigError("sweep.ks: expected a nonempty array");
        out.ks.clear();
        for (const auto& k : *v) {
            out.ks.push_back(int_at(k, "sweep.ks[]"));
            if (out.ks.back() < 1) throw ConfigError("sweep.ks: every K must be >= 1");
        }
    }
    if (const auto* v = find(j, "bases")) {
        if (!v->is_array() || v->empty()) throw ConfigError("sweep.bases: expected a nonempty array");
        out.bases.clear();
        for (const auto& b : *v) {
            const std::string s = string_at(b, "sweep.bases[]");
            if (s != "gbt" && s != "logistic" && s != "ffnet")
                throw ConfigError("sweep.bases: expected gbt, logistic, or ffnet");
            out.bases.push_back(s);
        }
    }
}

}  // namespace cfg_detail

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    using namespace cfg_detail;
    ExperimentConfig out;
    const auto* scenario = find(j, "scenario");
    if (!scenario) throw ConfigError("scenario: block is required");
    parse_scenario(*scenario, out);
    if (const auto* v = find(j, "split")) parse_split(*v, out.split);
    if (const auto* models = find(j, "models")) {
        if (const auto* v = find(*models, "wrse")) {
            WrseModelConfig wc;
            parse_wrse(*v, wc);
            out.wrse = wc;
        }
        if (const auto* v = find(*models, "parametric")) {
            if (!v->is_array()) throw ConfigError("models.parametric: expected an array");
            for (std::size_t i = 0; i < v->size(); ++i) {
                ParametricModelConfig pc;
                parse_parametric_entry((*v)[i], "models.parametric[" + std::to_string(i) + "]", pc);
                out.parametric.push_back(std::move(pc));
            }
        }
        if (const auto* v = find(*models, "reference")) {
            if (!v->is_array()) throw ConfigError("models.reference: expected an array");
            for (const auto& r : *v) {
                const std::string s = string_at(r, "models.reference[]");
                if (s != "oracle" && s != "random" && s != "anti_oracle" && s != "constant")
                    throw ConfigError(
                        "models.reference: expected oracle, random, anti_oracle, or constant");
                if (!out.scenario)
                    throw ConfigError("models.reference: requires a synthetic scenario data source");
                out.reference.push_back(s);
            }
        }
    }
    if (const auto* v = find(j, "metrics")) parse_metrics(*v, out.metrics);
    if (const auto* v = find(j, "sweep")) parse_sweep(*v, out.sweep);
    if (const auto* v = find(j, "importance")) {
        if (const auto* n = find(*v, "n_repeats")) {
            out.importance.n_repeats = int_at(*n, "importance.n_repeats");
            if (out.importance.n_repeats < 1)
                throw ConfigError("importance.n_repeats: must be >= 1");
        }
        if (const auto* g = find(*v, "gammas")) {
            if (!g->is_array() || g->empty())
                throw ConfigError("importance.gammas: expected a nonempty array");
            out.importance.gammas.clear();
            for (std::size_t i = 0; i < g->size(); ++i)
                out.importance.gammas.push_back(
                    gamma_at((*g)[i], "importance.gammas[" + std::to_string(i) + "]"));
        }
    }
    if (const auto* runtime = find(j, "runtime")) {
        if (const auto* v = find(*runtime, "workers")) {
            out.workers = int_at(*v, "runtime.workers");
            if (out.workers < 1) throw ConfigError("runtime.workers: must be >= 1");
        }
        if (const auto* v = find(*runtime, "seed"))
            out.seed = static_cast<std::uint64_t>(number_at(*v, "runtime.seed"));
        if (const auto* v = find(*runtime, "out_dir"))
            out.out_dir = string_at(*v, "runtime.out_dir");
        if (const auto* v = find(*runtime, "benchmark_sequential")) {
            if (!v->is_boolean())
                throw ConfigError("runtime.benchmark_sequential: expected a boolean");
            out.benchmark_sequential = v->get<bool>();
        }
    }
    return out;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    return parse_experiment_config(j);
}

}  // namespace wrse
