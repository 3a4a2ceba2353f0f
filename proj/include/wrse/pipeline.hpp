#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wrse/config.hpp"
#include "wrse/core.hpp"
#include "wrse/dataset_io.hpp"
#include "wrse/ensemble.hpp"
#include "wrse/errors.hpp"
#include "wrse/importance.hpp"
#include "wrse/isotonic.hpp"
#include "wrse/metrics.hpp"
#include "wrse/parametric.hpp"
#include "wrse/report_io.hpp"
#include "wrse/rng.hpp"
#include "wrse/serialize.hpp"
#include "wrse/synth.hpp"

namespace wrse {

// ---------------------------------------------------------------------------
// temporal splits
// ---------------------------------------------------------------------------

/// Index ranges of one temporal split: [begin, train_end) train,
/// [train_end, valid_end) validation, [valid_end, end) test. Stays are kept
/// in admission order, so every test stay starts after every training stay.
struct SplitIndices {
    std::size_t begin = 0, train_end = 0, valid_end = 0, end = 0;
};

/// Rolls a fixed-size window across the admission-ordered cohort, one window
/// per replicate, and cuts each window at the configured fractions. A single
/// replicate uses the whole cohort.
inline std::vector<SplitIndices> temporal_splits(std::size_t n_stays, const SplitConfig& cfg) {
    if (n_stays < 3) throw ConfigError("split: need at least 3 stays");
    const std::size_t window =
        cfg.n_splits == 1
            ? n_stays
            : std::max<std::size_t>(3, static_cast<std::size_t>(
                                           cfg.window_fraction * static_cast<double>(n_stays)));
    std::vector<SplitIndices> splits;
    for (int r = 0; r < cfg.n_splits; ++r) {
        const std::size_t offset =
            cfg.n_splits == 1
                ? 0
                : (n_stays - window) * static_cast<std::size_t>(r) /
                      static_cast<std::size_t>(cfg.n_splits - 1);
        SplitIndices s;
        s.begin = offset;
        s.end = offset + window;
        s.train_end = offset + static_cast<std::size_t>(cfg.fractions[0] * static_cast<double>(window));
        s.valid_end = s.train_end + static_cast<std::size_t>(cfg.fractions[1] * static_cast<double>(window));
        if (s.train_end <= s.begin || s.valid_end <= s.train_end || s.end <= s.valid_end)
            throw ConfigError("split: window too small for the requested fractions");
        splits.push_back(s);
    }
    return splits;
}

inline Dataset subset(const Dataset& full, std::size_t lo, std::size_t hi, SplitTag tag) {
    Dataset out;
    out.split_tag = tag;
    out.stays.assign(full.stays.begin() + static_cast<std::ptrdiff_t>(lo),
                     full.stays.begin() + static_cast<std::ptrdiff_t>(hi));
    return out;
}

inline Dataset load_or_generate(const ExperimentConfig& cfg) {
    if (cfg.scenario) return generate(*cfg.scenario, cfg.n_stays, SplitTag::Train, cfg.workers);
    return load_dataset(*cfg.stays_file, *cfg.features_file);
}

// ---------------------------------------------------------------------------
// reference predictors
// ---------------------------------------------------------------------------

/// Curves for the ground-truth oracle on a knot grid.
inline std::vector<SurvivalCurve> oracle_curves(const Scenario& sc,
                                                const std::vector<Snapshot>& snaps,
                                                std::span<const double> knots, int workers = 1) {
    std::vector<SurvivalCurve> curves(snaps.size());
    parallel_chunks(snaps.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            curves[i] = oracle_to_curve(oracle_curve(sc, snaps[i]), knots);
    });
    return curves;
}

/// Anti-oracle: reverses the oracle's risk ranking at every horizon by
/// negating the log-relative-risk. Under strict tie handling the weighted
/// discrimination index of this predictor is exactly one minus the oracle's,
/// the same value the literal survival complement would produce, while every
/// curve stays a valid distribution.
inline std::vector<SurvivalCurve> anti_oracle_curves(const Scenario& sc,
                                                     const std::vector<Snapshot>& snaps,
                                                     std::span<const double> knots,
                                                     int workers = 1) {
    Scenario reversed = sc;
    for (double& b : reversed.beta) b = -b;
    return oracle_curves(reversed, snaps, knots, workers);
}

/// Flat random curve per snapshot: F(tau) = u_i everywhere.
inline std::vector<SurvivalCurve> random_curves(const std::vector<Snapshot>& snaps,
                                                std::span<const double> knots,
                                                std::uint64_t seed) {
    std::vector<SurvivalCurve> curves(snaps.size());
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        SplitMix64 rng = SplitMix64::stream(seed, i);
        const double u = rng.uniform();
        curves[i] = SurvivalCurve(std::vector<double>(knots.begin(), knots.end()),
                                  std::vector<double>(knots.size(), u));
    }
    return curves;
}

/// The same flat curve for every snapshot; all comparisons tie.
inline std::vector<SurvivalCurve> constant_curves(std::size_t n, std::span<const double> knots,
                                                  double level = 0.5) {
    std::vector<SurvivalCurve> curves(n);
    for (std::size_t i = 0; i < n; ++i)
        curves[i] = SurvivalCurve(std::vector<double>(knots.begin(), knots.end()),
                                  std::vector<double>(knots.size(), level));
    return curves;
}

inline std::vector<EvalInstance> make_eval_instances(const std::vector<Snapshot>& snaps,
                                                     std::vector<SurvivalCurve> curves) {
    if (snaps.size() != curves.size()) throw LengthMismatch("eval: snapshot/curve count mismatch");
    std::vector<EvalInstance> instances(snaps.size());
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        instances[i].curve = std::move(curves[i]);
        instances[i].y_hours = snaps[i].y_hours;
        instances[i].censored = snaps[i].censored;
    }
    return instances;
}

// ---------------------------------------------------------------------------
// post-hoc recalibration (validation-fitted, applied at test time)
// ---------------------------------------------------------------------------

/// Per-horizon isotonic recalibration maps fitted on validation predictions
/// against the same exclusion rule the calibration metric uses.
inline std::vector<RecalibrationMap> fit_horizon_recalibration(
    const std::vector<Snapshot>& valid_snaps, const std::vector<SurvivalCurve>& valid_curves,
    std::span<const double> horizon_hours) {
    std::vector<RecalibrationMap> maps(horizon_hours.size());
    for (std::size_t h = 0; h < horizon_hours.size(); ++h) {
        const double tau = horizon_hours[h];
        std::vector<double> predicted, outcomes;
        for (std::size_t i = 0; i < valid_snaps.size(); ++i) {
            const Snapshot& s = valid_snaps[i];
            if (s.censored && s.y_hours <= tau) continue;
            predicted.push_back(valid_curves[i].cdf_at(tau));
            outcomes.push_back(!s.censored && s.y_hours <= tau ? 1.0 : 0.0);
        }
        if (predicted.size() >= 2) maps[h] = fit_recalibration(predicted, outcomes);
        // fewer than two usable points: identity (empty map)
    }
    return maps;
}

/// Remaps a curve through the per-horizon maps onto the metric grid, then
/// restores cross-horizon monotonicity with the least-squares projection.
inline SurvivalCurve apply_horizon_recalibration(const SurvivalCurve& curve,
                                                 std::span<const double> horizon_hours,
                                                 const std::vector<RecalibrationMap>& maps) {
    std::vector<double> cdf(horizon_hours.size());
    for (std::size_t h = 0; h < horizon_hours.size(); ++h) {
        const double raw = std::clamp(curve.cdf_at(horizon_hours[h]), 0.0, 1.0);
        cdf[h] = maps[h].thresholds.empty() ? raw : apply_recalibration(maps[h], raw);
    }
    MonotoneFit fit = pava(cdf);
    for (double& v : fit.values) v = std::clamp(v, 0.0, 1.0);
    return SurvivalCurve(std::vector<double>(horizon_hours.begin(), horizon_hours.end()),
                         std::move(fit.values), curve.beyond_last());
}

inline std::vector<SurvivalCurve> recalibrate_curves(const std::vector<SurvivalCurve>& curves,
                                                     std::span<const double> horizon_hours,
                                                     const std::vector<RecalibrationMap>& maps,
                                                     int workers = 1) {
    std::vector<SurvivalCurve> out(curves.size());
    parallel_chunks(curves.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = apply_horizon_recalibration(curves[i], horizon_hours, maps);
    });
    return out;
}

// ---------------------------------------------------------------------------
// train / eval drivers
// ---------------------------------------------------------------------------

struct ModelTiming {
    std::string label;
    double seconds = 0.0;
};

struct SplitPaths {
    std::filesystem::path dir;
    std::filesystem::path wrse_archive;
    std::vector<std::pair<std::string, std::filesystem::path>> parametric_archives;
};

inline SplitPaths split_paths(const ExperimentConfig& cfg, int split_index) {
    SplitPaths p;
    p.dir = cfg.out_dir / "models" / ("split" + std::to_string(split_index));
    p.wrse_archive = p.dir / "wrse.bin";
    for (const auto& pm : cfg.parametric)
        p.parametric_archives.emplace_back(pm.label(), p.dir / (pm.label() + ".bin"));
    return p;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::string gamma_label(double gamma) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", gamma);
    return buf;
}

/// Trains every configured model on every temporal split and persists the
/// archives. Returns per-model wall-clock timings (written separately from
/// the metric reports so reports stay byte-stable across worker counts).
inline std::vector<std::vector<ModelTiming>> run_training(const ExperimentConfig& cfg,
                                                          const Dataset& cohort) {
    const auto splits = temporal_splits(cohort.stays.size(), cfg.split);
    std::vector<std::vector<ModelTiming>> timings(splits.size());
    for (std::size_t r = 0; r < splits.size(); ++r) {
        const SplitIndices& s = splits[r];
        const Dataset train = subset(cohort, s.begin, s.train_end, SplitTag::Train);
        const Dataset valid = subset(cohort, s.train_end, s.valid_end, SplitTag::Validation);
        const SplitPaths paths = split_paths(cfg, static_cast<int>(r));
        std::filesystem::create_directories(paths.dir);

        if (cfg.wrse && cfg.wrse->enabled) {
            WrseConfig wc;
            wc.base_kind = cfg.wrse->base_learner;
            wc.gbt = cfg.wrse->gbt;
            wc.logistic = cfg.wrse->logistic;
            wc.ffnet = cfg.wrse->ffnet;
            const auto start = std::chrono::steady_clock::now();
            WrseModel model;
            try {
                model = fit_wrse(train, valid, cfg.wrse->grid(), wc, cfg.workers);
            } catch (const Error& e) {
                throw Error("split " + std::to_string(r) + ": " + e.what());
            }
            timings[r].push_back({"wrse", seconds_since(start)});
            save_wrse(model, paths.wrse_archive);
            if (cfg.benchmark_sequential && cfg.workers > 1) {
                const auto seq_start = std::chrono::steady_clock::now();
                const WrseModel sequential = fit_wrse(train, valid, cfg.wrse->grid(), wc, 1);
                timings[r].push_back({"wrse_sequential", seconds_since(seq_start)});
                if (serialize_wrse(sequential) != serialize_wrse(model))
                    throw Error("split " + std::to_string(r) +
                                ": sequential and parallel ensembles diverged");
            }
        }
        for (std::size_t m = 0; m < cfg.parametric.size(); ++m) {
            const auto& pm = cfg.parametric[m];
            ParametricConfig pc = pm.training;
            pc.seed = cfg.seed + m;
            const auto start = std::chrono::steady_clock::now();
            ParametricModel model;
            try {
                model = train_parametric(train, valid, pm.head, pc);
            } catch (const Error& e) {
                throw Error("split " + std::to_string(r) + " (" + pm.label() + "): " + e.what());
            }
            timings[r].push_back({pm.label(), seconds_since(start)});
            save_parametric(model, paths.parametric_archives[m].second);
        }
    }
    return timings;
}

inline void write_timings(const std::vector<std::vector<ModelTiming>>& timings,
                          const std::filesystem::path& path) {
    nlohmann::json j;
    j["splits"] = nlohmann::json::array();
    for (std::size_t r = 0; r < timings.size(); ++r) {
        nlohmann::json row;
        row["split"] = r;
        row["models"] = nlohmann::json::array();
        for (const auto& t : timings[r])
            row["models"].push_back({{"label", t.label}, {"seconds", t.seconds}});
        j["splits"].push_back(std::move(row));
    }
    write_text_file(path, j.dump(2) + "\n");
}

struct EvalOutcome {
    std::map<std::string, std::vector<MetricReport>> per_split;  // label -> one report per split
    std::map<std::string, MetricReport> aggregated;
};

/// Evaluates every configured model (and reference predictor) on the test
/// snapshots of every split: hourly snapshots are independent instances,
/// parametric baselines are recalibrated on the validation split first, and
/// weighted metrics are aggregated across splits as mean and standard error.
inline EvalOutcome run_evaluation(const ExperimentConfig& cfg, const Dataset& cohort) {
    const auto splits = temporal_splits(cohort.stays.size(), cfg.split);
    EvalOutcome outcome;
    const std::vector<double>& grid_hours = cfg.metrics.horizon_hours;

    for (std::size_t r = 0; r < splits.size(); ++r) {
        const SplitIndices& s = splits[r];
        const Dataset valid = subset(cohort, s.train_end, s.valid_end, SplitTag::Validation);
        const Dataset test = subset(cohort, s.valid_end, s.end, SplitTag::Test);
        const std::vector<Snapshot> valid_snaps = snapshots_of(valid);
        const std::vector<Snapshot> test_snaps = snapshots_of(test);
        const SplitPaths paths = split_paths(cfg, static_cast<int>(r));

        auto evaluate = [&](const std::string& label, std::vector<SurvivalCurve> curves) {
            const auto instances = make_eval_instances(test_snaps, std::move(curves));
            outcome.per_split[label].push_back(
                compute_metric_report(instances, cfg.metrics, cfg.workers));
        };

        if (cfg.wrse && cfg.wrse->enabled) {
            if (!std::filesystem::exists(paths.wrse_archive))
                throw DataFormatError("missing archive " + paths.wrse_archive.string() +
                                      " (run train first)");
            const WrseModel model = load_wrse(paths.wrse_archive);
            std::vector<SurvivalCurve> curves = predict_batch(model, test_snaps, cfg.workers);
            if (cfg.wrse->recalibrate) {
                const auto valid_curves = predict_batch(model, valid_snaps, cfg.workers);
                const auto maps = fit_horizon_recalibration(valid_snaps, valid_curves, grid_hours);
                curves = recalibrate_curves(curves, grid_hours, maps, cfg.workers);
            }
            evaluate("wrse", std::move(curves));
        }
        for (const auto& [label, path] : paths.parametric_archives) {
            if (!std::filesystem::exists(path))
                throw DataFormatError("missing archive " + path.string() + " (run train first)");
            const ParametricModel model = load_parametric(path);
            HorizonGrid grid;
            grid.horizons_hours = grid_hours;
            grid.spacing = SpacingKind::Even;
            auto predict_all = [&](const std::vector<Snapshot>& snaps) {
                std::vector<SurvivalCurve> curves(snaps.size());
                parallel_chunks(snaps.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i)
                        curves[i] = predict_parametric_curve(model, snaps[i].x, grid);
                });
                return curves;
            };
            std::vector<SurvivalCurve> curves = predict_all(test_snaps);
            // Parametric baselines are recalibrated on validation data by default.
            const auto valid_curves = predict_all(valid_snaps);
            const auto maps = fit_horizon_recalibration(valid_snaps, valid_curves, grid_hours);
            curves = recalibrate_curves(curves, grid_hours, maps, cfg.workers);
            evaluate(label, std::move(curves));
        }
        for (const std::string& ref : cfg.reference) {
            if (!cfg.scenario)
                throw ConfigError("models.reference: requires a synthetic scenario");
            if (ref == "oracle")
                evaluate("oracle", oracle_curves(*cfg.scenario, test_snaps, grid_hours, cfg.workers));
            else if (ref == "anti_oracle")
                evaluate("anti_oracle",
                         anti_oracle_curves(*cfg.scenario, test_snaps, grid_hours, cfg.workers));
            else if (ref == "random")
                evaluate("random", random_curves(test_snaps, grid_hours, cfg.seed ^ (r + 1)));
            else if (ref == "constant")
                evaluate("constant", constant_curves(test_snaps.size(), grid_hours));
        }
    }
    for (const auto& [label, reports] : outcome.per_split)
        outcome.aggregated[label] = aggregate_splits(reports);
    return outcome;
}

/// Summary table (one row per model, six weighted-metric columns).
inline nlohmann::json summary_table_json(const EvalOutcome& outcome,
                                         const std::vector<double>& gammas) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [label, report] : outcome.aggregated) {
        nlohmann::json row;
        row["model"] = label;
        for (double g : gammas) {
            const std::string suffix = gamma_label(g);
            const auto ctd = report.ctd_w_stats.find(g);
            const auto cal = report.cal_w_stats.find(g);
            row["ctd_w_" + suffix] = ctd == report.ctd_w_stats.end()
                                         ? nlohmann::json(nullptr)
                                         : nlohmann::json{{"mean", ctd->second.mean},
                                                          {"se", ctd->second.se}};
            row["cal_w_" + suffix] = cal == report.cal_w_stats.end()
                                         ? nlohmann::json(nullptr)
                                         : nlohmann::json{{"mean", cal->second.mean},
                                                          {"se", cal->second.se}};
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string summary_table_tsv(const EvalOutcome& outcome,
                                     const std::vector<double>& gammas) {
    std::string out = "model";
    char buf[160];
    for (double g : gammas) {
        std::snprintf(buf, sizeof(buf), "\tctd_w(g=%.2g)\tctd_se(g=%.2g)", g, g);
        out += buf;
    }
    for (double g : gammas) {
        std::snprintf(buf, sizeof(buf), "\tcal_w(g=%.2g)\tcal_se(g=%.2g)", g, g);
        out += buf;
    }
    out += "\n";
    for (const auto& [label, report] : outcome.aggregated) {
        out += label;
        for (double g : gammas) {
            const auto it = report.ctd_w_stats.find(g);
            std::snprintf(buf, sizeof(buf), "\t%.6g\t%.6g",
                          it == report.ctd_w_stats.end() ? NAN : it->second.mean,
                          it == report.ctd_w_stats.end() ? NAN : it->second.se);
            out += buf;
        }
        for (double g : gammas) {
            const auto it = report.cal_w_stats.find(g);
            std::snprintf(buf, sizeof(buf), "\t%.6g\t%.6g",
                          it == report.cal_w_stats.end() ? NAN : it->second.mean,
                          it == report.cal_w_stats.end() ? NAN : it->second.se);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

inline void write_evaluation(const EvalOutcome& outcome, const ExperimentConfig& cfg) {
    const auto reports_dir = cfg.out_dir / "reports";
    for (const auto& [label, reports] : outcome.per_split) {
        for (std::size_t r = 0; r < reports.size(); ++r) {
            const auto dir = reports_dir / ("split" + std::to_string(r));
            std::filesystem::create_directories(dir);
            write_metric_report(reports[r], dir / label);
        }
        write_metric_report(outcome.aggregated.at(label), reports_dir / (label + "_summary"));
    }
    write_text_file(reports_dir / "summary.json",
                    summary_table_json(outcome, cfg.metrics.gammas).dump(2) + "\n");
    write_text_file(reports_dir / "summary.tsv", summary_table_tsv(outcome, cfg.metrics.gammas));
}

// ---------------------------------------------------------------------------
// configuration sweep
// ---------------------------------------------------------------------------

struct SweepCell {
    std::string label;
    WrseModelConfig model;
};

inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg) {
    std::vector<SweepCell> cells;
    for (const std::string& spacing : cfg.sweep.spacings) {
        for (int k : cfg.sweep.ks) {
            for (const std::string& base : cfg.sweep.bases) {
                WrseModelConfig mc = cfg.wrse.value_or(WrseModelConfig{});
                mc.k = k;
                if (spacing == "even") {
                    mc.spacing = SpacingKind::Even;
                } else if (spacing.rfind("weighted:", 0) == 0) {
                    mc.spacing = SpacingKind::Weighted;
                    const double g = std::stod(spacing.substr(9));
                    if (!(g > 0.0 && g < 1.0))
                        throw ConfigError("sweep.spacings: gamma must lie in (0, 1): " + spacing);
                    mc.gamma = g;
                } else {
                    throw ConfigError("sweep.spacings: expected 'even' or 'weighted:<gamma>', got " +
                                      spacing);
                }
                if (base == "gbt")
                    mc.base_learner = BaseKind::GradientBoostedTrees;
                else if (base == "logistic")
                    mc.base_learner = BaseKind::Logistic;
                else
                    mc.base_learner = BaseKind::FeedForward;
                SweepCell cell;
                cell.model = mc;
                cell.label = (mc.spacing == SpacingKind::Even
                                  ? "even"
                                  : "weighted_g" + gamma_label(mc.gamma)) +
                             "_k" + std::to_string(k) + "_" + base;
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

/// Trains and evaluates one sweep cell in memory (no archives) and returns
/// the aggregated report across splits.
inline MetricReport run_sweep_cell(const ExperimentConfig& cfg, const Dataset& cohort,
                                   const WrseModelConfig& mc) {
    const auto splits = temporal_splits(cohort.stays.size(), cfg.split);
    std::vector<MetricReport> reports;
    for (const SplitIndices& s : splits) {
        const Dataset train = subset(cohort, s.begin, s.train_end, SplitTag::Train);
        const Dataset valid = subset(cohort, s.train_end, s.valid_end, SplitTag::Validation);
        const Dataset test = subset(cohort, s.valid_end, s.end, SplitTag::Test);
        WrseConfig wc;
        wc.base_kind = mc.base_learner;
        wc.gbt = mc.gbt;
        wc.logistic = mc.logistic;
        wc.ffnet = mc.ffnet;
        const WrseModel model = fit_wrse(train, valid, mc.grid(), wc, cfg.workers);
        const std::vector<Snapshot> test_snaps = snapshots_of(test);
        auto instances =
            make_eval_instances(test_snaps, predict_batch(model, test_snaps, cfg.workers));
        reports.push_back(compute_metric_report(instances, cfg.metrics, cfg.workers));
    }
    return aggregate_splits(reports);
}

/// Full sweep with cell-level checkpointing: finished cells are stored as
/// JSON files and skipped on resume; the table is rebuilt from cell files.
inline nlohmann::json run_sweep(const ExperimentConfig& cfg, const Dataset& cohort) {
    const auto cells = sweep_cells(cfg);
    const auto cell_dir = cfg.out_dir / "sweep" / "cells";
    std::filesystem::create_directories(cell_dir);
    nlohmann::json table = nlohmann::json::array();
    for (const SweepCell& cell : cells) {
        const auto cell_path = cell_dir / (cell.label + ".json");
        nlohmann::json row;
        if (std::filesystem::exists(cell_path)) {
            std::ifstream in(cell_path);
            try {
                in >> row;
            } catch (const nlohmann::json::exception&) {
                row = nlohmann::json();
            }
        }
        if (!row.contains("model")) {
            const MetricReport report = run_sweep_cell(cfg, cohort, cell.model);
            row = nlohmann::json();
            row["model"] = cell.label;
            row["metrics"] = nlohmann::json::array();
            for (double g : cfg.metrics.gammas) {
                nlohmann::json m;
                m["gamma"] = g;
                m["ctd_w"] = {{"mean", report.ctd_w_stats.at(g).mean},
                              {"se", report.ctd_w_stats.at(g).se}};
                m["cal_w"] = {{"mean", report.cal_w_stats.at(g).mean},
                              {"se", report.cal_w_stats.at(g).se}};
                row["metrics"].push_back(std::move(m));
            }
            write_text_file(cell_path, row.dump(2) + "\n");
        }
        table.push_back(std::move(row));
    }
    return table;
}

inline std::string sweep_table_tsv(const nlohmann::json& table,
                                   const std::vector<double>& gammas) {
    std::string out = "model";
    char buf[160];
    for (double g : gammas) {
        std::snprintf(buf, sizeof(buf), "\tctd_w(g=%.2g)", g);
        out += buf;
    }
    for (double g : gammas) {
        std::snprintf(buf, sizeof(buf), "\tcal_w(g=%.2g)", g);
        out += buf;
    }
    out += "\n";
    for (const auto& row : table) {
        out += row.at("model").get<std::string>();
        for (const char* key : {"ctd_w", "cal_w"}) {
            for (const auto& m : row.at("metrics")) {
                std::snprintf(buf, sizeof(buf), "\t%.6g +- %.6g",
                              m.at(key).at("mean").get<double>(), m.at(key).at("se").get<double>());
                out += buf;
            }
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// importance driver
// ---------------------------------------------------------------------------

struct ImportanceSummary {
    double gamma = 0.0;
    std::vector<double> mean;  // per feature, across splits
    std::vector<double> stddev;
};

/// Permutation importance of the trained ensemble archives, aggregated per
/// decay rate across splits (mean and standard deviation).
inline std::vector<ImportanceSummary> run_importance(const ExperimentConfig& cfg,
                                                     const Dataset& cohort,
                                                     const std::vector<double>& gammas,
                                                     int n_repeats) {
    const auto splits = temporal_splits(cohort.stays.size(), cfg.split);
    std::vector<std::vector<std::vector<double>>> per_gamma_scores(gammas.size());
    for (std::size_t r = 0; r < splits.size(); ++r) {
        const SplitIndices& s = splits[r];
        const Dataset valid = subset(cohort, s.train_end, s.valid_end, SplitTag::Validation);
        const SplitPaths paths = split_paths(cfg, static_cast<int>(r));
        if (!std::filesystem::exists(paths.wrse_archive))
            throw DataFormatError("missing archive " + paths.wrse_archive.string() +
                                  " (run train first)");
        const WrseModel model = load_wrse(paths.wrse_archive);
        const auto raw =
            permutation_importance_raw(model, valid, n_repeats, cfg.seed + r, cfg.workers);
        for (std::size_t g = 0; g < gammas.size(); ++g)
            per_gamma_scores[g].push_back(aggregate_importance(raw, model.grid, gammas[g]));
    }
    std::vector<ImportanceSummary> out;
    for (std::size_t g = 0; g < gammas.size(); ++g) {
        ImportanceSummary summary;
        summary.gamma = gammas[g];
        const auto& rows = per_gamma_scores[g];
        const std::size_t d = rows.front().size();
        summary.mean.assign(d, 0.0);
        summary.stddev.assign(d, 0.0);
        for (const auto& row : rows)
            for (std::size_t f = 0; f < d; ++f) summary.mean[f] += row[f];
        for (double& m : summary.mean) m /= static_cast<double>(rows.size());
        if (rows.size() > 1) {
            for (const auto& row : rows)
                for (std::size_t f = 0; f < d; ++f) {
                    const double delta = row[f] - summary.mean[f];
                    summary.stddev[f] += delta * delta;
                }
            for (double& sd : summary.stddev)
                sd = std::sqrt(sd / static_cast<double>(rows.size() - 1));
        }
        out.push_back(std::move(summary));
    }
    return out;
}

}  // namespace wrse
