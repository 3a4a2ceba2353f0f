#pragma once

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wrse/config.hpp"
#include "wrse/pipeline.hpp"

namespace wrse {

// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration,
// 3 malformed data or archive.

namespace cli_detail {

struct CommonArgs {
    std::string config_path;
    int workers = -1;          // -1: keep config value
    long long seed = -1;       // -1: keep config value
    std::string out_dir;       // empty: keep config value
};

inline void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--workers", args.workers, "worker pool size override");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--out", args.out_dir, "output directory override");
}

inline ExperimentConfig load_config(const CommonArgs& args) {
    ExperimentConfig cfg = load_experiment_config(args.config_path);
    if (args.workers > 0) cfg.workers = args.workers;
    if (args.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(args.seed);
        if (cfg.scenario) cfg.scenario->seed = cfg.seed;
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    return cfg;
}

inline int cmd_generate(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    if (!cfg.scenario)
        throw ConfigError("scenario: generate requires a synthetic scenario, not dataset files");
    const Dataset cohort = generate(*cfg.scenario, cfg.n_stays, SplitTag::Train, cfg.workers);
    std::filesystem::create_directories(cfg.out_dir);
    save_dataset(cohort, cfg.out_dir / "stays.csv", cfg.out_dir / "features.csv");

    std::size_t deaths = 0;
    std::vector<double> stay_lengths;
    stay_lengths.reserve(cohort.stays.size());
    for (const StayRecord& s : cohort.stays) {
        if (!s.censored) ++deaths;
        stay_lengths.push_back(s.event_time_hours);
    }
    std::sort(stay_lengths.begin(), stay_lengths.end());
    const double median = stay_lengths[stay_lengths.size() / 2];
    std::printf("generated %zu stays -> %s\n", cohort.stays.size(),
                (cfg.out_dir / "stays.csv").string().c_str());
    std::printf("  deaths: %zu (%.1f%%), median stay %.1f h\n", deaths,
                100.0 * static_cast<double>(deaths) / static_cast<double>(cohort.stays.size()),
                median);
    return 0;
}

inline int cmd_train(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    if (!cfg.wrse && cfg.parametric.empty())
        throw ConfigError("models: train requires at least one model block");
    const Dataset cohort = load_or_generate(cfg);
    const auto timings = run_training(cfg, cohort);
    write_timings(timings, cfg.out_dir / "timings.json");
    for (std::size_t r = 0; r < timings.size(); ++r)
        for (const ModelTiming& t : timings[r])
            std::printf("split %zu  %-12s %8.2f s\n", r, t.label.c_str(), t.seconds);
    std::printf("archives written under %s\n", (cfg.out_dir / "models").string().c_str());
    return 0;
}

inline int cmd_eval(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    if (!cfg.wrse && cfg.parametric.empty() && cfg.reference.empty())
        throw ConfigError("models: eval requires at least one model or reference predictor");
    const Dataset cohort = load_or_generate(cfg);
    const EvalOutcome outcome = run_evaluation(cfg, cohort);
    write_evaluation(outcome, cfg);
    std::printf("%s", summary_table_tsv(outcome, cfg.metrics.gammas).c_str());
    std::printf("reports written under %s\n", (cfg.out_dir / "reports").string().c_str());
    return 0;
}

inline int cmd_sweep(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    const Dataset cohort = load_or_generate(cfg);
    const nlohmann::json table = run_sweep(cfg, cohort);
    write_text_file(cfg.out_dir / "sweep" / "table.json", table.dump(2) + "\n");
    write_text_file(cfg.out_dir / "sweep" / "table.tsv",
                    sweep_table_tsv(table, cfg.metrics.gammas));
    std::printf("%s", sweep_table_tsv(table, cfg.metrics.gammas).c_str());
    std::printf("sweep table written under %s\n", (cfg.out_dir / "sweep").string().c_str());
    return 0;
}

inline int cmd_importance(const CommonArgs& args) {
    ExperimentConfig cfg = load_config(args);
    if (!cfg.wrse) throw ConfigError("models.wrse: importance requires the ensemble model");
    const Dataset cohort = load_or_generate(cfg);
    const auto summaries =
        run_importance(cfg, cohort, cfg.importance.gammas, cfg.importance.n_repeats);
    const auto dir = cfg.out_dir / "importance";
    std::filesystem::create_directories(dir);
    for (const ImportanceSummary& summary : summaries) {
        std::vector<std::string> names(summary.mean.size());
        for (std::size_t f = 0; f < names.size(); ++f) names[f] = "f" + std::to_string(f);
        const auto j = importance_to_json(names, summary.mean, summary.stddev, summary.gamma);
        const std::string stem = "gamma" + gamma_label(summary.gamma);
        write_text_file(dir / (stem + ".json"), j.dump(2) + "\n");
        write_text_file(dir / (stem + ".tsv"), importance_to_tsv(j));
        std::printf("gamma=%.2g top features:\n", summary.gamma);
        for (std::size_t i = 0; i < std::min<std::size_t>(5, j["features"].size()); ++i)
            std::printf("  %-6s %.5f\n",
                        j["features"][i]["feature"].get<std::string>().c_str(),
                        j["features"][i]["score"].get<double>());
    }
    std::printf("importance reports written under %s\n", dir.string().c_str());
    return 0;
}

}  // namespace cli_detail

inline int run_cli(std::vector<std::string> args) {
    CLI::App app{"survival ensemble benchmark: cohort generation, training, evaluation"};
    app.require_subcommand(1);

    cli_detail::CommonArgs generate_args, train_args, eval_args, sweep_args, importance_args;
    cli_detail::add_common(app.add_subcommand("generate", "write a synthetic cohort to disk"),
                           generate_args);
    cli_detail::add_common(app.add_subcommand("train", "fit models on every temporal split"),
                           train_args);
    cli_detail::add_common(app.add_subcommand("eval", "evaluate archives and write reports"),
                           eval_args);
    cli_detail::add_common(app.add_subcommand("sweep", "spacing / count / base-model sweep"),
                           sweep_args);
    cli_detail::add_common(
        app.add_subcommand("importance", "permutation feature importance of the ensemble"),
        importance_args);

    std::reverse(args.begin(), args.end());  // CLI11 parses reversed vectors
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("generate")) return cli_detail::cmd_generate(generate_args);
        if (app.got_subcommand("train")) return cli_detail::cmd_train(train_args);
        if (app.got_subcommand("eval")) return cli_detail::cmd_eval(eval_args);
        if (app.got_subcommand("sweep")) return cli_detail::cmd_sweep(sweep_args);
        if (app.got_subcommand("importance")) return cli_detail::cmd_importance(importance_args);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const DataFormatError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}

inline int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(std::move(args));
}

}  // namespace wrse
