#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wrse/errors.hpp"
#include "wrse/importance.hpp"
#include "wrse/metrics.hpp"

namespace wrse {

// Report serialization. JSON carries the full structure; the delimited text
// export (tab-separated: tau_hours, cal_area, concordant_fraction,
// pair_count) is the per-horizon curve feed for plotting. NaN fields emit as
// null in JSON and "nan" in text.

namespace detail {

inline nlohmann::json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace detail

inline nlohmann::json metric_report_to_json(const MetricReport& report) {
    nlohmann::json j;
    j["per_horizon"] = nlohmann::json::array();
    for (const auto& [tau, hm] : report.per_horizon) {
        nlohmann::json row;
        row["tau_hours"] = tau;
        row["cal_area"] = detail::number_or_null(hm.cal_area);
        row["concordant_fraction"] = detail::number_or_null(hm.concordant_fraction);
        row["pair_count"] = hm.pair_count;
        row["instance_count"] = hm.instance_count;
        j["per_horizon"].push_back(std::move(row));
    }
    j["weighted"] = nlohmann::json::array();
    for (const auto& [gamma, wm] : report.weighted) {
        nlohmann::json row;
        row["gamma"] = gamma;
        row["cal_w"] = detail::number_or_null(wm.cal_w);
        row["ctd_w"] = detail::number_or_null(wm.ctd_w);
        j["weighted"].push_back(std::move(row));
    }
    j["dropped_calibration_horizons"] = report.dropped_calibration_horizons;
    j["n_splits"] = report.n_splits;
    j["insufficient_replicates"] = report.insufficient_replicates;
    if (!report.ctd_w_stats.empty()) {
        j["stats"] = nlohmann::json::array();
        for (const auto& [gamma, stat] : report.ctd_w_stats) {
            nlohmann::json row;
            row["gamma"] = gamma;
            row["ctd_w"] = {{"mean", detail::number_or_null(stat.mean)},
                            {"se", detail::number_or_null(stat.se)}};
            const auto cal_it = report.cal_w_stats.find(gamma);
            if (cal_it != report.cal_w_stats.end())
                row["cal_w"] = {{"mean", detail::number_or_null(cal_it->second.mean)},
                                {"se", detail::number_or_null(cal_it->second.se)}};
            j["stats"].push_back(std::move(row));
        }
    }
    return j;
}

inline std::string metric_report_to_tsv(const MetricReport& report) {
    std::string out = "tau_hours\tcal_area\tconcordant_fraction\tpair_count\n";
    char buf[128];
    for (const auto& [tau, hm] : report.per_horizon) {
        std::snprintf(buf, sizeof(buf), "%.10g\t%.10g\t%.10g\t%llu\n", tau, hm.cal_area,
                      hm.concordant_fraction, static_cast<unsigned long long>(hm.pair_count));
        out += buf;
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw Error("write failed for " + path.string());
}

/// Writes <stem>.json and <stem>.tsv next to each other.
inline void write_metric_report(const MetricReport& report, const std::filesystem::path& stem) {
    write_text_file(std::filesystem::path(stem).concat(".json"),
                    metric_report_to_json(report).dump(2) + "\n");
    write_text_file(std::filesystem::path(stem).concat(".tsv"), metric_report_to_tsv(report));
}

/// Importance export: one row per feature, sorted by descending score.
inline nlohmann::json importance_to_json(const std::vector<std::string>& feature_names,
                                         const std::vector<double>& scores,
                                         const std::vector<double>& score_std, double gamma) {
    if (feature_names.size() != scores.size() ||
        (!score_std.empty() && score_std.size() != scores.size()))
        throw LengthMismatch("importance export: column lengths differ");
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    nlohmann::json j;
    j["gamma"] = gamma;
    j["features"] = nlohmann::json::array();
    for (std::size_t i : order) {
        nlohmann::json row;
        row["feature"] = feature_names[i];
        row["score"] = scores[i];
        row["std"] = score_std.empty() ? 0.0 : score_std[i];
        j["features"].push_back(std::move(row));
    }
    return j;
}

inline std::string importance_to_tsv(const nlohmann::json& j) {
    std::string out = "feature\tscore\tstd\n";
    char buf[128];
    for (const auto& row : j.at("features")) {
        std::snprintf(buf, sizeof(buf), "%s\t%.10g\t%.10g\n",
                      row.at("feature").get<std::string>().c_str(),
                      row.at("score").get<double>(), row.at("std").get<double>());
        out += buf;
    }
    return out;
}

}  // namespace wrse
