#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wrse/core.hpp"
#include "wrse/errors.hpp"

namespace wrse {

// Dataset interchange format: two comma-delimited text files.
//   stays file:    stay_id,event_time_hours,censored          (censored in {0,1})
//   features file: stay_id,t_hours,f0,...,f{d-1}              (long format, hourly rows)
// Feature rows must cover t = 0..k-1 for each stay; a features row whose
// stay_id is absent from the stays file is a hard format error.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_double(const std::string& s, const std::string& context) {
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw DataFormatError(context + ": cannot parse number '" + s + "'");
    return value;
}

}  // namespace detail

inline void save_dataset(const Dataset& dataset, const std::filesystem::path& stays_path,
                         const std::filesystem::path& features_path) {
    std::ofstream stays(stays_path);
    if (!stays) throw Error("cannot open " + stays_path.string() + " for writing");
    stays << "stay_id,event_time_hours,censored\n";
    char buf[64];
    for (const StayRecord& s : dataset.stays) {
        std::snprintf(buf, sizeof(buf), "%.17g", s.event_time_hours);
        stays << s.stay_id << ',' << buf << ',' << (s.censored ? 1 : 0) << '\n';
    }

    std::ofstream features(features_path);
    if (!features) throw Error("cannot open " + features_path.string() + " for writing");
    features << "stay_id,t_hours";
    const std::size_t d = dataset.stays.empty() ? 0 : dataset.stays.front().features.cols;
    for (std::size_t f = 0; f < d; ++f) features << ",f" << f;
    features << '\n';
    for (const StayRecord& s : dataset.stays) {
        for (std::size_t t = 0; t < s.features.rows; ++t) {
            features << s.stay_id << ',' << t;
            for (std::size_t f = 0; f < s.features.cols; ++f) {
                std::snprintf(buf, sizeof(buf), "%.17g", s.features.row(t)[f]);
                features << ',' << buf;
            }
            features << '\n';
        }
    }
}

inline Dataset load_dataset(const std::filesystem::path& stays_path,
                            const std::filesystem::path& features_path,
                            SplitTag tag = SplitTag::Train) {
    std::ifstream stays(stays_path);
    if (!stays) throw DataFormatError("cannot open stays file " + stays_path.string());
    std::string line;
    if (!std::getline(stays, line) || detail::split_csv_line(line) !=
        std::vector<std::string>{"stay_id", "event_time_hours", "censored"})
        throw DataFormatError(stays_path.string() + ": bad stays header");

    Dataset dataset;
    dataset.split_tag = tag;
    std::map<std::string, std::size_t> index_of;
    while (std::getline(stays, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw DataFormatError(stays_path.string() + ": expected 3 columns, got line '" + line + "'");
        StayRecord stay;
        stay.stay_id = fields[0];
        stay.event_time_hours = detail::parse_double(fields[1], stays_path.string());
        if (fields[2] == "0")
            stay.censored = false;
        else if (fields[2] == "1")
            stay.censored = true;
        else
            throw DataFormatError(stays_path.string() + ": censored flag must be 0 or 1");
        if (!index_of.emplace(stay.stay_id, dataset.stays.size()).second)
            throw DataFormatError(stays_path.string() + ": duplicate stay_id " + stay.stay_id);
        dataset.stays.push_back(std::move(stay));
    }

    std::ifstream features(features_path);
    if (!features) throw DataFormatError("cannot open features file " + features_path.string());
    if (!std::getline(features, line)) throw DataFormatError(features_path.string() + ": empty file");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 3 || header[0] != "stay_id" || header[1] != "t_hours")
        throw DataFormatError(features_path.string() + ": bad features header");
    const std::size_t d = header.size() - 2;
    for (std::size_t f = 0; f < d; ++f)
        if (header[2 + f] != "f" + std::to_string(f))
            throw DataFormatError(features_path.string() + ": feature columns must be f0..f" +
                                  std::to_string(d - 1));

    // Collect rows per stay, then order by t and validate hourly coverage.
    std::vector<std::vector<std::pair<double, std::vector<double>>>> rows(dataset.stays.size());
    while (std::getline(features, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 2 + d)
            throw DataFormatError(features_path.string() + ": wrong column count in line '" + line + "'");
        const auto it = index_of.find(fields[0]);
        if (it == index_of.end())
            throw DataFormatError(features_path.string() + ": unknown stay_id " + fields[0]);
        std::vector<double> x(d);
        for (std::size_t f = 0; f < d; ++f)
            x[f] = detail::parse_double(fields[2 + f], features_path.string());
        rows[it->second].emplace_back(detail::parse_double(fields[1], features_path.string()),
                                      std::move(x));
    }
    for (std::size_t i = 0; i < dataset.stays.size(); ++i) {
        auto& stay_rows = rows[i];
        StayRecord& stay = dataset.stays[i];
        if (stay_rows.empty())
            throw DataFormatError(features_path.string() + ": no feature rows for stay " + stay.stay_id);
        std::sort(stay_rows.begin(), stay_rows.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        stay.features.rows = stay_rows.size();
        stay.features.cols = d;
        stay.features.data.reserve(stay_rows.size() * d);
        for (std::size_t t = 0; t < stay_rows.size(); ++t) {
            if (stay_rows[t].first != static_cast<double>(t))
                throw DataFormatError(features_path.string() + ": stay " + stay.stay_id +
                                      " must have consecutive hourly rows starting at t=0");
            stay.features.data.insert(stay.features.data.end(), stay_rows[t].second.begin(),
                                      stay_rows[t].second.end());
        }
    }
    try {
        dataset.validate();
    } catch (const Error& e) {
        throw DataFormatError(std::string("dataset invalid: ") + e.what());
    }
    return dataset;
}

}  // namespace wrse
