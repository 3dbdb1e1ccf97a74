#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "causalcast/citest.hpp"
#include "causalcast/common.hpp"
#include "causalcast/evalstats.hpp"
#include "causalcast/forecast.hpp"
#include "causalcast/panel.hpp"

#include <json.hpp>

namespace causalcast {

namespace detail {

inline std::string format_level(double level) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", level);
    return buf;
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace detail

inline nlohmann::json panel_to_json(const TimeSeriesPanel& panel) {
    nlohmann::json j;
    j["names"] = panel.names;
    j["index"] = panel.index;
    j["values"] = nlohmann::json::array();
    for (std::size_t t = 0; t < panel.rows(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < panel.cols(); ++c) {
            if (panel.missing(t, c)) {
                row.push_back(nullptr);
            } else {
                row.push_back(panel.at(t, c));
            }
        }
        j["values"].push_back(row);
    }
    return j;
}

inline nlohmann::json citest_result_to_json(const CITestResult& r) {
    nlohmann::json j;
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    j["sample_size"] = r.sample_size;
    j["cond_dim"] = r.cond_dim;
    if (r.dof) j["dof"] = *r.dof;
    if (r.n_permutations) j["n_permutations"] = *r.n_permutations;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline nlohmann::json bundle_to_json(const ForecastBundle& b, bool include_samples = true) {
    nlohmann::json j;
    j["origin"] = b.origin;
    j["s"] = b.scale;
    nlohmann::json q = nlohmann::json::object();
    for (std::size_t li = 0; li < b.quantile_levels.size(); ++li) {
        q[detail::format_level(b.quantile_levels[li])] = b.quantiles[li];
    }
    j["quantiles"] = q;
    if (include_samples && !b.samples.empty()) j["samples"] = b.samples;
    return j;
}

inline ForecastBundle bundle_from_json(const nlohmann::json& j) {
    ForecastBundle b;
    b.origin = j.at("origin").get<std::string>();
    b.scale = j.at("s").get<double>();
    for (const auto& [key, arr] : j.at("quantiles").items()) {
        b.quantile_levels.push_back(std::stod(key));
        b.quantiles.push_back(arr.get<std::vector<double>>());
    }
    // Levels ascending, carrying their bands along.
    std::vector<std::size_t> order(b.quantile_levels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t c) { return b.quantile_levels[a] < b.quantile_levels[c]; });
    std::vector<double> levels;
    std::vector<std::vector<double>> bands;
    for (const auto i : order) {
        levels.push_back(b.quantile_levels[i]);
        bands.push_back(b.quantiles[i]);
    }
    b.quantile_levels = std::move(levels);
    b.quantiles = std::move(bands);
    if (b.quantiles.empty() || b.quantiles.front().empty()) {
        throw DataError("bundle '" + b.origin + "' has no quantile bands");
    }
    b.horizon = static_cast<int>(b.quantiles.front().size());
    if (j.contains("samples")) b.samples = j.at("samples").get<std::vector<std::vector<double>>>();
    return b;
}

inline nlohmann::json evaluation_report_to_json(const CoverageCounts& cov,
                                                const std::vector<PosteriorSummary>& posteriors,
                                                const std::vector<BinomialCalibration>& calibrations,
                                                const ErrorDistributions& errors,
                                                const IntervalWidths& widths,
                                                const std::vector<AnomalyFlag>& anomalies,
                                                double level, double alpha) {
    nlohmann::json j;
    j["level"] = level;
    j["anomaly_alpha"] = alpha;
    j["coverage"] = nlohmann::json::array();
    int pooled_n = 0, pooled_k = 0;
    for (std::size_t h = 0; h < cov.trials.size(); ++h) {
        const auto& post = posteriors[h];
        const auto& calib = calibrations[h];
        pooled_n += cov.trials[h];
        pooled_k += cov.successes[h];
        j["coverage"].push_back({
            {"horizon", h + 1},
            {"n", cov.trials[h]},
            {"k", cov.successes[h]},
            {"proportion", cov.trials[h] > 0
                               ? static_cast<double>(cov.successes[h]) / static_cast<double>(cov.trials[h])
                               : 0.0},
            {"posterior", {{"a", post.a}, {"b", post.b}, {"mean", post.mean},
                           {"ci_lo", post.ci_lo}, {"ci_hi", post.ci_hi}}},
            {"binomial_calibration", {{"violations", cov.trials[h] - cov.successes[h]},
                                      {"expected_mean", calib.expected_mean},
                                      {"expected_sd", calib.expected_sd},
                                      {"z_score", calib.z_score},
                                      {"within_two_sd", calib.within_two_sd}}},
        });
    }
    j["pooled"] = {{"n", pooled_n},
                   {"k", pooled_k},
                   {"proportion", pooled_n > 0 ? static_cast<double>(pooled_k) / pooled_n : 0.0}};
    j["abs_error"] = nlohmann::json::array();
    for (std::size_t h = 0; h < errors.summaries.size(); ++h) {
        j["abs_error"].push_back({{"horizon", h + 1},
                                  {"mean", errors.summaries[h].mean},
                                  {"median", errors.summaries[h].median},
                                  {"iqr", errors.summaries[h].iqr}});
    }
    j["interval_width"] = nlohmann::json::array();
    for (std::size_t h = 0; h < widths.summaries.size(); ++h) {
        j["interval_width"].push_back({{"horizon", h + 1},
                                       {"mean", widths.summaries[h].mean},
                                       {"median", widths.summaries[h].median},
                                       {"iqr", widths.summaries[h].iqr}});
    }
    j["anomalies"] = nlohmann::json::array();
    for (const auto& a : anomalies) {
        j["anomalies"].push_back({{"timestamp", a.timestamp},
                                  {"observed", a.observed},
                                  {"tail_prob", a.tail_prob},
                                  {"flagged", a.flagged}});
    }
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file '" + path + "'");
    out << text;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

/// Per-step band CSV for plotting: one row per (origin, step).
inline std::string bands_to_csv(const std::vector<ForecastBundle>& bundles) {
    std::string out = "origin,step";
    if (!bundles.empty()) {
        for (double level : bundles.front().quantile_levels) {
            out += ",q" + detail::format_level(level);
        }
    }
    out += "\n";
    for (const auto& b : bundles) {
        for (int h = 0; h < b.horizon; ++h) {
            out += b.origin + "," + std::to_string(h + 1);
            for (std::size_t li = 0; li < b.quantile_levels.size(); ++li) {
                out += "," + detail::format_number(b.quantiles[li][static_cast<std::size_t>(h)]);
            }
            out += "\n";
        }
    }
    return out;
}

inline std::string per_horizon_csv(const std::vector<std::vector<double>>& per_horizon,
                                   const std::string& value_name) {
    std::string out = "horizon," + value_name + "\n";
    for (std::size_t h = 0; h < per_horizon.size(); ++h) {
        for (double v : per_horizon[h]) {
            out += std::to_string(h + 1) + "," + detail::format_number(v) + "\n";
        }
    }
    return out;
}

inline std::string posteriors_to_csv(const CoverageCounts& cov,
                                     const std::vector<PosteriorSummary>& posteriors) {
    std::string out = "horizon,k,n,a,b,mean,ci_lo,ci_hi\n";
    for (std::size_t h = 0; h < posteriors.size(); ++h) {
        const auto& p = posteriors[h];
        out += std::to_string(h + 1) + "," + std::to_string(cov.successes[h]) + "," +
               std::to_string(cov.trials[h]) + "," + detail::format_number(p.a) + "," +
               detail::format_number(p.b) + "," + detail::format_number(p.mean) + "," +
               detail::format_number(p.ci_lo) + "," + detail::format_number(p.ci_hi) + "\n";
    }
    return out;
}

inline std::string anomalies_to_csv(const std::vector<AnomalyFlag>& flags) {
    std::string out = "timestamp,observed,tail_prob,flagged\n";
    for (const auto& f : flags) {
        out += f.timestamp + "," + detail::format_number(f.observed) + "," +
               detail::format_number(f.tail_prob) + "," + (f.flagged ? "1" : "0") + "\n";
    }
    return out;
}

} // namespace causalcast
