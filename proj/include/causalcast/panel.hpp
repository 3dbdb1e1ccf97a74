#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "causalcast/common.hpp"

namespace causalcast {

enum class Frequency { quarterly, monthly };

namespace dates {

// Periods are encoded as integers so spacing checks reduce to +1 steps:
// quarterly -> year*4 + (q-1), monthly -> year*12 + (m-1).

inline int parse_quarterly(const std::string& label, std::size_t row) {
    // Accepted: "YYYYQn" and "YYYY-Qn".
    std::string s = label;
    const auto dash = s.find("-Q");
    if (dash != std::string::npos) s = s.substr(0, dash) + "Q" + s.substr(dash + 2);
    const auto qpos = s.find('Q');
    if (qpos == std::string::npos || qpos == 0 || qpos + 2 != s.size()) {
        throw DataError("malformed quarterly date '" + label + "' at row " + std::to_string(row));
    }
    int year = 0, q = 0;
    try {
        std::size_t used = 0;
        year = std::stoi(s.substr(0, qpos), &used);
        if (used != qpos) throw std::invalid_argument("year");
        q = s[qpos + 1] - '0';
    } catch (const std::exception&) {
        throw DataError("malformed quarterly date '" + label + "' at row " + std::to_string(row));
    }
    if (q < 1 || q > 4) {
        throw DataError("malformed quarterly date '" + label + "' at row " + std::to_string(row));
    }
    return year * 4 + (q - 1);
}

inline int parse_monthly(const std::string& label, std::size_t row) {
    // Accepted: "YYYY-MM" and "YYYY-MM-DD" (day ignored).
    const auto bad = [&]() -> DataError {
        return DataError("malformed monthly date '" + label + "' at row " + std::to_string(row));
    };
    const auto d1 = label.find('-');
    if (d1 == std::string::npos || d1 == 0) throw bad();
    const auto d2 = label.find('-', d1 + 1);
    const std::string ms = (d2 == std::string::npos) ? label.substr(d1 + 1) : label.substr(d1 + 1, d2 - d1 - 1);
    if (ms.size() != 2) throw bad();
    int year = 0, month = 0;
    try {
        std::size_t used = 0;
        year = std::stoi(label.substr(0, d1), &used);
        if (used != d1) throw std::invalid_argument("year");
        month = std::stoi(ms, &used);
        if (used != 2) throw std::invalid_argument("month");
    } catch (const std::exception&) {
        throw bad();
    }
    if (month < 1 || month > 12) throw bad();
    return year * 12 + (month - 1);
}

inline int parse_period(const std::string& label, Frequency f, std::size_t row) {
    return f == Frequency::quarterly ? parse_quarterly(label, row) : parse_monthly(label, row);
}

inline std::string quarterly_label(int period) {
    int year = period / 4;
    int q = period % 4;
    if (q < 0) {
        q += 4;
        year -= 1;
    }
    return std::to_string(year) + "Q" + std::to_string(q + 1);
}

inline std::string monthly_label(int period) {
    int year = period / 12;
    int m = period % 12;
    if (m < 0) {
        m += 12;
        year -= 1;
    }
    std::string ms = std::to_string(m + 1);
    if (ms.size() == 1) ms = "0" + ms;
    return std::to_string(year) + "-" + ms;
}

inline std::string label(int period, Frequency f) {
    return f == Frequency::quarterly ? quarterly_label(period) : monthly_label(period);
}

/// Label shifted forward by `steps` periods.
inline std::string shift_label(const std::string& base, Frequency f, int steps) {
    return label(parse_period(base, f, 0) + steps, f);
}

} // namespace dates

/// Aligned multivariate time series. `values` is row-major T x N; `mask`
/// marks missing entries (the matching value cell holds NaN).
struct TimeSeriesPanel {
    std::vector<std::string> names;
    std::vector<std::string> index;
    Frequency frequency = Frequency::quarterly;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    std::size_t rows() const { return index.size(); }
    std::size_t cols() const { return names.size(); }

    double at(std::size_t t, std::size_t j) const { return values[t * cols() + j]; }
    double& at(std::size_t t, std::size_t j) { return values[t * cols() + j]; }
    bool missing(std::size_t t, std::size_t j) const { return mask[t * cols() + j] != 0; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows());
        for (std::size_t t = 0; t < rows(); ++t) out[t] = at(t, j);
        return out;
    }

    int column_index(const std::string& name) const {
        const auto it = std::find(names.begin(), names.end(), name);
        return it == names.end() ? -1 : static_cast<int>(it - names.begin());
    }

    bool any_missing() const {
        return std::any_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; });
    }

    /// Row range [begin, end) of the longest run with every variable observed.
    std::pair<std::size_t, std::size_t> longest_complete_span() const {
        std::size_t best_begin = 0, best_len = 0, run_begin = 0, run_len = 0;
        for (std::size_t t = 0; t < rows(); ++t) {
            bool complete = true;
            for (std::size_t j = 0; j < cols(); ++j) {
                if (missing(t, j)) {
                    complete = false;
                    break;
                }
            }
            if (complete) {
                if (run_len == 0) run_begin = t;
                ++run_len;
                if (run_len > best_len) {
                    best_len = run_len;
                    best_begin = run_begin;
                }
            } else {
                run_len = 0;
            }
        }
        return {best_begin, best_begin + best_len};
    }

    /// Copy of the row range [begin, end).
    TimeSeriesPanel slice_rows(std::size_t begin, std::size_t end) const {
        TimeSeriesPanel out;
        out.names = names;
        out.frequency = frequency;
        out.index.assign(index.begin() + static_cast<std::ptrdiff_t>(begin),
                         index.begin() + static_cast<std::ptrdiff_t>(end));
        out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(begin * cols()),
                          values.begin() + static_cast<std::ptrdiff_t>(end * cols()));
        out.mask.assign(mask.begin() + static_cast<std::ptrdiff_t>(begin * cols()),
                        mask.begin() + static_cast<std::ptrdiff_t>(end * cols()));
        return out;
    }

    void validate() const {
        const std::size_t t = rows(), n = cols();
        if (values.size() != t * n || mask.size() != t * n) {
            throw DataError("panel dimensions do not match index length x variable count");
        }
        for (std::size_t r = 0; r + 1 < t; ++r) {
            const int a = dates::parse_period(index[r], frequency, r + 1);
            const int b = dates::parse_period(index[r + 1], frequency, r + 2);
            if (b <= a) throw DataError("index not strictly increasing at '" + index[r + 1] + "'");
            if (b != a + 1) {
                throw DataError("index gap between '" + index[r] + "' and '" + index[r + 1] +
                                "' (use masked rows for missing periods)");
            }
        }
        for (std::size_t r = 0; r < t; ++r) {
            for (std::size_t j = 0; j < n; ++j) {
                if (!missing(r, j) && !std::isfinite(at(r, j))) {
                    throw DataError("non-finite value outside mask at row " + std::to_string(r + 1) +
                                    ", variable '" + names[j] + "'");
                }
            }
        }
    }
};

/// Per-variable affine scaling state produced by standard_scale.
struct ScalingParams {
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<double> scale; // population standard deviation, > 0
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline bool is_missing_token(const std::string& s) {
    if (s.empty()) return true;
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return lower == "na" || lower == "nan" || lower == "null";
}

} // namespace detail

/// Loads a comma-separated panel. First column is the date unless
/// `date_column` names another header. Rows are re-sorted by date.
inline TimeSeriesPanel load_csv(const std::string& path, const std::string& date_column = "",
                                Frequency frequency = Frequency::quarterly) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("data file '" + path + "' is empty");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 2) throw DataError("header must contain a date column and at least one variable");

    std::size_t date_idx = 0;
    if (!date_column.empty()) {
        bool found = false;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (detail::trim(header[i]) == date_column) {
                date_idx = i;
                found = true;
                break;
            }
        }
        if (!found) throw DataError("date column '" + date_column + "' not found in header");
    }

    TimeSeriesPanel panel;
    panel.frequency = frequency;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i != date_idx) panel.names.push_back(detail::trim(header[i]));
    }
    const std::size_t n = panel.names.size();

    struct Row {
        int period;
        std::string label;
        std::vector<double> vals;
        std::vector<std::uint8_t> miss;
    };
    std::vector<Row> rows;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row_no;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("ragged row " + std::to_string(row_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        Row row;
        row.label = detail::trim(fields[date_idx]);
        row.period = dates::parse_period(row.label, frequency, row_no);
        row.label = dates::label(row.period, frequency); // canonical form
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == date_idx) continue;
            const std::string cell = detail::trim(fields[i]);
            if (detail::is_missing_token(cell)) {
                row.vals.push_back(std::numeric_limits<double>::quiet_NaN());
                row.miss.push_back(1);
                continue;
            }
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument("trailing");
                row.vals.push_back(v);
                row.miss.push_back(0);
            } catch (const std::exception&) {
                throw DataError("parse error at row " + std::to_string(row_no) + ": cannot read value '" +
                                cell + "' for variable '" + panel.names[i < date_idx ? i : i - 1] + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("data file '" + path + "' has no data rows");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.period < b.period; });
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        if (rows[i].period == rows[i + 1].period) {
            throw DataError("duplicate timestamp '" + rows[i].label + "'");
        }
    }

    panel.index.reserve(rows.size());
    panel.values.reserve(rows.size() * n);
    panel.mask.reserve(rows.size() * n);
    for (auto& row : rows) {
        panel.index.push_back(row.label);
        panel.values.insert(panel.values.end(), row.vals.begin(), row.vals.end());
        panel.mask.insert(panel.mask.end(), row.miss.begin(), row.miss.end());
    }
    panel.validate();
    return panel;
}

/// Means of consecutive month-triples. The series must start on a quarter
/// boundary; a trailing partial quarter is a coverage error.
inline std::vector<double> aggregate_quarterly_values(const std::vector<double>& monthly) {
    if (monthly.size() % 3 != 0) {
        throw DataError("quarter " + std::to_string(monthly.size() / 3 + 1) +
                        " is only partially covered (" + std::to_string(monthly.size() % 3) + " of 3 months)");
    }
    std::vector<double> out;
    out.reserve(monthly.size() / 3);
    for (std::size_t i = 0; i < monthly.size(); i += 3) {
        out.push_back((monthly[i] + monthly[i + 1] + monthly[i + 2]) / 3.0);
    }
    return out;
}

/// Monthly panel -> quarterly panel; every quarter must be fully observed or
/// fully missing per variable.
inline TimeSeriesPanel aggregate_quarterly(const TimeSeriesPanel& panel) {
    if (panel.frequency != Frequency::monthly) {
        throw ConfigError("aggregate_quarterly requires a monthly panel");
    }
    panel.validate();
    const int first = dates::parse_monthly(panel.index.front(), 1);
    if (first % 3 != 0) {
        throw DataError("monthly index must start on a quarter boundary, got '" + panel.index.front() + "'");
    }
    const std::size_t t = panel.rows(), n = panel.cols();
    if (t % 3 != 0) {
        const int q_period = (first + static_cast<int>(t / 3) * 3) / 3;
        throw DataError("quarter '" + dates::quarterly_label(q_period) + "' is only partially covered");
    }

    TimeSeriesPanel out;
    out.names = panel.names;
    out.frequency = Frequency::quarterly;
    const std::size_t tq = t / 3;
    out.values.assign(tq * n, std::numeric_limits<double>::quiet_NaN());
    out.mask.assign(tq * n, 0);
    for (std::size_t q = 0; q < tq; ++q) {
        out.index.push_back(dates::quarterly_label((first + static_cast<int>(q) * 3) / 3));
        for (std::size_t j = 0; j < n; ++j) {
            int present = 0;
            double sum = 0.0;
            for (std::size_t m = 0; m < 3; ++m) {
                if (!panel.missing(q * 3 + m, j)) {
                    ++present;
                    sum += panel.at(q * 3 + m, j);
                }
            }
            if (present == 3) {
                out.at(q, j) = sum / 3.0;
            } else if (present == 0) {
                out.mask[q * n + j] = 1;
            } else {
                throw DataError("quarter '" + out.index.back() + "' of variable '" + panel.names[j] +
                                "' is only partially covered (" + std::to_string(present) + " of 3 months)");
            }
        }
    }
    out.validate();
    return out;
}

/// Centers and scales each variable to mean 0, population sd 1, computed on
/// unmasked entries. Constant variables are rejected.
inline std::pair<TimeSeriesPanel, ScalingParams> standard_scale(const TimeSeriesPanel& panel) {
    const std::size_t t = panel.rows(), n = panel.cols();
    ScalingParams params;
    params.names = panel.names;
    params.mean.resize(n);
    params.scale.resize(n);

    TimeSeriesPanel out = panel;
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> obs;
        obs.reserve(t);
        for (std::size_t r = 0; r < t; ++r) {
            if (!panel.missing(r, j)) obs.push_back(panel.at(r, j));
        }
        if (obs.size() < 2) {
            throw DataError("variable '" + panel.names[j] + "' has fewer than 2 observed values");
        }
        const double mu = detail::mean(obs);
        const double sd = detail::population_sd(obs);
        if (sd < 1e-12 * std::max(1.0, std::fabs(mu))) {
            throw DataError("variable '" + panel.names[j] + "' is constant: degenerate scale");
        }
        params.mean[j] = mu;
        params.scale[j] = sd;
        for (std::size_t r = 0; r < t; ++r) {
            if (!panel.missing(r, j)) out.at(r, j) = (panel.at(r, j) - mu) / sd;
        }
    }
    return {std::move(out), std::move(params)};
}

/// Undoes standard_scale. Variable names must match the params exactly.
inline TimeSeriesPanel inverse_scale(const TimeSeriesPanel& panel, const ScalingParams& params) {
    if (panel.names != params.names) {
        throw ConfigError("scaling params were computed for different variables");
    }
    TimeSeriesPanel out = panel;
    for (std::size_t j = 0; j < panel.cols(); ++j) {
        for (std::size_t r = 0; r < panel.rows(); ++r) {
            if (!panel.missing(r, j)) out.at(r, j) = panel.at(r, j) * params.scale[j] + params.mean[j];
        }
    }
    return out;
}

} // namespace causalcast
