#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "causalcast/common.hpp"

namespace causalcast {

/// A context window normalised by its mean absolute value. Zeros stay zero,
/// and any positive rescaling of the input cancels out.
struct ScaledContext {
    double scale = 1.0;           // s = (1/C) sum |x_i|, > 0
    std::vector<double> values;   // x_i / s
    int context_len = 0;
};

inline ScaledContext mean_scale(const std::vector<double>& context) {
    if (context.empty()) throw ConfigError("mean_scale: empty context");
    double s = 0.0;
    for (double x : context) s += std::fabs(x);
    s /= static_cast<double>(context.size());
    if (s <= 0.0) throw DataError("mean_scale: all-zero context has no scale");
    ScaledContext out;
    out.scale = s;
    out.context_len = static_cast<int>(context.size());
    out.values.reserve(context.size());
    for (double x : context) out.values.push_back(x / s);
    return out;
}

/// Uniform binning of the scaled axis into B bins. Token ids are 1-based:
/// bins 1..B, then PAD = B+1 and EOS = B+2 (vocabulary size B+2).
struct Quantizer {
    int bins = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> centers; // c_1 < ... < c_B, equally spaced
    std::vector<double> edges;   // b_i = (c_i + c_{i+1}) / 2

    int pad_token() const { return bins + 1; }
    int eos_token() const { return bins + 2; }
    int vocab_size() const { return bins + 2; }
    bool is_special(int token) const { return token > bins; }

    /// Bin id of v; v is clamped into [lo, hi] and values exactly on edge b_i
    /// go to bin i+1.
    int quantize(double v) const {
        const double x = std::clamp(v, lo, hi);
        const auto it = std::upper_bound(edges.begin(), edges.end(), x,
                                         [](double value, double edge) { return value < edge; });
        return static_cast<int>(it - edges.begin()) + 1;
    }

    /// Center of bin j. Special tokens carry no value.
    double dequantize(int token) const {
        if (token < 1 || token > bins) {
            throw ConfigError("dequantize: token " + std::to_string(token) +
                              " is not a value bin (PAD/EOS carry no value)");
        }
        return centers[static_cast<std::size_t>(token - 1)];
    }
};

inline Quantizer build_quantizer(int bins, double lo, double hi) {
    if (bins < 2) throw ConfigError("quantizer needs at least 2 bins");
    if (!(lo < hi)) throw ConfigError("quantizer range requires lo < hi");
    Quantizer q;
    q.bins = bins;
    q.lo = lo;
    q.hi = hi;
    const double w = (hi - lo) / static_cast<double>(bins);
    q.centers.resize(static_cast<std::size_t>(bins));
    for (int j = 0; j < bins; ++j) {
        q.centers[static_cast<std::size_t>(j)] = lo + w * (static_cast<double>(j) + 0.5);
    }
    q.edges.resize(static_cast<std::size_t>(bins) - 1);
    for (int i = 0; i + 1 < bins; ++i) {
        q.edges[static_cast<std::size_t>(i)] =
            0.5 * (q.centers[static_cast<std::size_t>(i)] + q.centers[static_cast<std::size_t>(i) + 1]);
    }
    return q;
}

/// Per-value tokens of an already-scaled context.
inline std::vector<int> tokenize(const std::vector<double>& scaled, const Quantizer& q) {
    std::vector<int> out;
    out.reserve(scaled.size());
    for (double v : scaled) out.push_back(q.quantize(v));
    return out;
}

/// Training encoding: value tokens plus a terminating EOS.
inline std::vector<int> encode_training(const std::vector<double>& scaled, const Quantizer& q) {
    auto out = tokenize(scaled, q);
    out.push_back(q.eos_token());
    return out;
}

/// Left-pads with PAD up to `window` tokens (used when batching contexts).
inline std::vector<int> pad_left(const std::vector<int>& tokens, std::size_t window, const Quantizer& q) {
    if (tokens.size() >= window) return tokens;
    std::vector<int> out(window - tokens.size(), q.pad_token());
    out.insert(out.end(), tokens.begin(), tokens.end());
    return out;
}

} // namespace causalcast
