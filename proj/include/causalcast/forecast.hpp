#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "causalcast/common.hpp"
#include "causalcast/predictor.hpp"
#include "causalcast/quantizer.hpp"
#include "causalcast/rng.hpp"

namespace causalcast {

/// Sampled probabilistic forecast for one origin. Samples and quantile bands
/// are in value space (dequantized and rescaled by `scale`).
struct ForecastBundle {
    std::string origin;  // timestamp label of the first forecast step
    int horizon = 0;
    double scale = 1.0;
    std::vector<std::vector<double>> samples;          // n_samples x horizon
    std::vector<double> quantile_levels;               // ascending
    std::vector<std::vector<double>> quantiles;        // levels x horizon
    std::vector<std::vector<int>> token_traces;        // optional, n_samples x horizon

    int band_index(double level) const {
        for (std::size_t i = 0; i < quantile_levels.size(); ++i) {
            if (std::fabs(quantile_levels[i] - level) < 1e-12) return static_cast<int>(i);
        }
        return -1;
    }
};

/// Nearest-rank empirical quantiles per horizon step.
inline std::vector<std::vector<double>> forecast_quantiles(const std::vector<std::vector<double>>& samples,
                                                           const std::vector<double>& levels) {
    if (samples.size() < 20) {
        throw ConfigError("forecast_quantiles: need at least 20 sample trajectories, got " +
                          std::to_string(samples.size()));
    }
    const std::size_t horizon = samples.front().size();
    const std::size_t n = samples.size();
    std::vector<std::vector<double>> out(levels.size(), std::vector<double>(horizon));
    std::vector<double> step(n);
    for (std::size_t h = 0; h < horizon; ++h) {
        for (std::size_t i = 0; i < n; ++i) step[i] = samples[i][h];
        std::sort(step.begin(), step.end());
        for (std::size_t li = 0; li < levels.size(); ++li) {
            const double level = levels[li];
            if (level <= 0.0 || level > 1.0) throw ConfigError("quantile level must lie in (0, 1]");
            auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n)));
            rank = std::clamp<std::size_t>(rank, 1, n);
            out[li][h] = step[rank - 1];
        }
    }
    return out;
}

/// Autoregressive trajectory sampling: each drawn token feeds back into the
/// context; PAD/EOS draws are rejected and redrawn since the horizon is fixed
/// by the caller. Per-trajectory sub-seeds make the bundle independent of the
/// thread count.
inline ForecastBundle sample_forecast(const TokenPredictor& model, const std::vector<int>& context_tokens,
                                      int horizon, int n_samples, std::uint64_t seed, const Quantizer& q,
                                      double scale, bool keep_tokens = false, int n_threads = 1,
                                      const std::vector<double>& levels = {0.05, 0.5, 0.95}) {
    if (horizon < 1) throw ConfigError("forecast horizon must be >= 1");
    if (n_samples < 1) throw ConfigError("need at least one sample trajectory");

    ForecastBundle bundle;
    bundle.horizon = horizon;
    bundle.scale = scale;
    bundle.quantile_levels = levels;
    bundle.samples.assign(static_cast<std::size_t>(n_samples),
                          std::vector<double>(static_cast<std::size_t>(horizon)));
    if (keep_tokens) {
        bundle.token_traces.assign(static_cast<std::size_t>(n_samples),
                                   std::vector<int>(static_cast<std::size_t>(horizon)));
    }

    parallel_for(static_cast<std::size_t>(n_samples), n_threads, [&](std::size_t traj) {
        Rng rng(derive_seed(seed, traj));
        std::vector<int> ctx = context_tokens;
        for (int h = 0; h < horizon; ++h) {
            const auto dist = model.conditional(ctx);
            int token = 0;
            for (int attempt = 0; attempt < 100000; ++attempt) {
                const double u = rng.uniform();
                double acc = 0.0;
                token = q.vocab_size(); // fallback to the last id on rounding shortfall
                for (int tok = 1; tok <= q.vocab_size(); ++tok) {
                    acc += dist[static_cast<std::size_t>(tok - 1)];
                    if (u < acc) {
                        token = tok;
                        break;
                    }
                }
                if (!q.is_special(token)) break;
            }
            if (q.is_special(token)) {
                // Smoothing guarantees positive mass on value bins, so this
                // only triggers on astronomically unlucky rejection streaks.
                token = 1;
            }
            ctx.push_back(token);
            bundle.samples[traj][static_cast<std::size_t>(h)] = q.dequantize(token) * scale;
            if (keep_tokens) bundle.token_traces[traj][static_cast<std::size_t>(h)] = token;
        }
    });

    bundle.quantiles = forecast_quantiles(bundle.samples, levels);
    return bundle;
}

/// Rolling-origin protocol configuration. Defaults mirror the quarterly
/// setup: ten-year context, one-year horizon, origins advancing one year.
struct RollingConfig {
    int context_len = 40;
    int horizon = 4;
    int step = 4;
    int bins = 64;
    double scaled_lo = -15.0;
    double scaled_hi = 15.0;
    int order = 3;
    double gamma = 0.5;
    int n_samples = 200;
    std::uint64_t seed = 0;
    bool keep_tokens = false;
    int n_threads = 1;
    std::vector<double> levels = {0.05, 0.5, 0.95};

    void validate() const {
        if (context_len < 1 || horizon < 1 || step < 1) {
            throw ConfigError("context_len, horizon and step must be >= 1");
        }
        if (n_samples < 20) throw ConfigError("n_samples must be >= 20");
    }
};

namespace detail {

// Training corpus for one origin: sliding windows over the history prefix,
// each scaled by the mean absolute value of its context part and terminated
// with EOS. Windows whose context part is all zeros are skipped.
inline std::vector<std::vector<int>> training_corpus(const std::vector<double>& prefix,
                                                     const RollingConfig& cfg, const Quantizer& q) {
    std::vector<std::vector<int>> corpus;
    const std::size_t window = static_cast<std::size_t>(cfg.context_len + cfg.horizon);
    const std::size_t len = std::min(prefix.size(), window);
    if (len < 2) return corpus;
    const std::size_t scale_len = std::min<std::size_t>(static_cast<std::size_t>(cfg.context_len), len);
    for (std::size_t start = 0; start + len <= prefix.size(); ++start) {
        const std::vector<double> win(prefix.begin() + static_cast<std::ptrdiff_t>(start),
                                      prefix.begin() + static_cast<std::ptrdiff_t>(start + len));
        const std::vector<double> ctx_part(win.begin(), win.begin() + static_cast<std::ptrdiff_t>(scale_len));
        double s = 0.0;
        for (double x : ctx_part) s += std::fabs(x);
        s /= static_cast<double>(ctx_part.size());
        if (s <= 0.0) continue;
        std::vector<double> scaled;
        scaled.reserve(win.size());
        for (double x : win) scaled.push_back(x / s);
        corpus.push_back(encode_training(scaled, q));
    }
    return corpus;
}

} // namespace detail

/// Rolling-origin forecasts with expanding training history: the predictor
/// for each origin is trained only on data strictly before it, while the
/// quantizer (bin layout) is shared across origins. `labels`, when given,
/// names each forecast origin by the timestamp of its first forecast step.
inline std::vector<ForecastBundle> rolling_forecast(const std::vector<double>& series,
                                                    const RollingConfig& cfg,
                                                    const std::vector<std::string>& labels = {}) {
    cfg.validate();
    const std::size_t need = static_cast<std::size_t>(cfg.context_len + cfg.horizon);
    if (series.size() < need) {
        throw DataError("insufficient history: need at least " + std::to_string(need) +
                        " points, got " + std::to_string(series.size()));
    }
    if (!labels.empty() && labels.size() != series.size()) {
        throw ConfigError("labels length must match the series");
    }
    const Quantizer q = build_quantizer(cfg.bins, cfg.scaled_lo, cfg.scaled_hi);

    std::vector<ForecastBundle> bundles;
    for (std::size_t fstart = static_cast<std::size_t>(cfg.context_len);
         fstart + static_cast<std::size_t>(cfg.horizon) <= series.size();
         fstart += static_cast<std::size_t>(cfg.step)) {
        const std::vector<double> prefix(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(fstart));
        const auto corpus = detail::training_corpus(prefix, cfg, q);
        TokenPredictor model(cfg.order, cfg.gamma, q.vocab_size());
        for (const auto& seq : corpus) model.observe_sequence(seq);

        const std::vector<double> context(series.begin() + static_cast<std::ptrdiff_t>(fstart) - cfg.context_len,
                                          series.begin() + static_cast<std::ptrdiff_t>(fstart));
        const ScaledContext sc = mean_scale(context);
        const auto ctx_tokens = tokenize(sc.values, q);

        auto bundle = sample_forecast(model, ctx_tokens, cfg.horizon, cfg.n_samples,
                                      derive_seed(cfg.seed, fstart), q, sc.scale, cfg.keep_tokens,
                                      cfg.n_threads, cfg.levels);
        bundle.origin = labels.empty() ? "t+" + std::to_string(fstart) : labels[fstart];
        bundles.push_back(std::move(bundle));
    }
    return bundles;
}

} // namespace causalcast
