#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "causalcast/common.hpp"
#include "causalcast/distributions.hpp"
#include "causalcast/forecast.hpp"

namespace causalcast {

/// Actual observations aligned to a bundle list: one row per bundle, one
/// value (and timestamp label) per horizon step.
struct AlignedActuals {
    std::vector<std::vector<double>> values;
    std::vector<std::vector<std::string>> labels;

    void check_against(const std::vector<ForecastBundle>& bundles) const {
        if (values.size() != bundles.size()) {
            throw DataError("alignment error: " + std::to_string(values.size()) + " actual rows vs " +
                            std::to_string(bundles.size()) + " bundles");
        }
        for (std::size_t i = 0; i < bundles.size(); ++i) {
            if (static_cast<int>(values[i].size()) != bundles[i].horizon) {
                throw DataError("alignment error: bundle '" + bundles[i].origin + "' expects " +
                                std::to_string(bundles[i].horizon) + " actuals, got " +
                                std::to_string(values[i].size()));
            }
        }
    }
};

/// Interval-hit counts per horizon step h = 1..H.
struct CoverageCounts {
    int horizon = 0;
    std::vector<int> trials;    // n per horizon
    std::vector<int> successes; // k per horizon
};

/// Beta(k+0.5, n-k+0.5) coverage posterior under the Jeffreys prior.
struct PosteriorSummary {
    double a = 0.5;
    double b = 0.5;
    double mean = 0.5;
    double ci_lo = 0.0; // equal-tailed 90% credible interval
    double ci_hi = 1.0;
};

struct AnomalyFlag {
    std::string timestamp;
    double observed = 0.0;
    double tail_prob = 0.5; // min of lower/upper continuity-corrected tails
    bool flagged = false;
    double alpha = 0.05;
};

struct BinomialCalibration {
    double expected_mean = 0.0;
    double expected_sd = 0.0;
    double z_score = 0.0;
    bool within_two_sd = true;
};

namespace detail {

inline std::pair<const std::vector<double>*, const std::vector<double>*> central_band(
    const ForecastBundle& bundle, double level) {
    const double tail = 0.5 * (1.0 - level);
    const int lo = bundle.band_index(tail);
    const int hi = bundle.band_index(1.0 - tail);
    if (lo < 0 || hi < 0) {
        throw ConfigError("bundle '" + bundle.origin + "' lacks the quantile levels for a " +
                          std::to_string(level) + " central band");
    }
    return {&bundle.quantiles[static_cast<std::size_t>(lo)],
            &bundle.quantiles[static_cast<std::size_t>(hi)]};
}

inline std::size_t common_horizon(const std::vector<ForecastBundle>& bundles) {
    if (bundles.empty()) throw ConfigError("no forecast bundles given");
    return static_cast<std::size_t>(bundles.front().horizon);
}

} // namespace detail

/// Per-horizon counts of observations inside the central `level` band.
/// Band boundaries count as covered.
inline CoverageCounts coverage_counts(const AlignedActuals& actuals,
                                      const std::vector<ForecastBundle>& bundles, double level = 0.90) {
    actuals.check_against(bundles);
    const std::size_t h = detail::common_horizon(bundles);
    CoverageCounts out;
    out.horizon = static_cast<int>(h);
    out.trials.assign(h, 0);
    out.successes.assign(h, 0);
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        const auto [lo, hi] = detail::central_band(bundles[i], level);
        for (std::size_t step = 0; step < h; ++step) {
            const double y = actuals.values[i][step];
            out.trials[step] += 1;
            if (y >= (*lo)[step] && y <= (*hi)[step]) out.successes[step] += 1;
        }
    }
    return out;
}

/// Jeffreys-prior Beta posterior for k successes in n trials, with mean and
/// equal-tailed 90% credible interval.
inline PosteriorSummary beta_posterior(int k, int n) {
    if (k < 0 || n < 0 || k > n) throw ConfigError("beta_posterior: need 0 <= k <= n");
    PosteriorSummary s;
    s.a = static_cast<double>(k) + 0.5;
    s.b = static_cast<double>(n - k) + 0.5;
    s.mean = s.a / (s.a + s.b);
    s.ci_lo = beta_quantile(0.05, s.a, s.b);
    s.ci_hi = beta_quantile(0.95, s.a, s.b);
    return s;
}

struct DistributionSummary {
    double mean = 0.0;
    double median = 0.0;
    double iqr = 0.0;
};

inline DistributionSummary summarize(std::vector<double> xs) {
    DistributionSummary s;
    if (xs.empty()) return s;
    double total = 0.0;
    for (double x : xs) total += x;
    s.mean = total / static_cast<double>(xs.size());
    std::sort(xs.begin(), xs.end());
    const auto q = [&](double level) {
        auto rank = static_cast<std::size_t>(std::ceil(level * static_cast<double>(xs.size())));
        rank = std::clamp<std::size_t>(rank, 1, xs.size());
        return xs[rank - 1];
    };
    s.median = q(0.5);
    s.iqr = q(0.75) - q(0.25);
    return s;
}

/// Absolute errors |y - median forecast| per horizon, with summaries.
struct ErrorDistributions {
    std::vector<std::vector<double>> per_horizon;
    std::vector<DistributionSummary> summaries;
};

inline ErrorDistributions error_distributions(const AlignedActuals& actuals,
                                              const std::vector<ForecastBundle>& bundles) {
    actuals.check_against(bundles);
    const std::size_t h = detail::common_horizon(bundles);
    ErrorDistributions out;
    out.per_horizon.assign(h, {});
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        const int med = bundles[i].band_index(0.5);
        if (med < 0) throw ConfigError("bundle '" + bundles[i].origin + "' lacks the median band");
        const auto& median_band = bundles[i].quantiles[static_cast<std::size_t>(med)];
        for (std::size_t step = 0; step < h; ++step) {
            out.per_horizon[step].push_back(std::fabs(actuals.values[i][step] - median_band[step]));
        }
    }
    for (const auto& xs : out.per_horizon) out.summaries.push_back(summarize(xs));
    return out;
}

/// 90% interval widths (upper minus lower band) per horizon, with summaries.
struct IntervalWidths {
    std::vector<std::vector<double>> per_horizon;
    std::vector<DistributionSummary> summaries;
};

inline IntervalWidths interval_widths(const std::vector<ForecastBundle>& bundles, double level = 0.90) {
    const std::size_t h = detail::common_horizon(bundles);
    IntervalWidths out;
    out.per_horizon.assign(h, {});
    for (const auto& bundle : bundles) {
        const auto [lo, hi] = detail::central_band(bundle, level);
        for (std::size_t step = 0; step < h; ++step) {
            out.per_horizon[step].push_back((*hi)[step] - (*lo)[step]);
        }
    }
    for (const auto& xs : out.per_horizon) out.summaries.push_back(summarize(xs));
    return out;
}

/// Under perfect calibration, violations ~ Binomial(n, p); reports how many
/// standard deviations the observed count sits from the mean.
inline BinomialCalibration binomial_calibration(int violations, int n, double p = 0.10) {
    if (violations < 0 || violations > n) throw ConfigError("violations must lie in [0, n]");
    if (p <= 0.0 || p >= 1.0) throw ConfigError("p must lie in (0, 1)");
    BinomialCalibration c;
    c.expected_mean = static_cast<double>(n) * p;
    c.expected_sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
    c.z_score = (static_cast<double>(violations) - c.expected_mean) / c.expected_sd;
    c.within_two_sd = std::fabs(c.z_score) <= 2.0;
    return c;
}

/// Flags observations in the tails of the sampled predictive distribution.
/// Tail probabilities carry an add-one continuity correction, so they are
/// strictly inside (0, 1); a point is flagged when min(lower, upper) < alpha.
inline std::vector<AnomalyFlag> anomaly_flags(const AlignedActuals& actuals,
                                              const std::vector<ForecastBundle>& bundles,
                                              double alpha = 0.05) {
    actuals.check_against(bundles);
    if (alpha <= 0.0 || alpha >= 1.0) throw ConfigError("alpha must lie in (0, 1)");
    std::vector<AnomalyFlag> out;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        const auto& bundle = bundles[i];
        if (bundle.samples.empty()) {
            throw ConfigError("bundle '" + bundle.origin + "' retains no sample trajectories");
        }
        const auto n = static_cast<double>(bundle.samples.size());
        for (std::size_t step = 0; step < static_cast<std::size_t>(bundle.horizon); ++step) {
            const double y = actuals.values[i][step];
            std::size_t at_or_below = 0, at_or_above = 0;
            for (const auto& traj : bundle.samples) {
                if (traj[step] <= y) ++at_or_below;
                if (traj[step] >= y) ++at_or_above;
            }
            AnomalyFlag flag;
            flag.timestamp = (i < actuals.labels.size() && step < actuals.labels[i].size())
                                 ? actuals.labels[i][step]
                                 : bundle.origin + "+" + std::to_string(step);
            flag.observed = y;
            flag.alpha = alpha;
            const double lower = (1.0 + static_cast<double>(at_or_below)) / (n + 1.0);
            const double upper = (1.0 + static_cast<double>(at_or_above)) / (n + 1.0);
            flag.tail_prob = std::min(lower, upper);
            flag.flagged = flag.tail_prob < alpha;
            out.push_back(flag);
        }
    }
    return out;
}

} // namespace causalcast
