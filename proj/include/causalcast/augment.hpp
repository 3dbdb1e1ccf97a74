#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "causalcast/common.hpp"
#include "causalcast/gp.hpp"
#include "causalcast/quantizer.hpp"
#include "causalcast/rng.hpp"

namespace causalcast {

struct TSMixupConfig {
    int max_series = 3;          // K
    double dirichlet_alpha = 1.5;
    int length_min = 64;
    int length_max = 512;

    void validate() const {
        if (max_series < 1) throw ConfigError("tsmixup: K must be >= 1");
        if (dirichlet_alpha <= 0.0) throw ConfigError("tsmixup: dirichlet alpha must be > 0");
        if (length_min < 1 || length_min > length_max) {
            throw ConfigError("tsmixup: need 1 <= length_min <= length_max");
        }
    }
};

/// One TSMixup draw plus the randomness that produced it.
struct TSMixupResult {
    std::vector<double> series;
    std::vector<std::size_t> pool_indices;
    std::vector<std::size_t> window_starts;
    std::vector<double> weights; // Dirichlet draw, sums to 1
    int length = 0;
};

/// Dirichlet-weighted convex combination of mean-scaled random windows of
/// k <= K pool series. Windows are drawn independently per series.
inline TSMixupResult tsmixup(const std::vector<std::vector<double>>& pool, const TSMixupConfig& cfg,
                             std::uint64_t seed) {
    cfg.validate();
    if (pool.empty()) throw ConfigError("tsmixup: empty series pool");
    Rng rng(seed);

    const int k = static_cast<int>(rng.uniform_int(1, cfg.max_series));
    const int len = static_cast<int>(rng.uniform_int(cfg.length_min, cfg.length_max));

    TSMixupResult out;
    out.length = len;
    out.weights = rng.dirichlet(cfg.dirichlet_alpha, k);
    out.series.assign(static_cast<std::size_t>(len), 0.0);
    for (int i = 0; i < k; ++i) {
        const auto pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
        const auto& src = pool[pick];
        if (src.size() < static_cast<std::size_t>(len)) {
            throw ConfigError("tsmixup: pool series " + std::to_string(pick) + " is shorter than the drawn length " +
                              std::to_string(len));
        }
        const auto start =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(src.size() - static_cast<std::size_t>(len))));
        const std::vector<double> window(src.begin() + static_cast<std::ptrdiff_t>(start),
                                         src.begin() + static_cast<std::ptrdiff_t>(start + static_cast<std::size_t>(len)));
        const ScaledContext scaled = mean_scale(window);
        for (int t = 0; t < len; ++t) {
            out.series[static_cast<std::size_t>(t)] +=
                out.weights[static_cast<std::size_t>(i)] * scaled.values[static_cast<std::size_t>(t)];
        }
        out.pool_indices.push_back(pick);
        out.window_starts.push_back(start);
    }
    return out;
}

// ---------------------------------------------------------------------------
// KernelSynth

enum class KernelPrimitive { linear, periodic, squared_exponential };
enum class KernelOp { add, multiply };

/// Expression tree of primitive kernels combined with + and *; both operators
/// preserve positive semidefiniteness.
struct KernelExpr {
    struct Term {
        KernelPrimitive kind = KernelPrimitive::squared_exponential;
        double param = 1.0; // period, length scale, or linear offset
    };
    std::vector<Term> terms;
    std::vector<KernelOp> ops; // ops[i] combines terms[i] and terms[i+1]

    double eval(double t, double u) const {
        double acc = eval_term(terms.front(), t, u);
        for (std::size_t i = 0; i < ops.size(); ++i) {
            const double next = eval_term(terms[i + 1], t, u);
            acc = (ops[i] == KernelOp::add) ? acc + next : acc * next;
        }
        return acc;
    }

    static double eval_term(const Term& term, double t, double u) {
        switch (term.kind) {
            case KernelPrimitive::linear:
                return (t - term.param) * (u - term.param);
            case KernelPrimitive::periodic: {
                const double s = std::sin(std::acos(-1.0) * (t - u) / term.param);
                return std::exp(-2.0 * s * s);
            }
            default: {
                const double d = t - u;
                return std::exp(-d * d / (2.0 * term.param * term.param));
            }
        }
    }
};

/// Random kernel composition: j ~ U{1..J} primitives with parameters from the
/// documented ranges (period in [0.05, 0.5], length scale in [0.05, 1],
/// linear offset in [0, 1], all on the unit grid span), folded left with
/// uniformly chosen operators.
inline KernelExpr sample_kernel(int max_terms, std::uint64_t seed) {
    if (max_terms < 1) throw ConfigError("sample_kernel: max_terms must be >= 1");
    Rng rng(seed);
    const int j = static_cast<int>(rng.uniform_int(1, max_terms));
    KernelExpr expr;
    for (int i = 0; i < j; ++i) {
        KernelExpr::Term term;
        switch (rng.uniform_int(0, 2)) {
            case 0:
                term.kind = KernelPrimitive::linear;
                term.param = rng.uniform(0.0, 1.0);
                break;
            case 1:
                term.kind = KernelPrimitive::periodic;
                term.param = rng.uniform(0.05, 0.5);
                break;
            default:
                term.kind = KernelPrimitive::squared_exponential;
                term.param = rng.uniform(0.05, 1.0);
                break;
        }
        expr.terms.push_back(term);
        if (i > 0) {
            expr.ops.push_back(rng.uniform_int(0, 1) == 0 ? KernelOp::add : KernelOp::multiply);
        }
    }
    return expr;
}

/// Kernel matrix on the grid {0, 1/(n-1), ..., 1}.
inline Eigen::MatrixXd kernel_matrix(const KernelExpr& expr, int n) {
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i) {
        const double ti = static_cast<double>(i) / static_cast<double>(n - 1);
        for (int j = i; j < n; ++j) {
            const double tj = static_cast<double>(j) / static_cast<double>(n - 1);
            const double v = expr.eval(ti, tj);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

/// Draws one series of length n from the zero-mean GP prior with the given
/// composite kernel (Cholesky with jitter escalation 1e-8 -> 1e-5).
inline std::vector<double> kernelsynth(int n, const KernelExpr& expr, std::uint64_t seed) {
    if (n < 2) throw ConfigError("kernelsynth: need n >= 2");
    const Eigen::MatrixXd k = kernel_matrix(expr, n);
    Eigen::LLT<Eigen::MatrixXd> llt;
    detail::cholesky_with_jitter(k, llt, 1e-8, 1e-5);
    Rng rng(seed);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    const Eigen::VectorXd draw = llt.matrixL() * z;
    return {draw.data(), draw.data() + draw.size()};
}

} // namespace causalcast
