#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "causalcast/common.hpp"

namespace causalcast {

/// Hyperparameters of the isotropic squared-exponential kernel plus noise:
///   k(z, z') = signal_var * exp(-||z - z'||^2 / (2 length_scale^2)) + noise_var * [z == z']
struct GpKernelParams {
    double signal_var = 1.0;
    double length_scale = 1.0;
    double noise_var = 1e-2;
};

/// Fitted zero-mean GP: training inputs, Cholesky factor of K + noise, and
/// the weights alpha = (K + noise)^{-1} v.
struct GpModel {
    GpKernelParams params;
    Eigen::MatrixXd train_inputs;
    Eigen::MatrixXd chol_lower;
    Eigen::VectorXd alpha;
    double log_marginal = -std::numeric_limits<double>::infinity();
    double jitter_used = 0.0;

    /// Posterior mean at the training inputs (noise-free kernel cross-covariance).
    Eigen::VectorXd posterior_mean_at_train() const {
        const Eigen::Index n = train_inputs.rows();
        Eigen::MatrixXd k_signal(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                const double d2 = (train_inputs.row(i) - train_inputs.row(j)).squaredNorm();
                k_signal(i, j) = params.signal_var *
                                 std::exp(-d2 / (2.0 * params.length_scale * params.length_scale));
            }
        }
        return k_signal * alpha;
    }
};

/// Grid-search specification for gp_fit. Length scales are multiples of the
/// median pairwise distance of Z; variances are multiples of var(v).
struct GpGrid {
    int n_length = 7;
    double length_lo = 0.1;
    double length_hi = 10.0;
    std::vector<double> signal_factors = {0.25, 0.5, 1.0, 2.0};
    int n_noise = 7;
    double noise_lo = 1e-4;
    double noise_hi = 1.0;
};

namespace detail {

inline std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
    }
    return out;
}

inline double median_pairwise_distance(const Eigen::MatrixXd& z) {
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(z.rows()) * (z.rows() - 1) / 2);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < z.rows(); ++j) {
            dists.push_back((z.row(i) - z.row(j)).norm());
        }
    }
    if (dists.empty()) return 1.0;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2), dists.end());
    const double med = dists[dists.size() / 2];
    return med > 0.0 ? med : 1.0;
}

// Cholesky with jitter escalation 1e-10 -> 1e-6 relative to mean diagonal.
// Returns the jitter actually applied, or throws NumericalError.
inline double cholesky_with_jitter(const Eigen::MatrixXd& k, Eigen::LLT<Eigen::MatrixXd>& llt,
                                   double jitter_lo = 1e-10, double jitter_hi = 1e-6) {
    llt.compute(k);
    if (llt.info() == Eigen::Success) return 0.0;
    const double diag_scale = std::max(k.diagonal().mean(), 1e-12);
    for (double jitter = jitter_lo; jitter <= jitter_hi * 1.0001; jitter *= 10.0) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += jitter * diag_scale;
        llt.compute(kj);
        if (llt.info() == Eigen::Success) return jitter * diag_scale;
    }
    throw NumericalError("Cholesky factorization failed after jitter escalation");
}

} // namespace detail

/// Fits a zero-mean GP with squared-exponential kernel by exhaustive grid
/// search over (length scale, signal variance, noise variance), maximizing
/// the exact log marginal likelihood. Deterministic: on ties the first grid
/// point in enumeration order (length, then signal, then noise) wins.
inline GpModel gp_fit(const Eigen::MatrixXd& z, const Eigen::VectorXd& v, const GpGrid& grid = GpGrid{}) {
    const Eigen::Index n = z.rows();
    if (n != v.size()) throw ConfigError("gp_fit: rows(Z) must equal len(v)");
    if (n < 10) throw DataError("gp_fit: need at least 10 samples, got " + std::to_string(n));

    const double vbar = v.mean();
    const double var_v = (v.array() - vbar).square().sum() / static_cast<double>(n);
    const double med = detail::median_pairwise_distance(z);

    const auto lengths = detail::log_spaced(grid.length_lo * med, grid.length_hi * med, grid.n_length);
    const auto noises = detail::log_spaced(grid.noise_lo, grid.noise_hi, grid.n_noise);

    // Squared distances are shared across the whole grid.
    Eigen::MatrixXd d2(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d2(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (z.row(i) - z.row(j)).squaredNorm();
            d2(i, j) = d;
            d2(j, i) = d;
        }
    }

    GpModel best;
    best.train_inputs = z;
    const double log2pi = std::log(2.0 * std::acos(-1.0));

    for (double ell : lengths) {
        const Eigen::MatrixXd corr = (-d2.array() / (2.0 * ell * ell)).exp().matrix();
        for (double sf : grid.signal_factors) {
            const double sig_var = sf * var_v;
            for (double nf : noises) {
                const double noise_var = nf * var_v;
                Eigen::MatrixXd k = sig_var * corr;
                k.diagonal().array() += noise_var;
                Eigen::LLT<Eigen::MatrixXd> llt;
                double jitter = 0.0;
                try {
                    jitter = detail::cholesky_with_jitter(k, llt);
                } catch (const NumericalError&) {
                    continue; // infeasible grid point; fail only if all are
                }
                const Eigen::VectorXd alpha = llt.solve(v);
                const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
                const double lml = -0.5 * v.dot(alpha) - 0.5 * log_det - 0.5 * n * log2pi;
                if (lml > best.log_marginal) {
                    best.params = GpKernelParams{sig_var, ell, noise_var};
                    best.chol_lower = llt.matrixL();
                    best.alpha = alpha;
                    best.log_marginal = lml;
                    best.jitter_used = jitter;
                }
            }
        }
    }
    if (!std::isfinite(best.log_marginal)) {
        throw NumericalError("gp_fit: no grid point admitted a Cholesky factorization");
    }
    return best;
}

/// Training-input residuals: v minus the GP posterior mean.
inline Eigen::VectorXd gp_residuals(const GpModel& model, const Eigen::VectorXd& v) {
    if (v.size() != model.train_inputs.rows()) {
        throw ConfigError("gp_residuals: v length does not match the fitted model");
    }
    return v - model.posterior_mean_at_train();
}

} // namespace causalcast
