#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "causalcast/common.hpp"
#include "causalcast/distributions.hpp"
#include "causalcast/gp.hpp"
#include "causalcast/rng.hpp"

namespace causalcast {

/// Outcome of a conditional independence test X _||_ Y | Z.
/// `statistic` is the Pearson r of residuals for ParCorr and the (squared-form)
/// distance correlation for GPDC.
struct CITestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int sample_size = 0;
    int cond_dim = 0;
    std::optional<int> dof;            // ParCorr: T - D_Z - 2
    std::optional<int> n_permutations; // GPDC only
    std::string note;
};

/// Residual vectors of X and Y after regressing out Z, with the fit log kept
/// for diagnostics.
struct ResidualPair {
    Eigen::VectorXd eps_x;
    Eigen::VectorXd eps_y;
    std::vector<double> beta_x; // OLS coefficients incl. intercept, if linear
    std::vector<double> beta_y;
    std::optional<GpKernelParams> gp_x;
    std::optional<GpKernelParams> gp_y;
    double log_marginal_x = 0.0;
    double log_marginal_y = 0.0;
};

namespace detail {

struct OlsFit {
    Eigen::VectorXd residuals;
    Eigen::VectorXd beta;
};

inline OlsFit ols_fit(const Eigen::VectorXd& v, const Eigen::MatrixXd& z) {
    const Eigen::Index t = v.size();
    if (z.size() == 0 || z.cols() == 0) {
        OlsFit fit;
        fit.beta = Eigen::VectorXd::Constant(1, v.mean());
        fit.residuals = v.array() - v.mean();
        return fit;
    }
    if (z.rows() != t) throw ConfigError("ols_residuals: rows(Z) must equal len(v)");
    if (z.cols() + 1 >= t) {
        throw DataError("ols_residuals: too few samples (" + std::to_string(t) + ") for " +
                        std::to_string(z.cols()) + " regressors plus intercept");
    }
    Eigen::MatrixXd x(t, z.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(z.cols()) = z;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) {
        throw NumericalError("ols_residuals: conditioning matrix is rank deficient");
    }
    OlsFit fit;
    fit.beta = qr.solve(v);
    fit.residuals = v - x * fit.beta;
    return fit;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> from_eigen(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

inline Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd out = z;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const double mu = z.col(j).mean();
        const double sd = std::sqrt((z.col(j).array() - mu).square().sum() / static_cast<double>(z.rows()));
        if (sd < 1e-12 * std::max(1.0, std::fabs(mu))) {
            throw DataError("conditioning column " + std::to_string(j) + " is constant");
        }
        out.col(j) = (z.col(j).array() - mu) / sd;
    }
    return out;
}

} // namespace detail

/// Least-squares residuals of v on [1, Z]. Empty Z demeans.
inline Eigen::VectorXd ols_residuals(const Eigen::VectorXd& v, const Eigen::MatrixXd& z) {
    return detail::ols_fit(v, z).residuals;
}

inline std::vector<double> ols_residuals(const std::vector<double>& v, const Eigen::MatrixXd& z) {
    return detail::from_eigen(ols_residuals(detail::to_eigen(v), z));
}

/// Partial correlation test: Pearson r of OLS residuals, analytic p-value from
/// Student's-t with T - D_Z - 2 degrees of freedom.
inline CITestResult parcorr_test(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 const Eigen::MatrixXd& z) {
    const Eigen::Index t = x.size();
    if (y.size() != t) throw ConfigError("parcorr_test: x and y must have equal length");
    const Eigen::Index dz = (z.size() == 0) ? 0 : z.cols();
    if (t < dz + 4) {
        throw DataError("parcorr_test: need T >= D_Z + 4, got T=" + std::to_string(t) +
                        ", D_Z=" + std::to_string(dz));
    }

    const Eigen::VectorXd ex = ols_residuals(x, z);
    const Eigen::VectorXd ey = ols_residuals(y, z);
    const double sx = std::sqrt(ex.squaredNorm());
    const double sy = std::sqrt(ey.squaredNorm());
    if (sx <= 0.0 || sy <= 0.0) {
        throw DataError("parcorr_test: zero-variance residuals, test is degenerate");
    }
    double r = ex.dot(ey) / (sx * sy);
    r = std::clamp(r, -1.0, 1.0);

    CITestResult res;
    res.statistic = r;
    res.sample_size = static_cast<int>(t);
    res.cond_dim = static_cast<int>(dz);
    res.dof = static_cast<int>(t - dz - 2);
    const double dof = static_cast<double>(*res.dof);
    if (std::fabs(r) >= 1.0 - 1e-15) {
        res.p_value = 0.0;
        res.note = "saturated: |r| = 1";
        return res;
    }
    const double tstat = r * std::sqrt(dof / (1.0 - r * r));
    res.p_value = student_t_two_sided_p(tstat, dof);
    return res;
}

inline CITestResult parcorr_test(const std::vector<double>& x, const std::vector<double>& y,
                                 const Eigen::MatrixXd& z = Eigen::MatrixXd()) {
    return parcorr_test(detail::to_eigen(x), detail::to_eigen(y), z);
}

/// Rank-based uniformization: r_i = rank(v_i)/n with average ranks for ties.
inline std::vector<double> rank_uniform_transform(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2) throw ConfigError("rank_uniform_transform: need at least 2 values");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    std::vector<double> out(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        // Average of 1-based ranks i+1 .. j+1 over the tie block.
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) out[order[k]] = avg_rank / static_cast<double>(n);
        i = j + 1;
    }
    return out;
}

namespace detail {

// Double-centered absolute-distance matrix and its distance variance.
struct CenteredDistance {
    Eigen::MatrixXd a;  // A_ij = a_ij - row mean - col mean + grand mean
    double dvar = 0.0;  // (1/n^2) sum A_ij^2
};

inline CenteredDistance center_distances(const std::vector<double>& u) {
    const auto n = static_cast<Eigen::Index>(u.size());
    CenteredDistance out;
    out.a.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.a(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = std::fabs(u[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(j)]);
            out.a(i, j) = d;
            out.a(j, i) = d;
        }
    }
    const Eigen::VectorXd row_means = out.a.rowwise().mean();
    const double grand = row_means.mean();
    out.a.colwise() -= row_means;
    out.a.rowwise() -= row_means.transpose();
    out.a.array() += grand;
    out.dvar = out.a.squaredNorm() / static_cast<double>(n * n);
    return out;
}

inline double dcov2(const CenteredDistance& a, const CenteredDistance& b) {
    const auto n = a.a.rows();
    return a.a.cwiseProduct(b.a).sum() / static_cast<double>(n * n);
}

// dcov^2 with rows/cols of A permuted by perm (B fixed). Permuting samples of
// u commutes with double centering, so this equals center(u_perm) . B.
inline double dcov2_permuted(const CenteredDistance& a, const CenteredDistance& b,
                             const std::vector<std::size_t>& perm) {
    const auto n = a.a.rows();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto pi = static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < n; ++j) {
            s += a.a(pi, static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)])) * b.a(i, j);
        }
    }
    return s / static_cast<double>(n * n);
}

} // namespace detail

/// Sample distance correlation in the squared form
/// V^2(u,v) / sqrt(V^2(u,u) V^2(v,v)), in [0, 1]. Returns 0 when either
/// marginal distance variance vanishes.
inline double distance_correlation(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw ConfigError("distance_correlation: unequal lengths");
    if (u.size() < 2) throw ConfigError("distance_correlation: need at least 2 samples");
    const auto cu = detail::center_distances(u);
    const auto cv = detail::center_distances(v);
    const double denom = cu.dvar * cv.dvar;
    if (denom <= 0.0) return 0.0;
    const double r = detail::dcov2(cu, cv) / std::sqrt(denom);
    return std::clamp(r, 0.0, 1.0);
}

/// GPDC: GP-residualize x and y on Z (demean when Z is empty), rank-uniformize
/// both residual vectors, take the distance correlation, and calibrate it
/// against a seeded permutation null that shuffles the x residuals.
inline CITestResult gpdc_test(const std::vector<double>& x, const std::vector<double>& y,
                              const Eigen::MatrixXd& z, int n_perm, std::uint64_t seed,
                              int n_threads = 1, const GpGrid& grid = GpGrid{}) {
    const std::size_t t = x.size();
    if (y.size() != t) throw ConfigError("gpdc_test: x and y must have equal length");
    if (n_perm < 99) throw ConfigError("gpdc_test: n_perm must be at least 99");
    const Eigen::Index dz = (z.size() == 0) ? 0 : z.cols();

    CITestResult res;
    res.sample_size = static_cast<int>(t);
    res.cond_dim = static_cast<int>(dz);
    res.n_permutations = n_perm;

    std::vector<double> eps_x, eps_y;
    if (dz == 0) {
        const double mx = detail::mean(x), my = detail::mean(y);
        eps_x.resize(t);
        eps_y.resize(t);
        for (std::size_t i = 0; i < t; ++i) {
            eps_x[i] = x[i] - mx;
            eps_y[i] = y[i] - my;
        }
    } else {
        if (t < 20) throw DataError("gpdc_test: need T >= 20 with non-empty Z");
        if (static_cast<double>(dz) > static_cast<double>(t) / 10.0) {
            res.note = "high-dimensional conditioning (D_Z > T/10): GP residualization may "
                       "leave the statistic close to an unconditional dependence measure";
        }
        const Eigen::MatrixXd zs = detail::standardize_columns(z);
        const GpModel gx = gp_fit(zs, detail::to_eigen(x), grid);
        const GpModel gy = gp_fit(zs, detail::to_eigen(y), grid);
        eps_x = detail::from_eigen(gp_residuals(gx, detail::to_eigen(x)));
        eps_y = detail::from_eigen(gp_residuals(gy, detail::to_eigen(y)));
    }

    const std::vector<double> rx = rank_uniform_transform(eps_x);
    const std::vector<double> ry = rank_uniform_transform(eps_y);

    const auto cx = detail::center_distances(rx);
    const auto cy = detail::center_distances(ry);
    const double denom = cx.dvar * cy.dvar;
    if (denom <= 0.0) {
        res.statistic = 0.0;
        res.p_value = 1.0;
        res.note = res.note.empty() ? "degenerate: zero distance variance" : res.note;
        return res;
    }
    const double r_obs = std::clamp(detail::dcov2(cx, cy) / std::sqrt(denom), 0.0, 1.0);
    res.statistic = r_obs;

    // V^2(u,u) is invariant under permutation, so only the cross term moves.
    const double denom_sqrt = std::sqrt(denom);
    std::vector<std::uint8_t> exceed(static_cast<std::size_t>(n_perm), 0);
    parallel_for(static_cast<std::size_t>(n_perm), n_threads, [&](std::size_t p) {
        Rng rng(derive_seed(seed, p));
        std::vector<std::size_t> perm(t);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        const double r_perm = detail::dcov2_permuted(cx, cy, perm) / denom_sqrt;
        exceed[p] = (r_perm >= r_obs) ? 1 : 0;
    });
    const int count = std::accumulate(exceed.begin(), exceed.end(), 0);
    res.p_value = (1.0 + count) / static_cast<double>(n_perm + 1);
    return res;
}

/// Residualization with fit diagnostics, shared by both tests.
inline ResidualPair residualize_pair(const std::vector<double>& x, const std::vector<double>& y,
                                     const Eigen::MatrixXd& z, bool use_gp,
                                     const GpGrid& grid = GpGrid{}) {
    ResidualPair pair;
    const Eigen::VectorXd ex = detail::to_eigen(x);
    const Eigen::VectorXd ey = detail::to_eigen(y);
    if (!use_gp || z.size() == 0) {
        auto fx = detail::ols_fit(ex, z);
        auto fy = detail::ols_fit(ey, z);
        pair.eps_x = std::move(fx.residuals);
        pair.eps_y = std::move(fy.residuals);
        pair.beta_x = detail::from_eigen(fx.beta);
        pair.beta_y = detail::from_eigen(fy.beta);
        return pair;
    }
    const Eigen::MatrixXd zs = detail::standardize_columns(z);
    const GpModel gx = gp_fit(zs, ex, grid);
    const GpModel gy = gp_fit(zs, ey, grid);
    pair.eps_x = gp_residuals(gx, ex);
    pair.eps_y = gp_residuals(gy, ey);
    pair.gp_x = gx.params;
    pair.gp_y = gy.params;
    pair.log_marginal_x = gx.log_marginal;
    pair.log_marginal_y = gy.log_marginal;
    return pair;
}

} // namespace causalcast
