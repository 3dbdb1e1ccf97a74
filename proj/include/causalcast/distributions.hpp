#pragma once

#include <cmath>
#include <limits>

#include "causalcast/common.hpp"

namespace causalcast {

namespace detail {

// Continued-fraction kernel for the regularized incomplete beta (Lentz).
inline double ibeta_cf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-16;
    constexpr double fpmin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw ConfigError("incomplete beta requires a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::ibeta_cf(a, b, x) / a;
    }
    return 1.0 - front * detail::ibeta_cf(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of a Student's-t statistic with `dof` degrees of freedom.
inline double student_t_two_sided_p(double t, double dof) {
    if (dof <= 0.0) throw ConfigError("Student's-t requires positive degrees of freedom");
    if (!std::isfinite(t)) return 0.0;
    const double x = dof / (dof + t * t);
    return regularized_incomplete_beta(0.5 * dof, 0.5, x);
}

/// Beta(a, b) quantile by bisection on the regularized incomplete beta,
/// run to an interval of width 1e-10.
inline double beta_quantile(double q, double a, double b) {
    if (q < 0.0 || q > 1.0) throw ConfigError("quantile level must lie in [0, 1]");
    if (q == 0.0) return 0.0;
    if (q == 1.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (regularized_incomplete_beta(a, b, mid) < q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace causalcast
