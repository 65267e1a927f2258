#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sfl/errors.hpp"

namespace sfl {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// Inverse standard normal CDF: Acklam's rational approximation
// (|relative error| < 1.15e-9) refined by one Halley step, which brings the
// error to machine precision.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::domain, "quantile argument must lie in (0,1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double t = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
            ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double t = p - 0.5;
        const double r = t * t;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double t = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
            ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
    }

    const double e = normal_cdf(x) - p;
    const double u = e * 2.50662827463100050242 * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

// One-sample Kolmogorov-Smirnov distance against the standard normal:
// the exact sup over the real line, which for a step CDF is attained at a
// sample point from one side or the other.
inline double ks_statistic_normal(std::vector<double> samples) {
    if (samples.empty()) fail(ErrorCode::domain, "KS statistic of an empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double phi = normal_cdf(samples[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - phi);
        d = std::max(d, phi - static_cast<double>(i) / n);
    }
    return d;
}

// Two-sample KS distance; both inputs are sorted internally.
inline double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) fail(ErrorCode::domain, "KS statistic of an empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return d;
}

struct SampleMoments {
    std::size_t count = 0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double variance = std::numeric_limits<double>::quiet_NaN();  // unbiased; NaN for count < 2
    double skewness = std::numeric_limits<double>::quiet_NaN();
    double excess_kurtosis = std::numeric_limits<double>::quiet_NaN();
};

inline SampleMoments sample_moments(const std::vector<double>& x) {
    SampleMoments m;
    m.count = x.size();
    if (x.empty()) return m;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    m.mean = mean;
    if (x.size() < 2) return m;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const double n = static_cast<double>(x.size());
    m.variance = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

}  // namespace sfl
