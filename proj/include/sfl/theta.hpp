#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "sfl/errors.hpp"
#include "sfl/wachter.hpp"

namespace sfl {

// Centering parameter theta for a supercritical spike lambda, defined by
//
//   1 + y~ theta S~(theta) = (lambda/theta) { 1 - c~ - c~ theta S~(theta) },
//
// where S~ is the Stieltjes transform of F_{c~, y~}. The root lies strictly
// above the bulk edge b. delta and sigma are filled in by callers once an
// observed eigenvalue and a CLT variance are attached.
struct ThetaSolution {
    double lambda = 0.0;
    double theta = 0.0;
    // LHS - RHS of the defining equation at the returned theta.
    double residual = 0.0;
    // (lambda_hat - theta)/theta, NaN until an observation is attached.
    double delta = std::numeric_limits<double>::quiet_NaN();
    // CLT standard deviation for sqrt(p) delta, NaN until assigned.
    double sigma = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// g(theta) = theta (1 + y~ theta S~) - lambda (1 - c~ - c~ theta S~);
// g < 0 below the root, g > 0 above, g(theta) -> theta(1-y~) - lambda at
// infinity.
inline double theta_equation_scaled(double theta, double lambda, double c_tilde,
                                    double y_tilde) {
    const double s = wachter_stieltjes(theta, c_tilde, y_tilde);
    const double ts = theta * s;
    return theta * (1.0 + y_tilde * ts) - lambda * (1.0 - c_tilde - c_tilde * ts);
}

}  // namespace detail

// Solves the defining equation by bisection. The initial bracket is
// [max(b(1+1e-6), 0.25 lambda/(1-y~)), 4 lambda/(1-y~)], expanded
// geometrically (down toward the edge, up toward 1e3 lambda) if it does not
// straddle a sign change; failure to straddle means the spike is too small to
// produce a detached eigenvalue at these ratios.
inline ThetaSolution solve_theta(double lambda, double c_tilde, double y_tilde) {
    const WachterParams w(c_tilde, y_tilde);
    const double edge = w.b * (1.0 + 1e-6);

    double lo = std::max(edge, 0.25 * lambda / (1.0 - y_tilde));
    double hi = 4.0 * lambda / (1.0 - y_tilde);
    if (hi <= lo) hi = 2.0 * lo;

    auto g = [&](double t) { return detail::theta_equation_scaled(t, lambda, c_tilde, y_tilde); };

    double glo = g(lo);
    while (glo > 0.0 && lo > edge) {
        lo = std::max(edge, 0.5 * (lo + w.b));
        glo = g(lo);
    }
    double ghi = g(hi);
    const double hi_limit = 1e3 * std::max(lambda, w.b);
    while (ghi < 0.0 && hi < hi_limit) {
        hi *= 2.0;
        ghi = g(hi);
    }
    if (!(glo < 0.0) || !(ghi > 0.0))
        fail(ErrorCode::no_supercritical_root,
             "no sign change for lambda = " + std::to_string(lambda) +
                 " in [" + std::to_string(edge) + ", " + std::to_string(hi) +
                 "]; spike below the phase transition at these ratios");

    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }

    ThetaSolution sol;
    sol.lambda = lambda;
    sol.theta = 0.5 * (lo + hi);
    sol.residual = g(sol.theta) / sol.theta;  // LHS - RHS of the unscaled equation
    const double tol = 1e-10 * std::max(1.0, sol.theta);
    if (std::abs(sol.residual) > tol)
        fail(ErrorCode::no_supercritical_root,
             "bisection stalled: residual " + std::to_string(sol.residual));
    return sol;
}

// Fixed-q almost-sure limit of a detached eigenvalue,
// lambda (lambda + c - 1) / (lambda - lambda y - 1). Valid when the
// denominator is positive, i.e. lambda(1-y) > 1.
inline double classical_limit(double lambda, double c, double y) {
    const double den = lambda - lambda * y - 1.0;
    if (!(den > 0.0))
        fail(ErrorCode::subcritical_spike,
             "lambda(1-y) must exceed 1 (lambda = " + std::to_string(lambda) + ")");
    return lambda * (lambda + c - 1.0) / den;
}

}  // namespace sfl
