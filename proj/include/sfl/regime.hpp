#pragma once

#include <cstdint>
#include <string>

#include "sfl/errors.hpp"

namespace sfl {

// Exact dimension ratio p/n etc.; kept as integers so configs round-trip
// without floating-point drift.
struct Ratio {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Dimension regime: p (dimension), n and T (sample sizes of the two
// populations), q (spike count). Requires n > p so the second sample
// covariance is invertible with probability one, hence y_p = p/n < 1.
class Regime {
public:
    Regime(int p, int n, int T, int q) : p_(p), n_(n), T_(T), q_(q) {
        if (p <= 0) fail(ErrorCode::dimension, "p must be positive, got " + std::to_string(p));
        if (q < 0) fail(ErrorCode::dimension, "q must be non-negative, got " + std::to_string(q));
        if (q >= p) fail(ErrorCode::dimension, "q must be smaller than p (q=" + std::to_string(q) +
                                                   ", p=" + std::to_string(p) + ")");
        if (n <= p) fail(ErrorCode::dimension, "n must exceed p for an invertible S2 (n=" +
                                                   std::to_string(n) + ", p=" + std::to_string(p) + ")");
        if (T < 1) fail(ErrorCode::dimension, "T must be at least 1, got " + std::to_string(T));
    }

    int p() const { return p_; }
    int n() const { return n_; }
    int T() const { return T_; }
    int q() const { return q_; }

    Ratio y_p() const { return {p_, n_}; }        // p/n, in (0,1)
    Ratio c_p() const { return {p_, T_}; }        // p/T, positive
    Ratio y_tilde() const { return {p_ - q_, n_}; }  // (p-q)/n
    Ratio c_tilde() const { return {p_ - q_, T_}; }  // (p-q)/T

private:
    int p_;
    int n_;
    int T_;
    int q_;
};

}  // namespace sfl
