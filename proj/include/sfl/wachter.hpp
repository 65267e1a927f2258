#pragma once

#include <cmath>
#include <string>

#include "sfl/errors.hpp"

namespace sfl {

// Wachter law F_{c,y}: the limiting spectral distribution of a Fisher matrix
// with aspect ratios c = p/T and y = p/n, supported on [a, b] with
//   a = (1 - sqrt(c + y - cy))^2 (1-y)^{-2},
//   b = (1 + sqrt(c + y - cy))^2 (1-y)^{-2}.
struct WachterParams {
    double c = 0.0;
    double y = 0.0;
    double a = 0.0;
    double b = 0.0;

    WachterParams(double c_, double y_) : c(c_), y(y_) {
        if (!(y_ > 0.0 && y_ < 1.0))
            fail(ErrorCode::domain, "y must lie in (0,1), got " + std::to_string(y_));
        if (!(c_ > 0.0)) fail(ErrorCode::domain, "c must be positive, got " + std::to_string(c_));
        const double s = std::sqrt(c_ + y_ - c_ * y_);  // c + y - cy > 0 on the valid domain
        const double inv = 1.0 / ((1.0 - y_) * (1.0 - y_));
        a = (1.0 - s) * (1.0 - s) * inv;
        b = (1.0 + s) * (1.0 + s) * inv;
    }
};

inline std::pair<double, double> wachter_support(double c, double y) {
    const WachterParams w(c, y);
    return {w.a, w.b};
}

// Stieltjes transform of F_{c,y} for real z to the right of the support:
//
//   S(z) = (1-c)/(zc) - [ c(z(1-y)+1-c) + 2zy - c sqrt((z(1-y)+1-c)^2 - 4z) ]
//          / ( 2 z c (c + zy) ),
//
// with the principal (positive) square root, which is the branch with
// z S(z) -> -1 as z -> +infinity and S(z) < 0 for z > b. The difference
// A - sqrt(A^2 - 4z) is evaluated as 4z / (A + sqrt(A^2 - 4z)) to avoid
// cancellation at large z (A > 0 holds throughout z > b).
inline double wachter_stieltjes(double z, double c, double y) {
    const WachterParams w(c, y);
    if (z == 0.0 || c + z * y == 0.0)
        fail(ErrorCode::pole, "z = " + std::to_string(z) + " is a pole of the transform");
    if (z >= w.a && z <= w.b)
        fail(ErrorCode::inside_support,
             "z = " + std::to_string(z) + " lies inside the support [" + std::to_string(w.a) +
                 ", " + std::to_string(w.b) + "]");
    if (z < w.a)
        fail(ErrorCode::domain, "evaluation left of the support is not exposed (z = " +
                                    std::to_string(z) + " < a = " + std::to_string(w.a) + ")");

    const double A = z * (1.0 - y) + 1.0 - c;
    const double disc = A * A - 4.0 * z;  // equals (1-y)^2 (z-a)(z-b) >= 0 here
    const double root = std::sqrt(disc < 0.0 ? 0.0 : disc);
    const double diff = 4.0 * z / (A + root);  // A - sqrt(A^2 - 4z), cancellation-free
    const double numerator = c * diff + 2.0 * z * y;
    return (1.0 - c) / (z * c) - numerator / (2.0 * z * c * (c + z * y));
}

}  // namespace sfl
