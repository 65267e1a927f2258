#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfl/regime.hpp"
#include "sfl/spike_model.hpp"

namespace sfl {

// Finite-n diagnostics for the model's asymptotic assumptions. The booleans
// are proxies with fixed thresholds; the report is advisory and never blocks
// a run.
struct AssumptionReport {
    // q / n^{1/6}
    double a1_q_rate = 0.0;
    // max_i lambda_i^{-1} sum_j lambda_j * q^{1/2} n^{-1/4}
    double a2a_scale = 0.0;
    // max_i lambda_i sum_j lambda_j^{-1} * q^{1/2} n^{-1/4}
    double a2b_scale = 0.0;
    // q^2 / lambda_q
    double a2_qsq_over_lambda = 0.0;
    // min over consecutive blocks of lambda_{N_i} / lambda_{N_{i+1}}
    double a4_gap = std::numeric_limits<double>::infinity();
    // max_i n_i
    int a5_max_mult = 0;

    bool a1 = false;
    bool a2 = false;
    bool a3 = true;  // all built-in entry distributions have finite 4th moment
    bool a4 = false;
    bool a5 = false;

    bool all() const { return a1 && a2 && a3 && a4 && a5; }
};

// kappa_1 = q + lambda_i^{-1} sum_j lambda_j
inline double kappa1(const SpikeModel& model, int i) {
    double sum = 0.0;
    for (double lam : model.spikes()) sum += lam;
    return model.q() + sum / model.spikes()[static_cast<std::size_t>(i)];
}

// kappa_2 = q + lambda_i sum_j lambda_j^{-1}
inline double kappa2(const SpikeModel& model, int i) {
    double sum = 0.0;
    for (double lam : model.spikes()) sum += 1.0 / lam;
    return model.q() + model.spikes()[static_cast<std::size_t>(i)] * sum;
}

// kappa = min{kappa_1, kappa_2}, the error-scale constant for spike i (0-based).
inline double kappa(const SpikeModel& model, int i) {
    return std::min(kappa1(model, i), kappa2(model, i));
}

inline AssumptionReport check_assumptions(const SpikeModel& model, const Regime& regime) {
    if (model.q() != regime.q())
        fail(ErrorCode::dimension, "model has q=" + std::to_string(model.q()) +
                                       " but regime has q=" + std::to_string(regime.q()));
    if (regime.q() >= regime.p())
        fail(ErrorCode::dimension, "q must be smaller than p");

    AssumptionReport rep;
    const int q = model.q();
    const double n = regime.n();
    rep.a1_q_rate = q / std::pow(n, 1.0 / 6.0);
    rep.a1 = q <= 2.0 * std::pow(n, 1.0 / 6.0);

    if (q > 0) {
        const auto& lam = model.spikes();
        double sum = 0.0, sum_inv = 0.0;
        for (double v : lam) {
            sum += v;
            sum_inv += 1.0 / v;
        }
        const double scale = std::sqrt(static_cast<double>(q)) / std::pow(n, 0.25);
        // both maxima are attained at the extreme spikes of a sorted list
        rep.a2a_scale = (sum / lam.back()) * scale;
        rep.a2b_scale = (lam.front() * sum_inv) * scale;
        rep.a2_qsq_over_lambda = static_cast<double>(q) * q / lam.back();
        rep.a2 = std::min(rep.a2a_scale, rep.a2b_scale) <= 1.0 && rep.a2_qsq_over_lambda <= 1.0;

        rep.a4_gap = std::numeric_limits<double>::infinity();
        for (int b = 0; b + 1 < model.block_count(); ++b)
            rep.a4_gap = std::min(rep.a4_gap, model.block_value(b) / model.block_value(b + 1));
        rep.a4 = rep.a4_gap >= 1.2;

        rep.a5_max_mult =
            *std::max_element(model.multiplicities().begin(), model.multiplicities().end());
        rep.a5 = rep.a5_max_mult <= 4;
    } else {
        rep.a2 = rep.a4 = rep.a5 = true;
    }
    return rep;
}

}  // namespace sfl
