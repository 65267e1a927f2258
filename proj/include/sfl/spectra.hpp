#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <vector>

#include "sfl/errors.hpp"
#include "sfl/sampling.hpp"

namespace sfl {

// Descending eigenvalues of the Fisher matrix S2^{-1} S1 together with a
// backward-error certificate. The spectrum is computed from the symmetric
// matrix S2^{-1/2} S1 S2^{-1/2}, which shares it; this keeps the solve in
// SelfAdjointEigenSolver territory (real spectrum, stable ordering).
struct SpectralResult {
    std::vector<double> eigenvalues;  // descending, all >= 0
    // max_j ||S1 v_j - lambda_j S2 v_j|| / (||S1||_F ||v_j||) over the
    // generalized eigenvectors v_j = S2^{-1/2} w_j.
    double residual = 0.0;
};

// Empirical spectral distribution: the step CDF placing mass 1/m at each
// eigenvalue.
class Esd {
public:
    explicit Esd(std::vector<double> eigenvalues) : points_(std::move(eigenvalues)) {
        std::sort(points_.begin(), points_.end());
    }

    double operator()(double x) const {
        if (points_.empty()) return 0.0;
        const auto it = std::upper_bound(points_.begin(), points_.end(), x);
        return static_cast<double>(it - points_.begin()) / static_cast<double>(points_.size());
    }

    const std::vector<double>& support_points() const { return points_; }

private:
    std::vector<double> points_;
};

namespace detail {

inline constexpr double kS2ConditionLimit = 1e12;

// Shared core: eigenvalues of B^{-1} A for symmetric A (PSD) and B (PD).
inline SpectralResult definite_pencil_eigenvalues(const Eigen::MatrixXd& A,
                                                  const Eigen::MatrixXd& B) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_b(B);
    if (es_b.info() != Eigen::Success)
        fail(ErrorCode::singular_s2, "eigendecomposition of S2 failed");
    const Eigen::VectorXd bev = es_b.eigenvalues();
    const double bmax = bev.maxCoeff();
    const double bmin = bev.minCoeff();
    if (!(bmin > 0.0) || bmax / bmin > kS2ConditionLimit)
        fail(ErrorCode::singular_s2, "S2 not numerically positive definite");

    const Eigen::MatrixXd b_inv_sqrt =
        es_b.eigenvectors() * bev.cwiseSqrt().cwiseInverse().asDiagonal() *
        es_b.eigenvectors().transpose();

    Eigen::MatrixXd K = b_inv_sqrt * A * b_inv_sqrt;
    K = 0.5 * (K + K.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_k(K);
    if (es_k.info() != Eigen::Success)
        fail(ErrorCode::singular_s2, "eigendecomposition of the transformed pencil failed");

    SpectralResult out;
    const Eigen::Index p = A.rows();
    out.eigenvalues.resize(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        // ascending from Eigen; negatives can only be roundoff
        const double v = es_k.eigenvalues()(p - 1 - j);
        out.eigenvalues[static_cast<std::size_t>(j)] = v < 0.0 ? 0.0 : v;
    }

    // Backward error of the generalized problem in the original coordinates.
    const Eigen::MatrixXd V = b_inv_sqrt * es_k.eigenvectors();
    const Eigen::MatrixXd R = A * V - B * V * es_k.eigenvalues().asDiagonal();
    const double a_scale = A.norm();
    if (a_scale > 0.0) {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double r = R.col(j).norm() / (a_scale * V.col(j).norm());
            worst = std::max(worst, r);
        }
        out.residual = worst;
    }
    return out;
}

}  // namespace detail

inline SpectralResult fisher_eigenvalues(const CovariancePair& cov) {
    return detail::definite_pencil_eigenvalues(cov.S1, cov.S2);
}

// Spectrum of F0 = (Z2 Z2^T / n)^{-1} (X2 X2^T / T), the Fisher matrix of the
// non-spiked blocks. With q = 0 this coincides with the full Fisher spectrum.
inline SpectralResult f0_eigenvalues(const SampleMatrices& s, const Regime& regime) {
    const int m = regime.p() - regime.q();
    if (m >= regime.n()) fail(ErrorCode::dimension, "p - q must be smaller than n");
    const double T = regime.T();
    const double n = regime.n();

    Eigen::MatrixXd A;
    A.setZero(m, m);
    A.selfadjointView<Eigen::Lower>().rankUpdate(s.X2(), 1.0 / T);
    A = A.selfadjointView<Eigen::Lower>();

    Eigen::MatrixXd B;
    B.setZero(m, m);
    B.selfadjointView<Eigen::Lower>().rankUpdate(s.Z2(), 1.0 / n);
    B = B.selfadjointView<Eigen::Lower>();

    return detail::definite_pencil_eigenvalues(A, B);
}

// m~_theta(1) = (1/m) tr (I - F0/theta)^{-1} = (1/m) sum_j 1/(1 - mu_j/theta),
// evaluated from the F0 spectrum. Requires theta above the top eigenvalue so
// the resolvent at z = 1 exists.
inline double empirical_m_tilde(const std::vector<double>& f0_eigs, double theta) {
    if (f0_eigs.empty()) fail(ErrorCode::domain, "empty spectrum");
    double mu_max = f0_eigs.front();
    for (double mu : f0_eigs) mu_max = std::max(mu_max, mu);
    if (!(theta > mu_max))
        fail(ErrorCode::pole, "theta = " + std::to_string(theta) +
                                  " is not above the spectrum (mu_1 = " + std::to_string(mu_max) + ")");
    double acc = 0.0;
    for (double mu : f0_eigs) acc += 1.0 / (1.0 - mu / theta);
    return acc / static_cast<double>(f0_eigs.size());
}

}  // namespace sfl
