#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sfl/errors.hpp"
#include "sfl/rng.hpp"
#include "sfl/spike_model.hpp"

namespace sfl {

// CLT variance for the normalized spike fluctuation sqrt(p) delta_i:
//   sigma_i^2 = (y + c) nu_i - c - y (1 - 3y) / (1 - y),
// where nu_i is the fourth moment of the projected entry u_i^T Z1 e1.
inline double sigma_sq(double y, double c, double nu) {
    if (!(y > 0.0 && y < 1.0)) fail(ErrorCode::domain, "y must lie in (0,1)");
    if (!(c > 0.0)) fail(ErrorCode::domain, "c must be positive");
    if (!(nu >= 1.0)) fail(ErrorCode::domain, "nu must be at least 1");
    const double v = (y + c) * nu - c - y * (1.0 - 3.0 * y) / (1.0 - y);
    if (!(v > 0.0))
        fail(ErrorCode::nonpositive_variance,
             "sigma^2 = " + std::to_string(v) + " is not positive for these ratios");
    return v;
}

// nu_i = E |u_i^T z|^4 for z a column of iid entries. Closed forms:
//   Gaussian        -> 3 for any orthogonal rotation (rotational invariance);
//   identity U      -> the entry fourth moment itself (1, 9/5).
// Any other combination is estimated by Monte Carlo with a reported standard
// error.
struct NuEstimate {
    double value = 0.0;
    double std_error = 0.0;  // zero when the value is analytic
    bool analytic = true;
};

inline NuEstimate nu_for(EntryDist dist, const Eigen::MatrixXd& rotation, int i,
                         std::int64_t mc_budget = 200000, std::uint64_t seed = 0x5F1D0A) {
    const int q = static_cast<int>(rotation.rows());
    if (rotation.cols() != q || q == 0)
        fail(ErrorCode::invalid_rotation, "rotation must be square and non-empty");
    if ((rotation.transpose() * rotation - Eigen::MatrixXd::Identity(q, q))
            .cwiseAbs()
            .maxCoeff() > kRotationTol)
        fail(ErrorCode::invalid_rotation, "rotation is not orthogonal");
    if (i < 0 || i >= q) fail(ErrorCode::index_out_of_range, "spike index out of range");

    if (dist == EntryDist::Gaussian) return {3.0, 0.0, true};

    const bool identity =
        (rotation - Eigen::MatrixXd::Identity(q, q)).cwiseAbs().maxCoeff() <= kRotationTol;
    if (identity) {
        if (dist == EntryDist::Rademacher) return {1.0, 0.0, true};
        return {9.0 / 5.0, 0.0, true};  // uniform on [-sqrt(3), sqrt(3)]
    }

    // Monte Carlo fallback: mean of (u_i^T z)^4 over iid column draws.
    if (mc_budget < 2) fail(ErrorCode::domain, "mc_budget must be at least 2");
    const Eigen::VectorXd u = rotation.row(i).transpose();
    Xoshiro256pp rng = Xoshiro256pp::for_stream(seed, static_cast<std::uint64_t>(i));
    double sum = 0.0, sum_sq = 0.0;
    Eigen::VectorXd z(q);
    for (std::int64_t k = 0; k < mc_budget; ++k) {
        for (int j = 0; j < q; ++j)
            z(j) = dist == EntryDist::Rademacher ? rng.rademacher() : rng.uniform_sym();
        const double proj = u.dot(z);
        const double v = proj * proj * proj * proj;
        sum += v;
        sum_sq += v * v;
    }
    const double nb = static_cast<double>(mc_budget);
    const double mean = sum / nb;
    const double var = std::max(0.0, sum_sq / nb - mean * mean);
    return {mean, std::sqrt(var / nb), false};
}

// Moment data for one multiplicity block of size n_i: pair moments
// M_{h,k} = E(u_h^T Z1 e1 u_k^T Z1 e1) and fourth moments
// M_{h1,k1,h2,k2}, indexed 1..n_i as in the block law, together with the
// scale constants omega = (y+c)(1-y)^2 and beta = y(1-y) + c(1-y)^2.
class MultiSpikeParams {
public:
    MultiSpikeParams(int block_size, double y, double c, Eigen::MatrixXd second,
                     std::vector<double> fourth)
        : n_(block_size), omega_((y + c) * (1.0 - y) * (1.0 - y)),
          beta_(y * (1.0 - y) + c * (1.0 - y) * (1.0 - y)),
          second_(std::move(second)), fourth_(std::move(fourth)) {
        if (!(y > 0.0 && y < 1.0 && c > 0.0)) fail(ErrorCode::domain, "invalid (y, c)");
        if (n_ < 1) fail(ErrorCode::domain, "block size must be >= 1");
        if (second_.rows() != n_ || second_.cols() != n_ ||
            fourth_.size() != static_cast<std::size_t>(n_ * n_ * n_ * n_))
            fail(ErrorCode::domain, "moment tensor dimensions do not match the block size");
        if (!(omega_ > 0.0 && beta_ > 0.0))
            fail(ErrorCode::domain, "omega and beta must be positive");
    }

    // Gaussian entries with identity rotation: M_{h,k} = 1{h=k} and the
    // fourth moments follow the Isserlis pairing rule.
    static MultiSpikeParams gaussian_identity(int block_size, double y, double c) {
        Eigen::MatrixXd second = Eigen::MatrixXd::Identity(block_size, block_size);
        std::vector<double> fourth(
            static_cast<std::size_t>(block_size) * block_size * block_size * block_size);
        for (int h1 = 0; h1 < block_size; ++h1)
            for (int k1 = 0; k1 < block_size; ++k1)
                for (int h2 = 0; h2 < block_size; ++h2)
                    for (int k2 = 0; k2 < block_size; ++k2) {
                        const double v = (h1 == k1 && h2 == k2 ? 1.0 : 0.0) +
                                         (h1 == h2 && k1 == k2 ? 1.0 : 0.0) +
                                         (h1 == k2 && k1 == h2 ? 1.0 : 0.0);
                        fourth[flat(block_size, h1, k1, h2, k2)] = v;
                    }
        return MultiSpikeParams(block_size, y, c, std::move(second), std::move(fourth));
    }

    int block_size() const { return n_; }
    double omega() const { return omega_; }
    double beta() const { return beta_; }

    // 1-based block-local indices, matching the displayed covariance.
    double second_moment(int h, int k) const {
        check_index(h);
        check_index(k);
        return second_(h - 1, k - 1);
    }
    double fourth_moment(int h1, int k1, int h2, int k2) const {
        check_index(h1);
        check_index(k1);
        check_index(h2);
        check_index(k2);
        return fourth_[flat(n_, h1 - 1, k1 - 1, h2 - 1, k2 - 1)];
    }

private:
    static std::size_t flat(int n, int h1, int k1, int h2, int k2) {
        return static_cast<std::size_t>(((h1 * n + k1) * n + h2) * n + k2);
    }
    void check_index(int v) const {
        if (v < 1 || v > n_)
            fail(ErrorCode::index_out_of_range,
                 "block index " + std::to_string(v) + " outside 1.." + std::to_string(n_));
    }

    int n_;
    double omega_;
    double beta_;
    Eigen::MatrixXd second_;
    std::vector<double> fourth_;
};

// cov(R_{h1,k1}, R_{h2,k2}) of the block limit matrix:
//   (1-y)^{-2} omega (M_{h1,k1,h2,k2} - M_{h1,k1} M_{h2,k2})
//   + (1-y)^{-2} (beta - omega) (M_{h1,k2} M_{h2,k1} + M_{h1,h2} M_{k1,k2}).
inline double multi_spike_cov(int h1, int k1, int h2, int k2, const MultiSpikeParams& params,
                              double y, double /*c*/) {
    const double inv = 1.0 / ((1.0 - y) * (1.0 - y));
    const double om = params.omega();
    const double be = params.beta();
    const double quart = params.fourth_moment(h1, k1, h2, k2) -
                         params.second_moment(h1, k1) * params.second_moment(h2, k2);
    const double pair = params.second_moment(h1, k2) * params.second_moment(h2, k1) +
                        params.second_moment(h1, h2) * params.second_moment(k1, k2);
    return inv * (om * quart + (be - om) * pair);
}

// Draws the symmetric block matrix R^{(i)}: the upper-triangle entries are
// jointly Gaussian with the covariance above, sampled via the
// eigendecomposition of their covariance matrix (eigenvalues below -1e-8
// reject the covariance; small negatives are clipped to zero before
// factoring). The entry order is row-major over the upper triangle.
inline Eigen::MatrixXd sample_block_matrix(const MultiSpikeParams& params, double y, double c,
                                           std::uint64_t seed) {
    const int ni = params.block_size();
    const int m = ni * (ni + 1) / 2;

    std::vector<std::pair<int, int>> entries;
    entries.reserve(static_cast<std::size_t>(m));
    for (int h = 1; h <= ni; ++h)
        for (int k = h; k <= ni; ++k) entries.emplace_back(h, k);

    Eigen::MatrixXd C(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            C(a, b) = multi_spike_cov(entries[a].first, entries[a].second, entries[b].first,
                                      entries[b].second, params, y, c);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    if (es.info() != Eigen::Success)
        fail(ErrorCode::invalid_covariance, "covariance eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-8 * scale)
        fail(ErrorCode::invalid_covariance,
             "entry covariance is not positive semidefinite (min eigenvalue " +
                 std::to_string(ev.minCoeff()) + ")");
    for (int j = 0; j < m; ++j) ev(j) = ev(j) < 0.0 ? 0.0 : ev(j);

    Xoshiro256pp rng(seed);
    Eigen::VectorXd g(m);
    for (int j = 0; j < m; ++j) g(j) = rng.gaussian();
    const Eigen::VectorXd x = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * g;

    Eigen::MatrixXd R(ni, ni);
    for (int a = 0; a < m; ++a) {
        R(entries[a].first - 1, entries[a].second - 1) = x(a);
        R(entries[a].second - 1, entries[a].first - 1) = x(a);
    }
    return R;
}

}  // namespace sfl
