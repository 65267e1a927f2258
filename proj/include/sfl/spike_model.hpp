#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sfl/errors.hpp"

namespace sfl {

enum class EntryDist { Gaussian, Rademacher, UniformSym };

inline const char* entry_dist_name(EntryDist d) {
    switch (d) {
        case EntryDist::Gaussian: return "gaussian";
        case EntryDist::Rademacher: return "rademacher";
        case EntryDist::UniformSym: return "uniform_sym";
    }
    return "unknown";
}

inline constexpr double kRotationTol = 1e-12;  // roundoff scale for q up to ~100

// Spiked population spectrum: spec(Sigma2^{-1} Sigma1) = {lambda_1..lambda_q, 1,...,1}
// with lambda_1 >= ... >= lambda_q > 1, equal values grouped into multiplicity
// blocks n_1..n_l (cumulative ends N_1..N_l). Sigma11 = U^T Lambda1 U with U
// orthogonal; row i of U is the spike direction u_i. Sigma2 is the identity.
class SpikeModel {
public:
    SpikeModel(std::vector<double> spikes, std::vector<int> multiplicities,
               Eigen::MatrixXd rotation, EntryDist dist)
        : spikes_(std::move(spikes)),
          multiplicities_(std::move(multiplicities)),
          rotation_(std::move(rotation)),
          dist_(dist) {
        validate();
        cumulative_.resize(multiplicities_.size());
        int acc = 0;
        for (std::size_t i = 0; i < multiplicities_.size(); ++i) {
            acc += multiplicities_[i];
            cumulative_[i] = acc;
        }
    }

    int q() const { return static_cast<int>(spikes_.size()); }
    int block_count() const { return static_cast<int>(multiplicities_.size()); }

    const std::vector<double>& spikes() const { return spikes_; }
    const std::vector<int>& multiplicities() const { return multiplicities_; }
    // N_i = n_1 + ... + n_i
    const std::vector<int>& cumulative_indices() const { return cumulative_; }
    const Eigen::MatrixXd& rotation() const { return rotation_; }
    EntryDist entry_dist() const { return dist_; }

    bool identity_rotation() const {
        if (q() == 0) return true;
        return (rotation_ - Eigen::MatrixXd::Identity(q(), q())).cwiseAbs().maxCoeff() <= kRotationTol;
    }

    // Value shared by block b (0-based).
    double block_value(int b) const { return spikes_[static_cast<std::size_t>(first_index(b))]; }
    int block_size(int b) const { return multiplicities_[static_cast<std::size_t>(b)]; }
    // First 0-based spike index of block b, i.e. N_{b-1}.
    int first_index(int b) const { return b == 0 ? 0 : cumulative_[static_cast<std::size_t>(b) - 1]; }

    // Sigma11 = U^T Lambda1 U (q x q).
    Eigen::MatrixXd sigma11() const {
        Eigen::VectorXd lam = Eigen::Map<const Eigen::VectorXd>(spikes_.data(), q());
        return rotation_.transpose() * lam.asDiagonal() * rotation_;
    }

    // Sigma11^{1/2} = U^T diag(sqrt(lambda)) U; the (p-q) block is the identity,
    // so a p x p square root is never formed.
    Eigen::MatrixXd sigma11_sqrt() const {
        Eigen::VectorXd root = Eigen::Map<const Eigen::VectorXd>(spikes_.data(), q()).cwiseSqrt();
        return rotation_.transpose() * root.asDiagonal() * rotation_;
    }

private:
    void validate() {
        const int qn = static_cast<int>(spikes_.size());
        int mult_total = 0;
        for (int m : multiplicities_) {
            if (m < 1) fail(ErrorCode::invalid_spectrum, "multiplicities must be >= 1");
            mult_total += m;
        }
        if (mult_total != qn)
            fail(ErrorCode::invalid_spectrum,
                 "multiplicities sum to " + std::to_string(mult_total) + " but q = " + std::to_string(qn));

        for (double lam : spikes_)
            if (!(lam > 1.0))
                fail(ErrorCode::subcritical_spike,
                     "spike " + std::to_string(lam) + " must exceed 1");

        // Constant within a block, strictly decreasing across blocks.
        int idx = 0;
        double prev_block = std::numeric_limits<double>::infinity();
        for (int m : multiplicities_) {
            const double v = spikes_[static_cast<std::size_t>(idx)];
            for (int j = 0; j < m; ++j)
                if (spikes_[static_cast<std::size_t>(idx + j)] != v)
                    fail(ErrorCode::invalid_spectrum, "spike values differ within a multiplicity block");
            if (!(v < prev_block))
                fail(ErrorCode::invalid_spectrum, "block values must be strictly decreasing");
            prev_block = v;
            idx += m;
        }

        if (rotation_.rows() != qn || rotation_.cols() != qn)
            fail(ErrorCode::invalid_rotation, "rotation must be " + std::to_string(qn) + "x" +
                                                  std::to_string(qn));
        if (qn > 0) {
            const double dev = (rotation_.transpose() * rotation_ -
                                Eigen::MatrixXd::Identity(qn, qn))
                                   .cwiseAbs()
                                   .maxCoeff();
            if (dev > kRotationTol)
                fail(ErrorCode::invalid_rotation,
                     "U^T U deviates from identity by " + std::to_string(dev));
        }
    }

    std::vector<double> spikes_;
    std::vector<int> multiplicities_;
    std::vector<int> cumulative_;
    Eigen::MatrixXd rotation_;
    EntryDist dist_;
};

// Groups equal consecutive spikes into blocks when multiplicities are given
// explicitly they must match the grouping; rotation defaults to the identity.
inline SpikeModel build_spike_model(const std::vector<double>& spikes,
                                    const std::vector<int>& multiplicities,
                                    const Eigen::MatrixXd* rotation = nullptr,
                                    EntryDist dist = EntryDist::Gaussian) {
    const int qn = static_cast<int>(spikes.size());
    Eigen::MatrixXd rot =
        rotation != nullptr ? *rotation : Eigen::MatrixXd::Identity(qn, qn);
    return SpikeModel(spikes, multiplicities, std::move(rot), dist);
}

// Derives the multiplicity grouping from the spike list itself.
inline SpikeModel build_spike_model(const std::vector<double>& spikes,
                                    const Eigen::MatrixXd* rotation = nullptr,
                                    EntryDist dist = EntryDist::Gaussian) {
    std::vector<int> mult;
    for (std::size_t i = 0; i < spikes.size(); ++i) {
        if (i > 0 && spikes[i] == spikes[i - 1])
            ++mult.back();
        else
            mult.push_back(1);
    }
    return build_spike_model(spikes, mult, rotation, dist);
}

// The simulation-design spike schedule: q = ceil(2 ln p) spikes
// lambda_i = (3/2)^{q+1-i} (ln p / 3)^3, descending in i.
inline std::pair<int, std::vector<double>> paper_spike_schedule(int p) {
    if (p < 2) fail(ErrorCode::domain, "schedule requires p >= 2");
    const double logp = std::log(static_cast<double>(p));
    const int q = static_cast<int>(std::ceil(2.0 * logp));
    const double base = std::pow(logp / 3.0, 3);
    std::vector<double> spikes(static_cast<std::size_t>(q));
    for (int i = 1; i <= q; ++i)
        spikes[static_cast<std::size_t>(i - 1)] = std::pow(1.5, q + 1 - i) * base;
    return {q, spikes};
}

}  // namespace sfl
