#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>

#include "sfl/errors.hpp"
#include "sfl/regime.hpp"
#include "sfl/rng.hpp"
#include "sfl/spike_model.hpp"

namespace sfl {

// The two data matrices and the population-shaped first sample.
//   Y : p x T, Z : p x n, iid entries with mean 0 and variance 1;
//   X = Sigma1^{1/2} Y, so X2 = Y2 exactly and X1 = Sigma11^{1/2} Y1.
// Immutable after draw_samples; block views are cheap Eigen expressions.
struct SampleMatrices {
    Eigen::MatrixXd Y;  // p x T
    Eigen::MatrixXd Z;  // p x n
    Eigen::MatrixXd X;  // p x T
    int q = 0;
    std::uint64_t seed = 0;

    auto Y1() const { return Y.topRows(q); }
    auto Y2() const { return Y.bottomRows(Y.rows() - q); }
    auto Z1() const { return Z.topRows(q); }
    auto Z2() const { return Z.bottomRows(Z.rows() - q); }
    auto X1() const { return X.topRows(q); }
    auto X2() const { return X.bottomRows(X.rows() - q); }
};

struct CovariancePair {
    Eigen::MatrixXd S1;  // X X^T / T, symmetric PSD
    Eigen::MatrixXd S2;  // Z Z^T / n, symmetric PD for n > p
};

namespace detail {

template <typename Rng>
inline void fill_matrix(Eigen::MatrixXd& m, Rng&& draw) {
    // Column-major fill; the draw order is part of the determinism contract.
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = draw();
}

inline void fill_dist(Eigen::MatrixXd& m, EntryDist dist, Xoshiro256pp& rng) {
    switch (dist) {
        case EntryDist::Gaussian:
            fill_matrix(m, [&] { return rng.gaussian(); });
            break;
        case EntryDist::Rademacher:
            fill_matrix(m, [&] { return rng.rademacher(); });
            break;
        case EntryDist::UniformSym:
            fill_matrix(m, [&] { return rng.uniform_sym(); });
            break;
    }
}

}  // namespace detail

// Deterministic function of (model, regime, seed): Y is filled first, then Z,
// both column-major from the stream keyed by the seed.
inline SampleMatrices draw_samples(const SpikeModel& model, const Regime& regime,
                                   std::uint64_t seed) {
    if (model.q() != regime.q())
        fail(ErrorCode::dimension, "model/regime spike counts differ");

    SampleMatrices s;
    s.q = regime.q();
    s.seed = seed;
    s.Y.resize(regime.p(), regime.T());
    s.Z.resize(regime.p(), regime.n());

    Xoshiro256pp rng = Xoshiro256pp::for_stream(seed, 0);
    detail::fill_dist(s.Y, model.entry_dist(), rng);
    detail::fill_dist(s.Z, model.entry_dist(), rng);

    s.X = s.Y;
    if (s.q > 0) s.X.topRows(s.q) = model.sigma11_sqrt() * s.Y.topRows(s.q);
    return s;
}

// S1 = X X^T / T and S2 = Z Z^T / n, both symmetrized after the product.
// A Cholesky factorization of S2 doubles as the positive-definiteness check;
// the diagonal of its factor gives a cheap condition estimate.
inline CovariancePair form_covariances(const SampleMatrices& s, const Regime& regime) {
    CovariancePair cov;
    const double T = regime.T();
    const double n = regime.n();

    cov.S1.setZero(regime.p(), regime.p());
    cov.S1.selfadjointView<Eigen::Lower>().rankUpdate(s.X, 1.0 / T);
    cov.S1 = cov.S1.selfadjointView<Eigen::Lower>();
    cov.S1 = 0.5 * (cov.S1 + cov.S1.transpose()).eval();

    cov.S2.setZero(regime.p(), regime.p());
    cov.S2.selfadjointView<Eigen::Lower>().rankUpdate(s.Z, 1.0 / n);
    cov.S2 = cov.S2.selfadjointView<Eigen::Lower>();
    cov.S2 = 0.5 * (cov.S2 + cov.S2.transpose()).eval();

    Eigen::LLT<Eigen::MatrixXd> llt(cov.S2);
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::singular_s2, "S2 is not positive definite (n too close to p?)");
    const auto diag = llt.matrixLLT().diagonal();
    const double dmax = diag.maxCoeff();
    const double dmin = diag.minCoeff();
    const double cond_estimate = (dmax / dmin) * (dmax / dmin);
    if (!(dmin > 0.0) || cond_estimate > 1e12)
        fail(ErrorCode::singular_s2,
             "S2 condition estimate " + std::to_string(cond_estimate) + " exceeds 1e12");
    return cov;
}

// Debug/regression dump: magic "SFLM", u32 rows, u32 cols, row-major f64,
// all little-endian.
inline void write_matrix_binary(const std::string& path, const Eigen::MatrixXd& m) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) fail(ErrorCode::io, "cannot open " + path + " for writing");
    const char magic[4] = {'S', 'F', 'L', 'M'};
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    bool ok = std::fwrite(magic, 1, 4, f) == 4 &&
              std::fwrite(&rows, sizeof rows, 1, f) == 1 &&
              std::fwrite(&cols, sizeof cols, 1, f) == 1;
    for (std::uint32_t i = 0; ok && i < rows; ++i)
        for (std::uint32_t j = 0; ok && j < cols; ++j) {
            const double v = m(i, j);
            ok = std::fwrite(&v, sizeof v, 1, f) == 1;
        }
    std::fclose(f);
    if (!ok) fail(ErrorCode::io, "short write to " + path);
}

inline Eigen::MatrixXd read_matrix_binary(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) fail(ErrorCode::io, "cannot open " + path);
    char magic[4];
    std::uint32_t rows = 0, cols = 0;
    bool ok = std::fread(magic, 1, 4, f) == 4 && std::memcmp(magic, "SFLM", 4) == 0 &&
              std::fread(&rows, sizeof rows, 1, f) == 1 &&
              std::fread(&cols, sizeof cols, 1, f) == 1;
    Eigen::MatrixXd m;
    if (ok) {
        m.resize(rows, cols);
        for (std::uint32_t i = 0; ok && i < rows; ++i)
            for (std::uint32_t j = 0; ok && j < cols; ++j) {
                double v;
                ok = std::fread(&v, sizeof v, 1, f) == 1;
                m(i, j) = v;
            }
    }
    std::fclose(f);
    if (!ok) fail(ErrorCode::io, "malformed matrix file " + path);
    return m;
}

}  // namespace sfl
