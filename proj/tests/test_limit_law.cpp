#include <catch_amalgamated.hpp>

#include "sfl/moments.hpp"
#include "sfl/rng.hpp"
#include "sfl/theta.hpp"
#include "sfl/wachter.hpp"

using Catch::Approx;

TEST_CASE("wachter support endpoints") {
    const auto [a, b] = sfl::wachter_support(1.0 / 3.0, 0.2);
    CHECK(a == Approx(0.15688525709175036).epsilon(1e-12));
    CHECK(b == Approx(4.4264480762415825).epsilon(1e-12));

    // effective ratios of the p=200 configuration
    const auto [a2, b2] = sfl::wachter_support(0.315, 0.189);
    CHECK(a2 == Approx(0.1689178750409908).epsilon(1e-12));
    CHECK(b2 == Approx(4.223415652396935).epsilon(1e-12));

    // y -> 0 limit reduces to the Marchenko-Pastur endpoints for ratio c
    const auto [a3, b3] = sfl::wachter_support(0.25, 1e-10);
    CHECK(a3 == Approx(0.25).epsilon(1e-6));
    CHECK(b3 == Approx(2.25).epsilon(1e-6));

    CHECK_THROWS_AS(sfl::wachter_support(0.25, 1.5), sfl::Error);
    CHECK_THROWS_AS(sfl::wachter_support(0.25, 0.0), sfl::Error);
    CHECK_THROWS_AS(sfl::wachter_support(-0.1, 0.2), sfl::Error);
}

TEST_CASE("stieltjes transform against the density quadrature oracle") {
    const double c = 1.0 / 3.0, y = 0.2;
    // frozen values from integrating (x-z)^{-1} against the bulk density
    // (1-y) sqrt((b-x)(x-a)) / (2 pi x (c+xy)) on [a,b]
    CHECK(sfl::wachter_stieltjes(8.0, c, y) == Approx(-0.15187603298045269).epsilon(1e-9));
    const double b = sfl::wachter_support(c, y).second;
    CHECK(sfl::wachter_stieltjes(2.0 * b, c, y) == Approx(-0.13404654285168735).epsilon(1e-9));
    CHECK(sfl::wachter_stieltjes(5.0 * b, c, y) == Approx(-0.0479934708894459).epsilon(1e-9));
}

TEST_CASE("stieltjes transform normalization and shape") {
    const double c = 1.0 / 3.0, y = 0.2;
    const double z = 1e6;
    CHECK(std::abs(z * sfl::wachter_stieltjes(z, c, y) + 1.0) < 1e-4);

    const double b = sfl::wachter_support(c, y).second;
    CHECK(std::abs(sfl::wachter_stieltjes(b + 1e-9, c, y)) >
          std::abs(sfl::wachter_stieltjes(2.0 * b, c, y)));
    CHECK(sfl::wachter_stieltjes(b + 0.1, c, y) < 0.0);

    // S(z) = int (x-z)^{-1} dF increases toward zero right of the support
    const double h = 1e-5 * 2.0 * b;
    const double derivative = (sfl::wachter_stieltjes(2.0 * b + h, c, y) -
                               sfl::wachter_stieltjes(2.0 * b - h, c, y)) /
                              (2.0 * h);
    CHECK(derivative > 0.0);
}

TEST_CASE("stieltjes transform domain errors") {
    const double c = 1.0 / 3.0, y = 0.2;
    const auto [a, b] = sfl::wachter_support(c, y);
    CHECK_THROWS_MATCHES(sfl::wachter_stieltjes(0.5 * (a + b), c, y), sfl::Error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("inside-support")));
    CHECK_THROWS_AS(sfl::wachter_stieltjes(a, c, y), sfl::Error);
    CHECK_THROWS_AS(sfl::wachter_stieltjes(b, c, y), sfl::Error);
    // left of the support is not exposed
    CHECK_THROWS_AS(sfl::wachter_stieltjes(0.5 * a, c, y), sfl::Error);
    CHECK_THROWS_AS(sfl::wachter_stieltjes(-1.0, c, y), sfl::Error);
}

TEST_CASE("solve_theta matches the fixed-q limit on the cross-check grid") {
    const double c = 1.0 / 3.0, y = 0.2;
    for (double lam : {20.0, 50.0, 100.0, 500.0}) {
        const auto sol = sfl::solve_theta(lam, c, y);
        const double cl = sfl::classical_limit(lam, c, y);
        CHECK(std::abs(sol.residual) <= 1e-10 * sol.theta);
        CHECK(sol.theta == Approx(cl).epsilon(0.02));   // stated cross-check tolerance
        CHECK(sol.theta == Approx(cl).epsilon(1e-9));   // observed: the root coincides
        CHECK(sol.theta > sfl::wachter_support(c, y).second * (1.0 + 1e-6));
    }
    CHECK(sfl::solve_theta(50.0, c, y).theta == Approx(63.247863247863248).epsilon(1e-10));
}

TEST_CASE("solve_theta asymptote and monotonicity") {
    const double c = 0.315, y = 0.189;
    const auto sol = sfl::solve_theta(1e6, c, y);
    CHECK(std::abs(sol.theta * (1.0 - y) / 1e6 - 1.0) < 1e-3);

    double prev = 0.0;
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (double lam : {10.0, 30.0, 1e2, 1e3, 1e4, 1e5}) {
        const auto s = sfl::solve_theta(lam, c, y);
        CHECK(s.theta > prev);
        prev = s.theta;
        const double ratio = s.theta * (1.0 - y) / lam;
        CHECK(ratio < prev_ratio);  // theta/lambda falls toward 1/(1-y)
        prev_ratio = ratio;
    }
    CHECK(prev_ratio == Approx(1.0).margin(2e-5));
}

TEST_CASE("solve_theta rejects subcritical spikes") {
    CHECK_THROWS_MATCHES(sfl::solve_theta(1.5, 1.0 / 3.0, 0.2), sfl::Error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("no-supercritical-root")));
}

TEST_CASE("classical limit values") {
    CHECK(sfl::classical_limit(50.0, 1.0 / 3.0, 0.2) == Approx(63.247863247863248).epsilon(1e-12));
    // classical fixed-dimension consistency: c = y = 0 returns lambda itself
    CHECK(sfl::classical_limit(7.0, 0.0, 0.0) == Approx(7.0).epsilon(1e-12));
    // leading order at large lambda: limit/lambda -> 1/(1-y)
    CHECK(sfl::classical_limit(1e9, 1.0 / 3.0, 0.2) / 1e9 == Approx(1.25).epsilon(1e-6));
    CHECK_THROWS_MATCHES(sfl::classical_limit(1.2, 1.0 / 3.0, 0.2), sfl::Error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("subcritical")));
}

TEST_CASE("sigma_sq closed forms at y=0.2, c=1/3") {
    const double y = 0.2, c = 1.0 / 3.0;
    CHECK(sfl::sigma_sq(y, c, 3.0) == Approx(7.0 / 6.0).epsilon(1e-12));
    CHECK(sfl::sigma_sq(y, c, 1.0) == Approx(0.1).epsilon(1e-12));
    CHECK(sfl::sigma_sq(y, c, 1.0) == Approx(2.0 * y * y / (1.0 - y)).epsilon(1e-12));
    CHECK(sfl::sigma_sq(y, c, 1.8) == Approx(0.52666666666666667).epsilon(1e-12));
}

TEST_CASE("sigma_sq positivity across the ratio grid") {
    for (double y : {0.1, 0.2, 0.4})
        for (double c : {0.2, 1.0 / 3.0, 1.0})
            for (double nu : {1.0, 1.8, 3.0}) CHECK(sfl::sigma_sq(y, c, nu) > 0.0);
    CHECK_THROWS_AS(sfl::sigma_sq(0.2, 1.0 / 3.0, 0.5), sfl::Error);
    CHECK_THROWS_AS(sfl::sigma_sq(1.2, 1.0 / 3.0, 3.0), sfl::Error);
}

TEST_CASE("nu closed forms") {
    const Eigen::MatrixXd id2 = Eigen::MatrixXd::Identity(2, 2);
    CHECK(sfl::nu_for(sfl::EntryDist::Gaussian, id2, 0).value == 3.0);
    CHECK(sfl::nu_for(sfl::EntryDist::Rademacher, id2, 1).value == 1.0);
    CHECK(sfl::nu_for(sfl::EntryDist::UniformSym, id2, 0).value == Approx(1.8));

    // gaussian is rotation invariant
    Eigen::MatrixXd rot(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    rot << r, r, -r, r;
    const auto g = sfl::nu_for(sfl::EntryDist::Gaussian, rot, 0);
    CHECK(g.value == 3.0);
    CHECK(g.analytic);
}

TEST_CASE("nu monte carlo fallback against the sign-pattern enumeration") {
    // u = (1/sqrt2, 1/sqrt2), Rademacher z: (u^T z)^4 takes values {4,0,0,4}
    // on the four equiprobable sign patterns, so nu = 2 exactly.
    Eigen::MatrixXd rot(2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    rot << r, r, -r, r;
    const auto est = sfl::nu_for(sfl::EntryDist::Rademacher, rot, 0, 200000, 99);
    CHECK_FALSE(est.analytic);
    CHECK(est.std_error > 0.0);
    CHECK(est.std_error < 0.02);
    CHECK(est.value == Approx(2.0).margin(4.0 * est.std_error));

    Eigen::MatrixXd bad = rot;
    bad(0, 0) += 1e-3;
    CHECK_THROWS_AS(sfl::nu_for(sfl::EntryDist::Rademacher, bad, 0), sfl::Error);
}

TEST_CASE("multi-spike covariance: gaussian identity closed forms") {
    const double y = 0.2, c = 1.0 / 3.0;
    const auto params = sfl::MultiSpikeParams::gaussian_identity(2, y, c);
    CHECK(params.omega() == Approx(0.34133333333333333).epsilon(1e-12));
    CHECK(params.beta() == Approx(0.37333333333333333).epsilon(1e-12));

    const double inv = 1.0 / (0.8 * 0.8);
    // same-entry variance reduces to the sigma^2 of a simple Gaussian spike
    CHECK(sfl::multi_spike_cov(1, 1, 1, 1, params, y, c) ==
          Approx(2.0 * params.beta() * inv).epsilon(1e-12));
    CHECK(sfl::multi_spike_cov(1, 1, 1, 1, params, y, c) ==
          Approx(sfl::sigma_sq(y, c, 3.0)).epsilon(1e-12));
    // disjoint diagonal entries are uncorrelated
    CHECK(sfl::multi_spike_cov(1, 1, 2, 2, params, y, c) == Approx(0.0).margin(1e-15));
    // off-diagonal entry variance
    CHECK(sfl::multi_spike_cov(1, 2, 1, 2, params, y, c) ==
          Approx(params.beta() * inv).epsilon(1e-12));
    CHECK(sfl::multi_spike_cov(1, 2, 1, 2, params, y, c) == Approx(0.58333333333333333).epsilon(1e-10));
    // diagonal and off-diagonal are uncorrelated
    CHECK(sfl::multi_spike_cov(1, 1, 1, 2, params, y, c) == Approx(0.0).margin(1e-15));
}

TEST_CASE("multi-spike covariance symmetries") {
    const double y = 0.2, c = 1.0 / 3.0;
    const auto params = sfl::MultiSpikeParams::gaussian_identity(3, y, c);
    for (int h1 = 1; h1 <= 3; ++h1)
        for (int k1 = 1; k1 <= 3; ++k1)
            for (int h2 = 1; h2 <= 3; ++h2)
                for (int k2 = 1; k2 <= 3; ++k2) {
                    const double base = sfl::multi_spike_cov(h1, k1, h2, k2, params, y, c);
                    CHECK(base ==
                          Approx(sfl::multi_spike_cov(h2, k2, h1, k1, params, y, c)).margin(1e-14));
                    CHECK(base ==
                          Approx(sfl::multi_spike_cov(k1, h1, h2, k2, params, y, c)).margin(1e-14));
                }
    CHECK_THROWS_AS(sfl::multi_spike_cov(1, 4, 1, 1, params, y, c), sfl::Error);
}

TEST_CASE("block matrix sampling") {
    const double y = 0.2, c = 1.0 / 3.0;

    SECTION("scalar block variance matches the simple-spike law") {
        const auto params = sfl::MultiSpikeParams::gaussian_identity(1, y, c);
        const double target = sfl::sigma_sq(y, c, 3.0);
        double sum = 0.0, sum_sq = 0.0;
        const int n_draws = 100000;
        for (int k = 0; k < n_draws; ++k) {
            const double v = sfl::sample_block_matrix(params, y, c, 1000 + k)(0, 0);
            sum += v;
            sum_sq += v * v;
        }
        const double var = sum_sq / n_draws - (sum / n_draws) * (sum / n_draws);
        CHECK(var == Approx(target).epsilon(0.03));
    }

    SECTION("entry covariance of a 2x2 block matches the formula") {
        const auto params = sfl::MultiSpikeParams::gaussian_identity(2, y, c);
        double s11 = 0.0, s11_sq = 0.0, s12_sq = 0.0, cross = 0.0;
        const int n_draws = 100000;
        for (int k = 0; k < n_draws; ++k) {
            const Eigen::MatrixXd m = sfl::sample_block_matrix(params, y, c, 555 + k);
            CHECK(m(0, 1) == m(1, 0));
            s11 += m(0, 0);
            s11_sq += m(0, 0) * m(0, 0);
            s12_sq += m(0, 1) * m(0, 1);
            cross += m(0, 0) * m(1, 1);
        }
        const double mean11 = s11 / n_draws;
        CHECK(s11_sq / n_draws - mean11 * mean11 ==
              Approx(sfl::multi_spike_cov(1, 1, 1, 1, params, y, c)).epsilon(0.03));
        CHECK(s12_sq / n_draws ==
              Approx(sfl::multi_spike_cov(1, 2, 1, 2, params, y, c)).epsilon(0.03));
        CHECK(cross / n_draws == Approx(0.0).margin(0.02));
    }

    SECTION("zero moment tensors give the zero matrix") {
        sfl::MultiSpikeParams zero(2, y, c, Eigen::MatrixXd::Zero(2, 2),
                                   std::vector<double>(16, 0.0));
        const Eigen::MatrixXd m = sfl::sample_block_matrix(zero, y, c, 1);
        CHECK(m.cwiseAbs().maxCoeff() == 0.0);
    }

    SECTION("indefinite entry covariance is rejected") {
        // pair moments without fourth moments make the diagonal negative
        sfl::MultiSpikeParams bad(2, y, c, Eigen::MatrixXd::Identity(2, 2),
                                  std::vector<double>(16, 0.0));
        CHECK_THROWS_MATCHES(sfl::sample_block_matrix(bad, y, c, 1), sfl::Error,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("invalid-covariance")));
    }
}
