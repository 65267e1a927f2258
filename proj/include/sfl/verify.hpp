#pragma once

#include <Eigen/Dense>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sfl/config_json.hpp"
#include "sfl/montecarlo.hpp"
#include "sfl/report.hpp"
#include "sfl/spectra.hpp"
#include "sfl/theta.hpp"
#include "sfl/wachter.hpp"

namespace sfl {

// Validation suites. Each criterion is a self-contained check with pinned
// tolerances; --quick shrinks the replication counts and widens the
// statistical tolerances by the matching sqrt factor (detailed per
// criterion below). Suite membership:
//   clt         -> 1, 2, 8
//   consistency -> 3, 5, 6
//   block       -> 7
//   all         -> 1..9 (adds the oracle-equivalence checks 4 and 9)
struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace verify_detail {

inline constexpr std::uint64_t kBaseSeed = 12340;

inline std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

// Full-scale thresholds widen with sqrt(R_full / R_quick) under --quick.
inline double quick_scale(bool quick, int full, int reduced) {
    return quick ? std::sqrt(static_cast<double>(full) / reduced) : 1.0;
}

inline ExperimentConfig section2_config(EntryDist dist, int reps, std::uint64_t seed,
                                        ExperimentMode mode, std::vector<int> targets) {
    const auto [q, spikes] = paper_spike_schedule(200);
    Regime regime(200, 1000, 600, q);
    SpikeModel model = build_spike_model(spikes, nullptr, dist);
    ExperimentConfig config{regime, model};
    config.replications = reps;
    config.master_seed = seed;
    config.targets = std::move(targets);
    config.mode = mode;
    return config;
}

// --- determinant-scan oracle -------------------------------------------
// Roots of det(lambda B - A) located by sign changes of the LU determinant
// on a grid, then bisected. Deliberately avoids the symmetric eigensolver
// route used by fisher_eigenvalues, so the two paths are independent.
inline double pencil_det(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double lam) {
    return (lam * B - A).partialPivLu().determinant();
}

inline std::vector<double> det_scan_generalized_eigenvalues(const Eigen::MatrixXd& A,
                                                            const Eigen::MatrixXd& B) {
    const int p = static_cast<int>(A.rows());
    // trace(B^{-1} A) bounds the largest root for a definite pencil
    double upper = B.partialPivLu().solve(A).trace();
    upper = upper * (1.0 + 1e-9) + 1e-9;
    const double lower = -1e-9 * std::max(1.0, upper);

    for (int grid = 4000; grid <= 4096000; grid *= 4) {
        std::vector<double> roots;
        double prev_x = lower;
        double prev_f = pencil_det(A, B, prev_x);
        for (int k = 1; k <= grid; ++k) {
            const double x = lower + (upper - lower) * k / grid;
            const double f = pencil_det(A, B, x);
            if ((prev_f < 0.0 && f > 0.0) || (prev_f > 0.0 && f < 0.0) || f == 0.0) {
                double a = prev_x, b = x;
                for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
                    const double m = 0.5 * (a + b);
                    const double fm = pencil_det(A, B, m);
                    if ((fm < 0.0) == (prev_f < 0.0))
                        a = m;
                    else
                        b = m;
                }
                roots.push_back(0.5 * (a + b));
            }
            prev_x = x;
            prev_f = f;
        }
        if (static_cast<int>(roots.size()) == p) {
            std::sort(roots.begin(), roots.end(), std::greater<double>());
            return roots;
        }
        // multiplicity or near-collision: retry on a finer grid
    }
    fail(ErrorCode::domain, "determinant scan did not isolate all roots");
}

inline std::string read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct EnvGuard {
    explicit EnvGuard(const char* name) : name_(name) {
        if (const char* v = std::getenv(name)) {
            had_ = true;
            old_ = v;
        }
    }
    ~EnvGuard() {
        if (had_)
            ::setenv(name_, old_.c_str(), 1);
        else
            ::unsetenv(name_);
    }
    const char* name_;
    bool had_ = false;
    std::string old_;
};

}  // namespace verify_detail

// 1. CLT reproduction: Gaussian, p=200/T=600/n=1000, schedule spikes, 1000
//    replications; for spikes 1 and q the normalized fluctuation must have
//    |mean| <= 0.15, variance in [0.80, 1.25] and KS distance <= 0.065.
inline CriterionResult criterion_clt_reproduction(bool quick) {
    using namespace verify_detail;
    const int reps = quick ? 200 : 1000;
    const double s = quick_scale(quick, 1000, reps);
    const double mean_bound = 0.15 * s;
    const double var_lo = 1.0 - 0.20 * s, var_hi = 1.0 + 0.25 * s;
    const double ks_bound = quick ? 1.36 / std::sqrt(reps) * (0.065 / 0.043) : 0.065;

    auto config = section2_config(EntryDist::Gaussian, reps, kBaseSeed + 1,
                                  ExperimentMode::clt_simple, {1, 11});
    const ExperimentSummary summary = run_experiment(config);

    CriterionResult res{1, "clt-reproduction", true, ""};
    std::ostringstream msg;
    for (const SpikeSummary& sp : summary.spikes) {
        const bool mean_ok = std::abs(sp.moments.mean) <= mean_bound;
        const bool var_ok = sp.moments.variance >= var_lo && sp.moments.variance <= var_hi;
        const bool ks_ok = sp.ks_normal <= ks_bound;
        res.passed = res.passed && mean_ok && var_ok && ks_ok;
        msg << "spike " << sp.params.index << ": mean=" << fmt(sp.moments.mean)
               << (mean_ok ? "" : "(FAIL)") << " var=" << fmt(sp.moments.variance)
               << (var_ok ? "" : "(FAIL)") << " ks=" << fmt(sp.ks_normal)
               << (ks_ok ? "" : "(FAIL)") << "; ";
    }
    msg << "bounds: |mean|<=" << fmt(mean_bound) << " var in [" << fmt(var_lo) << ","
           << fmt(var_hi) << "] ks<=" << fmt(ks_bound);
    res.detail = msg.str();
    return res;
}

// 2. nu dependence: as criterion 1 with Rademacher entries and identity
//    rotation, normalized with nu = 1 (sigma^2 = 0.1 at y=0.2, c=1/3);
//    variance must land in [0.80, 1.30]. A wrong nu misses by about 11.7x.
inline CriterionResult criterion_nu_dependence(bool quick) {
    using namespace verify_detail;
    const int reps = quick ? 200 : 1000;
    const double s = quick_scale(quick, 1000, reps);
    const double var_lo = 1.0 - 0.20 * s, var_hi = 1.0 + 0.30 * s;

    auto config = section2_config(EntryDist::Rademacher, reps, kBaseSeed + 2,
                                  ExperimentMode::clt_simple, {1, 11});
    const ExperimentSummary summary = run_experiment(config);

    CriterionResult res{2, "nu-dependence", true, ""};
    std::ostringstream msg;
    for (const SpikeSummary& sp : summary.spikes) {
        const bool var_ok = sp.moments.variance >= var_lo && sp.moments.variance <= var_hi;
        res.passed = res.passed && var_ok;
        msg << "spike " << sp.params.index << ": var=" << fmt(sp.moments.variance)
               << (var_ok ? "" : "(FAIL)") << " (sigma=" << fmt(sp.params.sigma) << "); ";
    }
    msg << "bounds [" << fmt(var_lo) << "," << fmt(var_hi) << "]";
    res.detail = msg.str();
    return res;
}

// 3. Consistency: 200 replications of the schedule configuration at sizes
//    (100,500,300), (200,1000,600), (400,2000,1200). Every spike must
//    satisfy |mean ratio - 1.25| <= 0.05*1.25 + kappa q (n^{-1/2} +
//    lambda^{-1}), and the worst-spike gap must shrink monotonically as the
//    sizes double.
inline CriterionResult criterion_consistency(bool quick) {
    using namespace verify_detail;
    const int reps = quick ? 50 : 200;
    const int sizes[3][3] = {{100, 500, 300}, {200, 1000, 600}, {400, 2000, 1200}};

    CriterionResult res{3, "consistency", true, ""};
    std::ostringstream msg;
    std::vector<double> worst_gaps;
    for (const auto& dims : sizes) {
        const auto [q, spikes] = paper_spike_schedule(dims[0]);
        Regime regime(dims[0], dims[1], dims[2], q);
        SpikeModel model = build_spike_model(spikes, nullptr, EntryDist::Gaussian);
        ExperimentConfig config{regime, model};
        config.replications = reps;
        config.master_seed = kBaseSeed + 3;
        config.mode = ExperimentMode::consistency;
        const auto rows = consistency_table(config);

        double worst = 0.0;
        for (const ConsistencyRow& row : rows) {
            const double bound = 0.05 * row.limit + row.kappa_diag;
            if (row.gap > bound) {
                res.passed = false;
                msg << "p=" << dims[0] << " spike " << row.index << ": gap " << fmt(row.gap)
                       << " > " << fmt(bound) << "; ";
            }
            worst = std::max(worst, row.gap);
        }
        worst_gaps.push_back(worst);
        msg << "p=" << dims[0] << " worst gap " << fmt(worst) << "; ";
    }
    if (!(worst_gaps[0] > worst_gaps[1] && worst_gaps[1] > worst_gaps[2])) {
        res.passed = false;
        msg << "gaps not monotone decreasing; ";
    }
    res.detail = msg.str();
    return res;
}

// 4. Stieltjes oracle: simulated null Fisher spectrum at p=800, n=4000,
//    T=2400 (c=1/3, y=0.2); the closed form must match the empirical
//    transform within 2% relative at z in {b+0.5, 2b, 5b}, median over 20
//    seeds.
inline CriterionResult criterion_stieltjes_oracle(bool quick) {
    using namespace verify_detail;
    const int n_seeds = quick ? 5 : 20;
    const double c = 1.0 / 3.0, y = 0.2;
    const double b = WachterParams(c, y).b;
    const double zs[3] = {b + 0.5, 2.0 * b, 5.0 * b};

    Regime regime(800, 4000, 2400, 0);
    SpikeModel model = build_spike_model({}, nullptr, EntryDist::Gaussian);

    std::vector<std::vector<double>> rel_errors(3);
    std::vector<std::vector<double>> spectra(static_cast<std::size_t>(n_seeds));
    detail::parallel_for(n_seeds, [&](int sidx) {
        const SampleMatrices s = draw_samples(
            model, regime, replication_seed(kBaseSeed + 4, static_cast<std::uint64_t>(sidx)));
        spectra[static_cast<std::size_t>(sidx)] =
            fisher_eigenvalues(form_covariances(s, regime)).eigenvalues;
    });
    for (const auto& eigs : spectra) {
        for (int k = 0; k < 3; ++k) {
            double emp = 0.0;
            for (double mu : eigs) emp += 1.0 / (mu - zs[k]);
            emp /= static_cast<double>(eigs.size());
            const double cf = wachter_stieltjes(zs[k], c, y);
            rel_errors[static_cast<std::size_t>(k)].push_back(std::abs(emp - cf) / std::abs(cf));
        }
    }

    CriterionResult res{4, "stieltjes-oracle", true, ""};
    std::ostringstream msg;
    for (int k = 0; k < 3; ++k) {
        auto& v = rel_errors[static_cast<std::size_t>(k)];
        std::sort(v.begin(), v.end());
        const double median = v[v.size() / 2];
        const bool ok = median <= 0.02;
        res.passed = res.passed && ok;
        msg << "z=" << fmt(zs[k], 3) << ": median rel err " << fmt(median, 5)
               << (ok ? "" : "(FAIL)") << "; ";
    }
    res.detail = msg.str();
    return res;
}

// 5. theta solver: for lambda in {20, 50, 100, 500} at (c,y) = (1/3, 0.2),
//    residual <= 1e-10 theta, agreement with the fixed-q limit within 2%,
//    and theta(1-y)/lambda decreasing toward 1 along the grid.
inline CriterionResult criterion_theta_solver(bool /*quick*/) {
    using namespace verify_detail;
    const double c = 1.0 / 3.0, y = 0.2;
    const double lambdas[4] = {20.0, 50.0, 100.0, 500.0};

    CriterionResult res{5, "theta-solver", true, ""};
    std::ostringstream msg;
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (double lam : lambdas) {
        const ThetaSolution sol = solve_theta(lam, c, y);
        const double cl = classical_limit(lam, c, y);
        const bool resid_ok = std::abs(sol.residual) <= 1e-10 * sol.theta;
        const bool cross_ok = std::abs(sol.theta - cl) / cl <= 0.02;
        const double ratio = sol.theta * (1.0 - y) / lam;
        const bool mono_ok = ratio < prev_ratio && ratio > 1.0;
        prev_ratio = ratio;
        res.passed = res.passed && resid_ok && cross_ok && mono_ok;
        msg << "lambda=" << fmt(lam, 0) << ": theta=" << fmt(sol.theta, 3)
               << " classical=" << fmt(cl, 3) << " ratio=" << fmt(ratio, 5)
               << ((resid_ok && cross_ok && mono_ok) ? "" : "(FAIL)") << "; ";
    }
    res.detail = msg.str();
    return res;
}

// 6. Resolvent decay: on a simulated F0 at the p=200 sizes, the deviation
//    |m~_theta(1) - 1| must halve when theta doubles, within [1.6, 2.4],
//    at theta = 10, 20 and 40 times the top eigenvalue.
inline CriterionResult criterion_resolvent_decay(bool /*quick*/) {
    using namespace verify_detail;
    const auto [q, spikes] = paper_spike_schedule(200);
    Regime regime(200, 1000, 600, q);
    SpikeModel model = build_spike_model(spikes, nullptr, EntryDist::Gaussian);
    const SampleMatrices s = draw_samples(model, regime, replication_seed(kBaseSeed + 6, 0));
    const std::vector<double> mu = f0_eigenvalues(s, regime).eigenvalues;
    const double mu1 = mu.front();

    CriterionResult res{6, "resolvent-decay", true, ""};
    std::ostringstream msg;
    for (double mult : {10.0, 20.0, 40.0}) {
        const double theta = mult * mu1;
        const double dev1 = std::abs(empirical_m_tilde(mu, theta) - 1.0);
        const double dev2 = std::abs(empirical_m_tilde(mu, 2.0 * theta) - 1.0);
        const double ratio = dev1 / dev2;
        const bool ok = ratio >= 1.6 && ratio <= 2.4;
        res.passed = res.passed && ok;
        msg << "theta=" << fmt(mult, 0) << "*mu1: ratio " << fmt(ratio, 3)
               << (ok ? "" : "(FAIL)") << "; ";
    }
    res.detail = msg.str();
    return res;
}

// 7. Block law: one multiplicity-2 block at lambda=200 plus well-separated
//    simple spikes at the p=200 sizes, 500 replications; per order statistic
//    the two-sample KS distance to the sampled reference law must be <= 0.10.
inline CriterionResult criterion_block_law(bool quick) {
    using namespace verify_detail;
    const int reps = quick ? 150 : 500;
    const double ks_bound = quick ? 1.36 * std::sqrt(2.0 / reps) * (0.10 / 0.086) : 0.10;

    Regime regime(200, 1000, 600, 4);
    SpikeModel model =
        build_spike_model({200.0, 200.0, 40.0, 8.0}, {2, 1, 1}, nullptr, EntryDist::Gaussian);
    ExperimentConfig config{regime, model};
    config.replications = reps;
    config.master_seed = kBaseSeed + 7;
    config.mode = ExperimentMode::clt_block;
    const auto blocks = block_law_check(config);

    CriterionResult res{7, "block-law", true, ""};
    std::ostringstream msg;
    for (const BlockSummary& b : blocks) {
        for (std::size_t k = 0; k < b.ks_per_order.size(); ++k) {
            const bool ok = b.ks_per_order[k] <= ks_bound;
            res.passed = res.passed && ok;
            msg << "order " << k + 1 << ": KS " << fmt(b.ks_per_order[k])
                   << (ok ? "" : "(FAIL)") << "; ";
        }
    }
    msg << "bound " << fmt(ks_bound);
    res.detail = msg.str();
    return res;
}

// 8. Determinism: the criterion-1 run executed with SFL_THREADS=1 and
//    SFL_THREADS=8 must produce byte-identical samples and qq CSV files.
inline CriterionResult criterion_determinism(bool quick) {
    using namespace verify_detail;
    const int reps = quick ? 100 : 1000;
    auto config = section2_config(EntryDist::Gaussian, reps, kBaseSeed + 8,
                                  ExperimentMode::clt_simple, {1, 11});

    namespace fs = std::filesystem;
    const fs::path base =
        fs::temp_directory_path() / ("sfl_determinism_" + std::to_string(::getpid()));
    const fs::path dirs[2] = {base / "t1", base / "t8"};
    const char* threads[2] = {"1", "8"};

    EnvGuard guard("SFL_THREADS");
    for (int k = 0; k < 2; ++k) {
        ::setenv("SFL_THREADS", threads[k], 1);
        const ExperimentSummary summary = run_experiment(config);
        RunManifest manifest;
        manifest.config_echo = config_to_json(config);
        manifest.master_seed = config.master_seed;
        write_summary(summary, config, manifest, dirs[k]);
    }

    CriterionResult res{8, "determinism", true, ""};
    std::ostringstream msg;
    for (const char* name : {"samples_1.csv", "samples_11.csv", "qq_1.csv", "qq_11.csv"}) {
        const std::string a = read_file_bytes(dirs[0] / name);
        const std::string b = read_file_bytes(dirs[1] / name);
        const bool ok = !a.empty() && a == b;
        res.passed = res.passed && ok;
        msg << name << (ok ? " identical; " : " DIFFERS; ");
    }
    {
        // one data row per replication under the header
        const std::string qq = read_file_bytes(dirs[0] / "qq_1.csv");
        const long rows = std::count(qq.begin(), qq.end(), '\n') - 1;
        const bool ok = rows == reps;
        res.passed = res.passed && ok;
        msg << "qq rows " << rows << "/" << reps << (ok ? "; " : " MISMATCH; ");
    }
    std::error_code ec;
    fs::remove_all(base, ec);
    res.detail = msg.str();
    return res;
}

// 9. Small-instance oracle equivalence: on 100 random 4x4 definite pencils
//    the symmetric-transform eigenvalues must match determinant-scan roots
//    within 1e-8 relative.
inline CriterionResult criterion_eigenvalue_oracle(bool /*quick*/) {
    using namespace verify_detail;
    Xoshiro256pp rng(kBaseSeed + 9);

    CriterionResult res{9, "eigenvalue-oracle", true, ""};
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::MatrixXd G(4, 4), H(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                G(i, j) = rng.gaussian();
                H(i, j) = rng.gaussian();
            }
        const Eigen::MatrixXd A = G.transpose() * G + 0.05 * Eigen::MatrixXd::Identity(4, 4);
        const Eigen::MatrixXd B = H.transpose() * H + 0.05 * Eigen::MatrixXd::Identity(4, 4);

        CovariancePair cov{A, B};
        const std::vector<double> fast = fisher_eigenvalues(cov).eigenvalues;
        const std::vector<double> slow = det_scan_generalized_eigenvalues(A, B);
        for (int k = 0; k < 4; ++k) {
            const double rel = std::abs(fast[static_cast<std::size_t>(k)] -
                                        slow[static_cast<std::size_t>(k)]) /
                               std::abs(slow[static_cast<std::size_t>(k)]);
            worst = std::max(worst, rel);
        }
    }
    res.passed = worst <= 1e-8;
    res.detail = "worst relative deviation " + fmt(worst, 12) + " over 100 pencils";
    return res;
}

inline CriterionResult run_criterion(int id, bool quick) {
    switch (id) {
        case 1: return criterion_clt_reproduction(quick);
        case 2: return criterion_nu_dependence(quick);
        case 3: return criterion_consistency(quick);
        case 4: return criterion_stieltjes_oracle(quick);
        case 5: return criterion_theta_solver(quick);
        case 6: return criterion_resolvent_decay(quick);
        case 7: return criterion_block_law(quick);
        case 8: return criterion_determinism(quick);
        case 9: return criterion_eigenvalue_oracle(quick);
        default: fail(ErrorCode::config, "unknown criterion " + std::to_string(id));
    }
}

inline std::vector<int> suite_criteria(const std::string& suite) {
    if (suite == "clt") return {1, 2, 8};
    if (suite == "consistency") return {3, 5, 6};
    if (suite == "block") return {7};
    if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9};
    fail(ErrorCode::config, "unknown suite '" + suite + "' (expected consistency, clt, block or all)");
}

inline std::vector<CriterionResult> run_suite(const std::string& suite, bool quick) {
    std::vector<CriterionResult> results;
    for (int id : suite_criteria(suite)) results.push_back(run_criterion(id, quick));
    return results;
}

}  // namespace sfl
