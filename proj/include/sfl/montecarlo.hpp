#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sfl/assumptions.hpp"
#include "sfl/moments.hpp"
#include "sfl/regime.hpp"
#include "sfl/sampling.hpp"
#include "sfl/spectra.hpp"
#include "sfl/spike_model.hpp"
#include "sfl/stats.hpp"
#include "sfl/theta.hpp"

namespace sfl {

enum class ExperimentMode { consistency, clt_simple, clt_block };

inline const char* mode_name(ExperimentMode m) {
    switch (m) {
        case ExperimentMode::consistency: return "consistency";
        case ExperimentMode::clt_simple: return "clt_simple";
        case ExperimentMode::clt_block: return "clt_block";
    }
    return "unknown";
}

struct ExperimentConfig {
    Regime regime;
    SpikeModel model;
    int replications = 1000;
    std::uint64_t master_seed = 1;
    // 1-based spike indices to track; empty means all q.
    std::vector<int> targets;
    ExperimentMode mode = ExperimentMode::clt_simple;

    std::vector<int> resolved_targets() const {
        if (!targets.empty()) return targets;
        std::vector<int> all(static_cast<std::size_t>(model.q()));
        for (int i = 0; i < model.q(); ++i) all[static_cast<std::size_t>(i)] = i + 1;
        return all;
    }

    void validate() const {
        if (replications < 1) fail(ErrorCode::config, "replications must be >= 1");
        if (model.q() != regime.q()) fail(ErrorCode::config, "model/regime spike counts differ");
        for (int t : targets)
            if (t < 1 || t > model.q())
                fail(ErrorCode::config, "target spike " + std::to_string(t) +
                                            " outside 1.." + std::to_string(model.q()));
        if (mode == ExperimentMode::clt_block) {
            bool has_multi = false;
            for (int b = 0; b < model.block_count(); ++b) {
                if (model.block_size(b) >= 2) has_multi = true;
                if (model.block_size(b) > 3)
                    fail(ErrorCode::config,
                         "block validation is limited to multiplicities <= 3");
            }
            if (!has_multi)
                fail(ErrorCode::config, "clt_block mode needs a block of multiplicity >= 2");
        }
    }
};

// Deterministic per-spike constants shared by every replication.
struct SpikeTargetParams {
    int index = 0;  // 1-based
    double lambda = 0.0;
    double theta = 0.0;
    double nu = 0.0;
    double sigma = 0.0;
};

struct SpikeObservation {
    double lambda_hat = 0.0;
    double delta = 0.0;
    double normalized = 0.0;  // sqrt(p) delta / sigma
    double ratio = 0.0;       // lambda_hat / lambda
};

struct ReplicationRecord {
    int index = -1;
    bool ok = false;
    std::string error;
    std::vector<SpikeObservation> spikes;  // aligned with resolved targets
    // clt_block: per tracked block, sqrt(p) (lambda_hat_j - theta)/theta
    // sorted descending.
    std::vector<std::vector<double>> block_tuples;
    // (q+1)-th largest Fisher eigenvalue: top of the non-spiked part.
    double bulk_edge = 0.0;
};

struct SpikeSummary {
    SpikeTargetParams params;
    std::vector<double> lambda_hats;
    std::vector<double> deltas;
    std::vector<double> normalized;
    std::vector<double> ratios;
    SampleMoments moments;  // of the normalized samples
    double ks_normal = std::numeric_limits<double>::quiet_NaN();
    // (normal quantile Phi^{-1}((r-0.5)/R), sorted sample), ascending
    std::vector<std::pair<double, double>> qq;
    double mean_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct BlockSummary {
    int block = 0;  // 1-based
    int size = 0;
    double lambda = 0.0;
    double theta = 0.0;
    std::vector<std::vector<double>> empirical;  // per replication, sorted descending
    std::vector<std::vector<double>> reference;  // equal count of reference draws
    std::vector<double> ks_per_order;            // two-sample KS per order statistic
};

struct ExperimentSummary {
    int replications = 0;
    int successful = 0;
    std::vector<std::pair<int, std::string>> failures;
    std::vector<SpikeSummary> spikes;
    std::vector<BlockSummary> blocks;
    std::vector<double> bulk_edges;
};

inline std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t r) {
    std::uint64_t sm = master_seed;
    const std::uint64_t base = splitmix64(sm);
    sm = base ^ (0xD1B54A32D192ED03ULL * (r + 1));
    return splitmix64(sm);
}

// Worker parallelism: min(SFL_THREADS if set, hardware concurrency), at
// least 1. The value only affects scheduling, never the reported numbers.
inline int resolve_thread_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("SFL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<int>(v < hw ? v : hw);
    }
    return hw;
}

namespace detail {

inline std::vector<SpikeTargetParams> plan_targets(const ExperimentConfig& config) {
    const double y_p = config.regime.y_p().value();
    const double c_p = config.regime.c_p().value();
    const double y_t = config.regime.y_tilde().value();
    const double c_t = config.regime.c_tilde().value();

    std::vector<SpikeTargetParams> plan;
    for (int t : config.resolved_targets()) {
        SpikeTargetParams sp;
        sp.index = t;
        sp.lambda = config.model.spikes()[static_cast<std::size_t>(t - 1)];
        sp.theta = solve_theta(sp.lambda, c_t, y_t).theta;
        sp.nu = nu_for(config.model.entry_dist(), config.model.rotation(), t - 1).value;
        sp.sigma = std::sqrt(sigma_sq(y_p, c_p, sp.nu));
        plan.push_back(sp);
    }
    return plan;
}

// Blocks tracked in clt_block mode: multiplicity 2..3.
inline std::vector<int> tracked_blocks(const SpikeModel& model) {
    std::vector<int> out;
    for (int b = 0; b < model.block_count(); ++b)
        if (model.block_size(b) >= 2 && model.block_size(b) <= 3) out.push_back(b);
    return out;
}

inline ReplicationRecord run_replication_with(const ExperimentConfig& config,
                                              const std::vector<SpikeTargetParams>& plan,
                                              const std::vector<int>& blocks, int r) {
    ReplicationRecord rec;
    rec.index = r;
    try {
        const std::uint64_t seed = replication_seed(config.master_seed, static_cast<std::uint64_t>(r));
        const SampleMatrices s = draw_samples(config.model, config.regime, seed);
        const CovariancePair cov = form_covariances(s, config.regime);
        const SpectralResult spec = fisher_eigenvalues(cov);

        const double sqrt_p = std::sqrt(static_cast<double>(config.regime.p()));
        rec.spikes.reserve(plan.size());
        for (const SpikeTargetParams& sp : plan) {
            SpikeObservation obs;
            obs.lambda_hat = spec.eigenvalues[static_cast<std::size_t>(sp.index - 1)];
            obs.delta = (obs.lambda_hat - sp.theta) / sp.theta;
            obs.normalized = sqrt_p * obs.delta / sp.sigma;
            obs.ratio = obs.lambda_hat / sp.lambda;
            rec.spikes.push_back(obs);
        }

        if (config.mode == ExperimentMode::clt_block) {
            const double y_t = config.regime.y_tilde().value();
            const double c_t = config.regime.c_tilde().value();
            for (int b : blocks) {
                const double lambda = config.model.block_value(b);
                const double theta = solve_theta(lambda, c_t, y_t).theta;
                std::vector<double> tuple;
                for (int j = 0; j < config.model.block_size(b); ++j) {
                    const int global = config.model.first_index(b) + j;  // 0-based
                    const double lh = spec.eigenvalues[static_cast<std::size_t>(global)];
                    tuple.push_back(sqrt_p * (lh - theta) / theta);
                }
                // eigenvalues are descending, theta constant within the block
                rec.block_tuples.push_back(std::move(tuple));
            }
        }

        rec.bulk_edge = spec.eigenvalues[static_cast<std::size_t>(config.regime.q())];
        rec.ok = true;
    } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

template <typename Fn>
inline void parallel_for(int count, Fn&& body) {
    const int workers = std::min(resolve_thread_count(), count < 1 ? 1 : count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        try {
            for (int i; (i = next.fetch_add(1)) < count;) body(i);
        } catch (...) {
            const std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// One replication, fully determined by (config, r). Errors inside the
// replication are tagged on the record rather than thrown.
inline ReplicationRecord run_replication(const ExperimentConfig& config, int r) {
    config.validate();
    const auto plan = detail::plan_targets(config);
    const auto blocks = config.mode == ExperimentMode::clt_block
                            ? detail::tracked_blocks(config.model)
                            : std::vector<int>{};
    return detail::run_replication_with(config, plan, blocks, r);
}

// Moment tensors for one block. Gaussian entries use the exact pairing
// moments for any orthogonal rotation (rotational invariance); other
// distributions are supported for the identity rotation, where the projected
// column is the raw entry vector.
inline MultiSpikeParams block_moment_params(const SpikeModel& model, int block, double y,
                                            double c) {
    const int ni = model.block_size(block);
    if (model.entry_dist() == EntryDist::Gaussian)
        return MultiSpikeParams::gaussian_identity(ni, y, c);
    if (!model.identity_rotation())
        fail(ErrorCode::config,
             "block moments for non-Gaussian entries require the identity rotation");
    // Identity rotation: M_{h,k} = 1{h=k}; fourth moments follow the iid
    // entry pattern with the diagonal replaced by the entry kurtosis.
    const double nu = model.entry_dist() == EntryDist::Rademacher ? 1.0 : 9.0 / 5.0;
    Eigen::MatrixXd second = Eigen::MatrixXd::Identity(ni, ni);
    std::vector<double> fourth(static_cast<std::size_t>(ni) * ni * ni * ni, 0.0);
    auto flat = [ni](int h1, int k1, int h2, int k2) {
        return static_cast<std::size_t>(((h1 * ni + k1) * ni + h2) * ni + k2);
    };
    for (int h1 = 0; h1 < ni; ++h1)
        for (int k1 = 0; k1 < ni; ++k1)
            for (int h2 = 0; h2 < ni; ++h2)
                for (int k2 = 0; k2 < ni; ++k2) {
                    double v = (h1 == k1 && h2 == k2 ? 1.0 : 0.0) +
                               (h1 == h2 && k1 == k2 ? 1.0 : 0.0) +
                               (h1 == k2 && k1 == h2 ? 1.0 : 0.0);
                    if (h1 == k1 && k1 == h2 && h2 == k2) v = nu;
                    fourth[flat(h1, k1, h2, k2)] = v;
                }
    return MultiSpikeParams(ni, y, c, std::move(second), std::move(fourth));
}

// Runs all replications (concurrently when allowed) and aggregates in
// replication order, so the output is identical for any thread count.
inline ExperimentSummary run_experiment(const ExperimentConfig& config) {
    config.validate();
    const auto plan = detail::plan_targets(config);
    const auto blocks = config.mode == ExperimentMode::clt_block
                            ? detail::tracked_blocks(config.model)
                            : std::vector<int>{};

    std::vector<ReplicationRecord> slots(static_cast<std::size_t>(config.replications));
    detail::parallel_for(config.replications, [&](int r) {
        slots[static_cast<std::size_t>(r)] =
            detail::run_replication_with(config, plan, blocks, r);
    });

    ExperimentSummary out;
    out.replications = config.replications;
    out.spikes.resize(plan.size());
    for (std::size_t k = 0; k < plan.size(); ++k) out.spikes[k].params = plan[k];
    out.blocks.resize(blocks.size());
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        out.blocks[k].block = blocks[k] + 1;
        out.blocks[k].size = config.model.block_size(blocks[k]);
        out.blocks[k].lambda = config.model.block_value(blocks[k]);
    }

    for (const ReplicationRecord& rec : slots) {
        if (!rec.ok) {
            out.failures.emplace_back(rec.index, rec.error);
            continue;
        }
        ++out.successful;
        out.bulk_edges.push_back(rec.bulk_edge);
        for (std::size_t k = 0; k < plan.size(); ++k) {
            const SpikeObservation& obs = rec.spikes[k];
            out.spikes[k].lambda_hats.push_back(obs.lambda_hat);
            out.spikes[k].deltas.push_back(obs.delta);
            out.spikes[k].normalized.push_back(obs.normalized);
            out.spikes[k].ratios.push_back(obs.ratio);
        }
        for (std::size_t k = 0; k < rec.block_tuples.size(); ++k)
            out.blocks[k].empirical.push_back(rec.block_tuples[k]);
    }

    const int failed = config.replications - out.successful;
    if (failed * 20 > config.replications)  // more than 5%
        fail(ErrorCode::experiment_degenerate,
             std::to_string(failed) + " of " + std::to_string(config.replications) +
                 " replications failed; first: " +
                 (out.failures.empty() ? std::string("n/a") : out.failures.front().second));

    for (SpikeSummary& sp : out.spikes) {
        sp.moments = sample_moments(sp.normalized);
        if (!sp.ratios.empty()) sp.mean_ratio = sample_moments(sp.ratios).mean;
        if (!sp.normalized.empty()) {
            sp.ks_normal = ks_statistic_normal(sp.normalized);
            std::vector<double> sorted = sp.normalized;
            std::sort(sorted.begin(), sorted.end());
            const double R = static_cast<double>(sorted.size());
            sp.qq.reserve(sorted.size());
            for (std::size_t r = 0; r < sorted.size(); ++r)
                sp.qq.emplace_back(
                    normal_quantile((static_cast<double>(r) + 0.5) / R), sorted[r]);
        }
    }

    // Reference draws for the block law: one per successful replication,
    // seeded independently of the data stream.
    if (config.mode == ExperimentMode::clt_block) {
        const double y_p = config.regime.y_p().value();
        const double c_p = config.regime.c_p().value();
        const double y_t = config.regime.y_tilde().value();
        const double c_t = config.regime.c_tilde().value();
        constexpr std::uint64_t kReferenceSalt = 0x52464C42ULL;  // disjoint from data seeds
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            BlockSummary& bs = out.blocks[k];
            bs.theta = solve_theta(bs.lambda, c_t, y_t).theta;
            MultiSpikeParams params = block_moment_params(config.model, blocks[k], y_p, c_p);
            for (int r = 0; r < out.successful; ++r) {
                const std::uint64_t seed = replication_seed(
                    config.master_seed ^ kReferenceSalt, static_cast<std::uint64_t>(r));
                Eigen::MatrixXd R = sample_block_matrix(params, y_p, c_p, seed);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
                std::vector<double> tuple(static_cast<std::size_t>(bs.size));
                for (int j = 0; j < bs.size; ++j)
                    tuple[static_cast<std::size_t>(j)] = es.eigenvalues()(bs.size - 1 - j);
                bs.reference.push_back(std::move(tuple));
            }
            bs.ks_per_order.resize(static_cast<std::size_t>(bs.size));
            for (int j = 0; j < bs.size; ++j) {
                std::vector<double> emp, ref;
                for (const auto& t : bs.empirical) emp.push_back(t[static_cast<std::size_t>(j)]);
                for (const auto& t : bs.reference) ref.push_back(t[static_cast<std::size_t>(j)]);
                bs.ks_per_order[static_cast<std::size_t>(j)] =
                    ks_statistic_two_sample(std::move(emp), std::move(ref));
            }
        }
    }
    return out;
}

struct ConsistencyRow {
    int index = 0;
    double lambda = 0.0;
    double mean_ratio = 0.0;
    double limit = 0.0;  // 1/(1 - y_p)
    double gap = 0.0;
    double kappa_diag = 0.0;  // kappa q (n^{-1/2} + lambda^{-1})
    double gap_over_diag = 0.0;
};

// Consistency table: observed mean(lambda_hat/lambda) against 1/(1-y_p) per
// spike, with the error-scale diagnostic alongside. No thresholding here.
inline std::vector<ConsistencyRow> consistency_table(const ExperimentConfig& config) {
    if (config.mode != ExperimentMode::consistency)
        fail(ErrorCode::config, "consistency_table requires consistency mode");
    const ExperimentSummary summary = run_experiment(config);

    std::vector<ConsistencyRow> rows;
    const double limit = 1.0 / (1.0 - config.regime.y_p().value());
    const double n_term = 1.0 / std::sqrt(static_cast<double>(config.regime.n()));
    for (const SpikeSummary& sp : summary.spikes) {
        ConsistencyRow row;
        row.index = sp.params.index;
        row.lambda = sp.params.lambda;
        row.mean_ratio = sp.mean_ratio;
        row.limit = limit;
        row.gap = std::abs(row.mean_ratio - limit);
        row.kappa_diag = kappa(config.model, sp.params.index - 1) * config.model.q() *
                         (n_term + 1.0 / sp.params.lambda);
        row.gap_over_diag = row.kappa_diag > 0.0 ? row.gap / row.kappa_diag : 0.0;
        rows.push_back(row);
    }
    return rows;
}

// Block-law comparison report: runs the experiment in clt_block mode and
// returns the per-block two-sample summaries.
inline std::vector<BlockSummary> block_law_check(const ExperimentConfig& config) {
    if (config.mode != ExperimentMode::clt_block)
        fail(ErrorCode::config, "block_law_check requires clt_block mode");
    return run_experiment(config).blocks;
}

}  // namespace sfl
