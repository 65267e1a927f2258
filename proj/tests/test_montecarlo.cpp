#include <catch_amalgamated.hpp>
#include <cstdlib>

#include "sfl/montecarlo.hpp"

using Catch::Approx;

namespace {

// small but genuinely supercritical configuration, fast enough to replicate
sfl::ExperimentConfig small_config(sfl::ExperimentMode mode = sfl::ExperimentMode::clt_simple,
                                   sfl::EntryDist dist = sfl::EntryDist::Gaussian) {
    sfl::Regime regime(30, 120, 90, 2);
    sfl::SpikeModel model = sfl::build_spike_model({60.0, 20.0}, nullptr, dist);
    sfl::ExperimentConfig config{regime, model};
    config.replications = 40;
    config.master_seed = 99;
    config.mode = mode;
    return config;
}

struct ThreadEnvGuard {
    ThreadEnvGuard() {
        if (const char* v = std::getenv("SFL_THREADS")) old = v;
    }
    ~ThreadEnvGuard() {
        if (old.empty())
            ::unsetenv("SFL_THREADS");
        else
            ::setenv("SFL_THREADS", old.c_str(), 1);
    }
    std::string old;
};

}  // namespace

TEST_CASE("run_replication is deterministic") {
    const auto config = small_config();
    const auto r1 = sfl::run_replication(config, 3);
    const auto r2 = sfl::run_replication(config, 3);
    REQUIRE(r1.ok);
    REQUIRE(r1.spikes.size() == 2);
    CHECK(r1.spikes[0].lambda_hat == r2.spikes[0].lambda_hat);
    CHECK(r1.spikes[1].normalized == r2.spikes[1].normalized);
    CHECK(r1.bulk_edge == r2.bulk_edge);

    const auto other = sfl::run_replication(config, 4);
    CHECK(r1.spikes[0].lambda_hat != other.spikes[0].lambda_hat);
}

TEST_CASE("normalized statistic reconstructs exactly from delta, p and sigma") {
    const auto config = small_config();
    const auto summary = sfl::run_experiment(config);
    const double sqrt_p = std::sqrt(30.0);
    for (const auto& sp : summary.spikes)
        for (std::size_t k = 0; k < sp.normalized.size(); ++k) {
            const double rebuilt = sqrt_p * sp.deltas[k] / sp.params.sigma;
            CHECK(sp.normalized[k] == Approx(rebuilt).epsilon(1e-12));
        }
}

TEST_CASE("qq pairs carry the exact plotting quantiles") {
    const auto config = small_config();
    const auto summary = sfl::run_experiment(config);
    const auto& qq = summary.spikes[0].qq;
    const double R = static_cast<double>(qq.size());
    REQUIRE(qq.size() == 40);
    for (std::size_t r = 0; r < qq.size(); ++r) {
        CHECK(qq[r].first ==
              Approx(sfl::normal_quantile((static_cast<double>(r) + 0.5) / R)).margin(1e-10));
        if (r > 0) {
            CHECK(qq[r].first >= qq[r - 1].first);
            CHECK(qq[r].second >= qq[r - 1].second);
        }
    }
}

TEST_CASE("experiment output is independent of the thread count") {
    ThreadEnvGuard guard;
    const auto config = small_config();

    ::setenv("SFL_THREADS", "1", 1);
    const auto serial = sfl::run_experiment(config);
    ::setenv("SFL_THREADS", "8", 1);
    const auto threaded = sfl::run_experiment(config);

    REQUIRE(serial.successful == threaded.successful);
    for (std::size_t k = 0; k < serial.spikes.size(); ++k) {
        CHECK(serial.spikes[k].normalized == threaded.spikes[k].normalized);
        CHECK(serial.spikes[k].moments.mean == threaded.spikes[k].moments.mean);
        CHECK(serial.spikes[k].ks_normal == threaded.spikes[k].ks_normal);
    }
    CHECK(serial.bulk_edges == threaded.bulk_edges);
}

TEST_CASE("no replication is silently dropped") {
    const auto config = small_config();
    const auto summary = sfl::run_experiment(config);
    CHECK(summary.successful + static_cast<int>(summary.failures.size()) ==
          summary.replications);
    CHECK(summary.successful == 40);
    for (const auto& sp : summary.spikes) CHECK(sp.normalized.size() == 40);
}

TEST_CASE("replications=1 leaves variance undefined without crashing") {
    auto config = small_config();
    config.replications = 1;
    const auto summary = sfl::run_experiment(config);
    CHECK(summary.successful == 1);
    CHECK(std::isnan(summary.spikes[0].moments.variance));
    CHECK_FALSE(std::isnan(summary.spikes[0].moments.mean));
}

TEST_CASE("null model tracks only the bulk edge") {
    sfl::Regime regime(30, 120, 90, 0);
    sfl::SpikeModel model = sfl::build_spike_model({});
    sfl::ExperimentConfig config{regime, model};
    config.replications = 5;
    config.master_seed = 7;
    const auto summary = sfl::run_experiment(config);
    CHECK(summary.spikes.empty());
    REQUIRE(summary.bulk_edges.size() == 5);
    for (double edge : summary.bulk_edges) CHECK(edge > 0.0);
}

TEST_CASE("ratio of the top eigenvalue stays in the coarse consistency window") {
    // p=200 configuration, a few replications only
    const auto [q, spikes] = sfl::paper_spike_schedule(200);
    sfl::Regime regime(200, 1000, 600, q);
    sfl::SpikeModel model = sfl::build_spike_model(spikes);
    sfl::ExperimentConfig config{regime, model};
    config.replications = 3;
    config.master_seed = 2;
    config.targets = {1};
    const auto summary = sfl::run_experiment(config);
    for (double ratio : summary.spikes[0].ratios) {
        CHECK(ratio > 1.0);
        CHECK(ratio < 1.6);
    }
}

TEST_CASE("consistency table in a nearly classical regime") {
    // y_p = 100/20000 = 0.005: the ratio limit 1/(1-y_p) is within 3% of 1
    sfl::Regime regime(100, 20000, 300, 2);
    sfl::SpikeModel model = sfl::build_spike_model({50.0, 20.0});
    sfl::ExperimentConfig config{regime, model};
    config.replications = 10;
    config.master_seed = 5;
    config.mode = sfl::ExperimentMode::consistency;
    const auto rows = sfl::consistency_table(config);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK(row.limit == Approx(1.0 / (1.0 - 0.005)).epsilon(1e-12));
        CHECK(row.mean_ratio == Approx(1.0).margin(0.03));
        CHECK(row.kappa_diag > 0.0);
    }

    auto bad = config;
    bad.mode = sfl::ExperimentMode::clt_simple;
    CHECK_THROWS_AS(sfl::consistency_table(bad), sfl::Error);
}

TEST_CASE("consistency table diagnostic column at the p=200 configuration") {
    const auto [q, spikes] = sfl::paper_spike_schedule(200);
    sfl::Regime regime(200, 1000, 600, q);
    sfl::SpikeModel model = sfl::build_spike_model(spikes);
    sfl::ExperimentConfig config{regime, model};
    config.replications = 3;
    config.master_seed = 10;
    config.targets = {1};
    config.mode = sfl::ExperimentMode::consistency;
    const auto rows = sfl::consistency_table(config);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].limit == Approx(1.25).epsilon(1e-12));
    const double expected_diag =
        13.965316940168336 * 11.0 * (1.0 / std::sqrt(1000.0) + 1.0 / 476.4902206600369);
    CHECK(rows[0].kappa_diag == Approx(expected_diag).epsilon(1e-9));
}

TEST_CASE("block law check produces matched samples per order statistic") {
    sfl::Regime regime(60, 300, 180, 2);
    sfl::SpikeModel model = sfl::build_spike_model({120.0, 120.0}, {2});
    sfl::ExperimentConfig config{regime, model};
    config.replications = 150;
    config.master_seed = 77;
    config.mode = sfl::ExperimentMode::clt_block;

    const auto blocks = sfl::block_law_check(config);
    REQUIRE(blocks.size() == 1);
    const auto& b = blocks[0];
    CHECK(b.size == 2);
    CHECK(b.lambda == 120.0);
    CHECK(b.theta > 0.0);
    REQUIRE(b.empirical.size() == 150);
    REQUIRE(b.reference.size() == 150);
    REQUIRE(b.ks_per_order.size() == 2);
    for (const auto& t : b.empirical) CHECK(t[0] >= t[1]);
    for (const auto& t : b.reference) CHECK(t[0] >= t[1]);
    for (double d : b.ks_per_order) {
        CHECK(d >= 0.0);
        // loose sanity bound; the pinned thresholds live in the validation suite
        CHECK(d < 0.25);
    }
}

TEST_CASE("experiment degenerates when a tracked block is subcritical") {
    // block value 1.3 sits below the detachment threshold, so every
    // replication fails at the block centering step
    sfl::Regime regime(40, 200, 120, 3);
    sfl::SpikeModel model = sfl::build_spike_model({6.0, 1.3, 1.3}, {1, 2});
    sfl::ExperimentConfig config{regime, model};
    config.replications = 8;
    config.master_seed = 3;
    config.targets = {1};  // only the supercritical spike, so planning succeeds
    config.mode = sfl::ExperimentMode::clt_block;
    CHECK_THROWS_MATCHES(sfl::run_experiment(config), sfl::Error,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("experiment-degenerate")));
}

TEST_CASE("config validation") {
    auto config = small_config();
    config.replications = 0;
    CHECK_THROWS_AS(config.validate(), sfl::Error);

    config = small_config();
    config.targets = {3};
    CHECK_THROWS_AS(config.validate(), sfl::Error);

    config = small_config(sfl::ExperimentMode::clt_block);
    CHECK_THROWS_AS(config.validate(), sfl::Error);  // no multiplicity block

    sfl::Regime regime(30, 120, 90, 4);
    sfl::SpikeModel model = sfl::build_spike_model({60.0, 60.0, 60.0, 60.0}, {4});
    sfl::ExperimentConfig big{regime, model};
    big.mode = sfl::ExperimentMode::clt_block;
    CHECK_THROWS_AS(big.validate(), sfl::Error);  // block larger than 3
}

TEST_CASE("resolve_thread_count honors the environment cap") {
    ThreadEnvGuard guard;
    ::setenv("SFL_THREADS", "1", 1);
    CHECK(sfl::resolve_thread_count() == 1);
    ::setenv("SFL_THREADS", "0", 1);   // invalid: fall back to hardware
    CHECK(sfl::resolve_thread_count() >= 1);
    ::setenv("SFL_THREADS", "junk", 1);
    CHECK(sfl::resolve_thread_count() >= 1);
}
