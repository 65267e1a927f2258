// Command-line front end: closed-form law evaluation, Monte Carlo experiment
// runs, and the validation suites.
//
// Exit codes: 0 success; 1 verification suite failed; 2 usage error;
// 3 invalid configuration or arguments; 4 degenerate experiment (too many
// failed replications); 5 I/O failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sfl/sfl.hpp"

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

int exit_code_for(const sfl::Error& e) {
    switch (e.code()) {
        case sfl::ErrorCode::experiment_degenerate: return 4;
        case sfl::ErrorCode::io: return 5;
        default: return 3;
    }
}

int cmd_lsd(double c, double y, const std::vector<double>& grid) {
    const auto [a, b] = sfl::wachter_support(c, y);
    std::cout << "a,b\n" << fmt("%.4f", a) << "," << fmt("%.4f", b) << "\n";
    if (!grid.empty()) {
        std::cout << "z,S\n";
        for (double z : grid)
            std::cout << fmt("%.10g", z) << "," << fmt("%.10g", sfl::wachter_stieltjes(z, c, y))
                      << "\n";
    }
    return 0;
}

int cmd_theta(double lambda, double c, double y) {
    const sfl::ThetaSolution sol = sfl::solve_theta(lambda, c, y);
    const double classical = sfl::classical_limit(lambda, c, y);
    std::cout << "lambda,theta,residual,classical\n"
              << fmt("%.10g", lambda) << "," << fmt("%.10g", sol.theta) << ","
              << fmt("%.3g", sol.residual) << "," << fmt("%.5g", classical) << "\n";
    return 0;
}

int run_and_write(const sfl::ExperimentConfig& config, const std::string& out_dir) {
    sfl::RunManifest manifest;
    manifest.config_echo = sfl::config_to_json(config);
    manifest.master_seed = config.master_seed;
    std::filesystem::create_directories(out_dir);
    sfl::write_manifest(manifest, out_dir);  // status "running" until finalized

    const auto start = std::chrono::steady_clock::now();
    const sfl::ExperimentSummary summary = sfl::run_experiment(config);
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    sfl::write_summary(summary, config, manifest, out_dir);
    std::cout << "wrote " << out_dir << " (" << summary.successful << "/" << summary.replications
              << " replications, " << fmt("%.1f", manifest.duration_seconds) << "s)\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, int reps_override,
                 std::uint64_t seed_override, bool has_seed, const std::string& out_dir) {
    sfl::ExperimentConfig config = sfl::load_config_file(config_path);
    if (reps_override > 0) config.replications = reps_override;
    if (has_seed) config.master_seed = seed_override;
    config.validate();
    return run_and_write(config, out_dir);
}

int cmd_verify(const std::string& suite, bool quick) {
    const auto results = sfl::run_suite(suite, quick);
    bool all = true;
    for (const auto& r : results) {
        std::cout << "criterion " << r.id << " [" << r.name << "]: "
                  << (r.passed ? "PASS" : "FAIL") << " - " << r.detail << "\n";
        all = all && r.passed;
    }
    std::cout << (all ? "suite passed" : "suite FAILED") << " (" << suite
              << (quick ? ", quick" : "") << ")\n";
    return all ? 0 : 1;
}

int cmd_paper_figure(const std::string& out_dir, std::uint64_t seed) {
    const auto [q, spikes] = sfl::paper_spike_schedule(200);
    sfl::Regime regime(200, 1000, 600, q);
    sfl::SpikeModel model = sfl::build_spike_model(spikes, nullptr, sfl::EntryDist::Gaussian);
    sfl::ExperimentConfig config{regime, model};
    config.replications = 1000;
    config.master_seed = seed;
    config.targets = {1, q};
    config.mode = sfl::ExperimentMode::clt_simple;
    return run_and_write(config, out_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spiked Fisher matrix limit laws: evaluation and Monte Carlo validation"};
    app.set_version_flag("--version", sfl::kVersion);
    app.require_subcommand(1);

    // lsd
    auto* lsd = app.add_subcommand("lsd", "support endpoints and Stieltjes transform of the bulk law");
    double lsd_c = 0.0, lsd_y = 0.0;
    std::vector<double> lsd_grid;
    lsd->add_option("--c", lsd_c, "aspect ratio p/T")->required();
    lsd->add_option("--y", lsd_y, "aspect ratio p/n, in (0,1)")->required();
    lsd->add_option("--z", lsd_grid, "evaluation points right of the support")->delimiter(',');

    // theta
    auto* theta = app.add_subcommand("theta", "centering parameter for a spike");
    double th_lambda = 0.0, th_c = 0.0, th_y = 0.0;
    theta->add_option("--lambda", th_lambda, "population spike value")->required();
    theta->add_option("--c", th_c, "aspect ratio p/T")->required();
    theta->add_option("--y", th_y, "aspect ratio p/n")->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run a configured Monte Carlo experiment");
    std::string sim_config, sim_out = ".";
    int sim_reps = 0;
    std::uint64_t sim_seed = 0;
    simulate->add_option("--config", sim_config, "JSON configuration file")->required();
    simulate->add_option("--reps", sim_reps, "override replication count");
    auto* seed_opt = simulate->add_option("--seed", sim_seed, "override master seed");
    simulate->add_option("--out", sim_out, "output directory (default .)");

    // verify
    auto* verify = app.add_subcommand("verify", "run the validation suites");
    std::string suite;
    bool quick = false;
    verify->add_option("--suite", suite, "consistency|clt|block|all")->required();
    verify->add_flag("--quick", quick,
                     "reduced replication counts with proportionally widened tolerances");

    // paper-figure
    auto* figure = app.add_subcommand(
        "paper-figure", "p=200 reference experiment; emits qq CSVs for spikes 1 and 11");
    std::string fig_out = ".";
    std::uint64_t fig_seed = 12345;
    figure->add_option("--out", fig_out, "output directory (default .)");
    figure->add_option("--seed", fig_seed, "master seed (default 12345)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (lsd->parsed()) return cmd_lsd(lsd_c, lsd_y, lsd_grid);
        if (theta->parsed()) return cmd_theta(th_lambda, th_c, th_y);
        if (simulate->parsed())
            return cmd_simulate(sim_config, sim_reps, sim_seed, seed_opt->count() > 0, sim_out);
        if (verify->parsed()) return cmd_verify(suite, quick);
        if (figure->parsed()) return cmd_paper_figure(fig_out, fig_seed);
    } catch (const sfl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
