#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sfl/config_json.hpp"
#include "sfl/montecarlo.hpp"

namespace sfl {

inline constexpr const char* kVersion = "0.1.0";

// Locale-independent float formatting with 17 significant digits: enough for
// exact double round trips, so rerunning a config reproduces files byte for
// byte.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Written with status "running" before the experiment and rewritten with
// status "complete" afterwards; a leftover "running" manifest marks an
// interrupted run.
struct RunManifest {
    ordered_json config_echo;
    std::string version = kVersion;
    std::string timestamp = utc_timestamp();
    std::uint64_t master_seed = 0;
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;
    std::string status = "running";
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

inline void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
    ordered_json j;
    j["version"] = manifest.version;
    j["timestamp_utc"] = manifest.timestamp;
    j["master_seed"] = manifest.master_seed;
    j["status"] = manifest.status;
    j["duration_seconds"] = manifest.duration_seconds;
    j["outputs"] = manifest.outputs;
    j["config"] = manifest.config_echo;
    write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

// NaN marks an undefined statistic (e.g. variance of one sample); store it
// as JSON null rather than relying on the serializer.
inline ordered_json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

inline ordered_json summary_to_json(const ExperimentSummary& summary,
                                    const ExperimentConfig& config) {
    ordered_json j;
    j["config"] = config_to_json(config);
    j["replications"] = summary.replications;
    j["successful"] = summary.successful;
    j["failed"] = summary.replications - summary.successful;
    ordered_json failures = ordered_json::array();
    for (const auto& f : summary.failures)
        failures.push_back({{"replication", f.first}, {"error", f.second}});
    j["failures"] = failures;
    if (!summary.bulk_edges.empty())
        j["bulk_edge_mean"] = sample_moments(summary.bulk_edges).mean;

    // advisory only: diagnostics for the model's asymptotic-regime conditions
    {
        const AssumptionReport rep = check_assumptions(config.model, config.regime);
        ordered_json ja;
        ja["a1_q_rate"] = rep.a1_q_rate;
        ja["a2a_scale"] = rep.a2a_scale;
        ja["a2b_scale"] = rep.a2b_scale;
        ja["a2_qsq_over_lambda"] = rep.a2_qsq_over_lambda;
        ja["a4_gap"] = number_or_null(rep.a4_gap);  // null when there is a single block
        ja["a5_max_mult"] = rep.a5_max_mult;
        ja["satisfied"] = {{"a1", rep.a1}, {"a2", rep.a2}, {"a3", rep.a3},
                           {"a4", rep.a4}, {"a5", rep.a5}};
        j["assumptions"] = ja;
    }

    ordered_json spikes = ordered_json::array();
    for (const SpikeSummary& sp : summary.spikes) {
        ordered_json s;
        s["index"] = sp.params.index;
        s["lambda"] = sp.params.lambda;
        s["theta"] = sp.params.theta;
        s["nu"] = sp.params.nu;
        s["sigma"] = sp.params.sigma;
        s["count"] = sp.normalized.size();
        s["mean"] = number_or_null(sp.moments.mean);
        s["variance"] = number_or_null(sp.moments.variance);
        s["skewness"] = number_or_null(sp.moments.skewness);
        s["excess_kurtosis"] = number_or_null(sp.moments.excess_kurtosis);
        s["ks_normal"] = number_or_null(sp.ks_normal);
        s["mean_ratio"] = number_or_null(sp.mean_ratio);
        spikes.push_back(s);
    }
    j["spikes"] = spikes;

    if (!summary.blocks.empty()) {
        ordered_json blocks = ordered_json::array();
        for (const BlockSummary& b : summary.blocks) {
            ordered_json jb;
            jb["block"] = b.block;
            jb["size"] = b.size;
            jb["lambda"] = b.lambda;
            jb["theta"] = b.theta;
            jb["ks_per_order"] = b.ks_per_order;
            blocks.push_back(jb);
        }
        j["blocks"] = blocks;
    }
    return j;
}

// Writes summary.json, per-spike samples_<i>.csv and qq_<i>.csv, and the
// manifest. CSV rows keep the original replication index, so gaps account
// for failed replications; nothing is silently dropped.
inline std::vector<std::string> write_summary(const ExperimentSummary& summary,
                                              const ExperimentConfig& config,
                                              RunManifest& manifest,
                                              const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> outputs;

    write_text_file(dir / "summary.json", summary_to_json(summary, config).dump(2) + "\n");
    outputs.push_back("summary.json");

    // successful replication indices, in order
    std::vector<int> ok_indices;
    {
        std::vector<bool> failed(static_cast<std::size_t>(summary.replications), false);
        for (const auto& f : summary.failures) failed[static_cast<std::size_t>(f.first)] = true;
        for (int r = 0; r < summary.replications; ++r)
            if (!failed[static_cast<std::size_t>(r)]) ok_indices.push_back(r);
    }

    for (const SpikeSummary& sp : summary.spikes) {
        const std::string tag = std::to_string(sp.params.index);
        {
            std::string csv = "replication,lambda_hat,delta,normalized\n";
            for (std::size_t k = 0; k < sp.normalized.size(); ++k) {
                csv += std::to_string(ok_indices[k]);
                csv += ',';
                csv += format_double(sp.lambda_hats[k]);
                csv += ',';
                csv += format_double(sp.deltas[k]);
                csv += ',';
                csv += format_double(sp.normalized[k]);
                csv += '\n';
            }
            write_text_file(dir / ("samples_" + tag + ".csv"), csv);
            outputs.push_back("samples_" + tag + ".csv");
        }
        {
            std::string csv = "normal_quantile,sample_quantile\n";
            for (const auto& pair : sp.qq) {
                csv += format_double(pair.first);
                csv += ',';
                csv += format_double(pair.second);
                csv += '\n';
            }
            write_text_file(dir / ("qq_" + tag + ".csv"), csv);
            outputs.push_back("qq_" + tag + ".csv");
        }
    }

    manifest.outputs = outputs;
    manifest.status = "complete";
    write_manifest(manifest, dir);
    outputs.push_back("manifest.json");
    return outputs;
}

}  // namespace sfl
