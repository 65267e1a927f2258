#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sfl/montecarlo.hpp"

namespace sfl {

using ordered_json = nlohmann::ordered_json;

// JSON configuration schema. Required keys: p, n, T, spikes, multiplicities,
// dist, seed. Optional: rotation (row-major, length q^2), replications,
// targets (1-based spike indices), mode. Unknown keys are rejected so typos
// fail loudly.
inline ExperimentConfig parse_config(const ordered_json& j) {
    static const std::set<std::string> known = {"p",    "n",        "T",
                                                "spikes", "multiplicities", "rotation",
                                                "dist", "seed",     "replications",
                                                "targets", "mode"};
    if (!j.is_object()) fail(ErrorCode::config, "configuration must be a JSON object");
    for (const auto& item : j.items())
        if (known.find(item.key()) == known.end())
            fail(ErrorCode::config, "unknown key '" + item.key() + "'");

    auto require = [&](const char* key) -> const ordered_json& {
        if (!j.contains(key)) fail(ErrorCode::config, std::string("missing key '") + key + "'");
        return j.at(key);
    };
    auto as_int = [&](const char* key) {
        const auto& v = require(key);
        if (!v.is_number_integer()) fail(ErrorCode::config, std::string("key '") + key + "' must be an integer");
        return v.get<int>();
    };

    const int p = as_int("p");
    const int n = as_int("n");
    const int T = as_int("T");

    const auto& jspikes = require("spikes");
    if (!jspikes.is_array()) fail(ErrorCode::config, "key 'spikes' must be an array");
    std::vector<double> spikes = jspikes.get<std::vector<double>>();

    const auto& jmult = require("multiplicities");
    if (!jmult.is_array()) fail(ErrorCode::config, "key 'multiplicities' must be an array");
    std::vector<int> mult = jmult.get<std::vector<int>>();

    const std::string dist_name = require("dist").get<std::string>();
    EntryDist dist;
    if (dist_name == "gaussian")
        dist = EntryDist::Gaussian;
    else if (dist_name == "rademacher")
        dist = EntryDist::Rademacher;
    else if (dist_name == "uniform_sym")
        dist = EntryDist::UniformSym;
    else
        fail(ErrorCode::config, "key 'dist' must be gaussian, rademacher or uniform_sym");

    const auto& jseed = require("seed");
    if (!jseed.is_number_integer() && !jseed.is_number_unsigned())
        fail(ErrorCode::config, "key 'seed' must be an integer");
    const std::uint64_t seed = jseed.get<std::uint64_t>();

    const int q = static_cast<int>(spikes.size());
    Eigen::MatrixXd rotation = Eigen::MatrixXd::Identity(q, q);
    bool has_rotation = false;
    if (j.contains("rotation")) {
        const auto& jr = j.at("rotation");
        if (!jr.is_array() || jr.size() != static_cast<std::size_t>(q) * q)
            fail(ErrorCode::config, "key 'rotation' must be a row-major array of length q^2");
        for (int r = 0; r < q; ++r)
            for (int c = 0; c < q; ++c)
                rotation(r, c) = jr.at(static_cast<std::size_t>(r) * q + c).get<double>();
        has_rotation = true;
    }

    try {
        Regime regime(p, n, T, q);
        SpikeModel model = build_spike_model(spikes, mult, has_rotation ? &rotation : nullptr, dist);
        ExperimentConfig config{regime, model};
        config.master_seed = seed;
        if (j.contains("replications")) config.replications = j.at("replications").get<int>();
        if (j.contains("targets")) config.targets = j.at("targets").get<std::vector<int>>();
        if (j.contains("mode")) {
            const std::string m = j.at("mode").get<std::string>();
            if (m == "consistency")
                config.mode = ExperimentMode::consistency;
            else if (m == "clt_simple")
                config.mode = ExperimentMode::clt_simple;
            else if (m == "clt_block")
                config.mode = ExperimentMode::clt_block;
            else
                fail(ErrorCode::config, "key 'mode' must be consistency, clt_simple or clt_block");
        }
        config.validate();
        return config;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::config) throw;
        fail(ErrorCode::config, e.what());  // model/regime violations are config failures here
    }
}

inline ordered_json config_to_json(const ExperimentConfig& config) {
    ordered_json j;
    j["p"] = config.regime.p();
    j["n"] = config.regime.n();
    j["T"] = config.regime.T();
    j["spikes"] = config.model.spikes();
    j["multiplicities"] = config.model.multiplicities();
    if (!config.model.identity_rotation()) {
        std::vector<double> flat;
        const auto& rot = config.model.rotation();
        flat.reserve(static_cast<std::size_t>(rot.size()));
        for (int r = 0; r < rot.rows(); ++r)
            for (int c = 0; c < rot.cols(); ++c) flat.push_back(rot(r, c));
        j["rotation"] = flat;
    }
    j["dist"] = entry_dist_name(config.model.entry_dist());
    j["seed"] = config.master_seed;
    j["replications"] = config.replications;
    if (!config.targets.empty()) j["targets"] = config.targets;
    j["mode"] = mode_name(config.mode);
    return j;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open config file " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config, std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace sfl
