// Copyright 2026 The atomchaos Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Run configuration: a JSON document with the sections params, constants,
// ensemble, chaos, sweep and output. Every key is optional except the three
// model parameters; unknown keys are rejected with their full path.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomchaos/ensemble.hpp"

namespace atomchaos {

struct ChaosSettings {
    LyapunovConfig lyapunov;
    std::size_t per_bin = 16;
    double jitter = 0.02;
    std::optional<double> threshold;
    std::size_t noise_floor_runs = 2;
};

struct SweepSettings {
    double p_min = 700.0;
    double p_max = 7000.0;
    std::size_t bins = 12;
    std::vector<double> grid;  // explicit grid; overrides p_min/p_max/bins
    double bin_spread = 0.0;

    [[nodiscard]] std::vector<double> momenta() const { return grid.empty() ? log_grid(p_min, p_max, bins) : grid; }
};

struct OutputSettings {
    std::string prefix = "atomchaos";
};

struct RunConfig {
    SimParams params;
    double step = kDefaultStep;
    PhysicalConstants constants;
    bool constants_given = false;
    bool check_consistency = true;
    double consistency_tolerance = 0.01;
    EnsembleSpec ensemble;
    WindowPolicy window;
    ChaosSettings chaos;
    SweepSettings sweep;
    OutputSettings output;

    // Sweep specification assembled from the sections.
    [[nodiscard]] SweepSpec sweep_spec() const
    {
        SweepSpec s;
        s.grid = sweep.momenta();
        s.ensemble = ensemble;
        s.ensemble.step = step;
        s.window = window;
        s.lyapunov = chaos.lyapunov;
        s.lyapunov.step = step;
        s.chaos_per_bin = chaos.per_bin;
        s.chaos_jitter = chaos.jitter;
        s.threshold = chaos.threshold;
        s.noise_floor_runs = chaos.noise_floor_runs;
        s.bin_spread = sweep.bin_spread;
        return s;
    }
};

namespace detail {

using nlohmann::json;

class ConfigReader {
public:
    explicit ConfigReader(const json& root) : root_(root) {}

    const json* section(const char* name, std::initializer_list<const char*> allowed)
    {
        if (!root_.contains(name)) {
            return nullptr;
        }
        const json& sec = root_.at(name);
        if (!sec.is_object()) {
            throw Error(std::string(name) + " must be an object");
        }
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& item : sec.items()) {
            if (!keys.contains(item.key())) {
                throw Error("unknown key '" + std::string(name) + "." + item.key() + "'");
            }
        }
        return &sec;
    }

    static double number(const json& sec, const char* sname, const char* key, double fallback)
    {
        if (!sec.contains(key)) {
            return fallback;
        }
        const json& v = sec.at(key);
        if (!v.is_number()) {
            throw Error(std::string(sname) + "." + key + " must be a number");
        }
        return v.get<double>();
    }

    static double required_number(const json& sec, const char* sname, const char* key)
    {
        if (!sec.contains(key)) {
            throw Error("missing required key '" + std::string(sname) + "." + key + "'");
        }
        return number(sec, sname, key, 0.0);
    }

    static std::uint64_t count(const json& sec, const char* sname, const char* key, std::uint64_t fallback)
    {
        if (!sec.contains(key)) {
            return fallback;
        }
        const json& v = sec.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            throw Error(std::string(sname) + "." + key + " must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    static bool flag(const json& sec, const char* sname, const char* key, bool fallback)
    {
        if (!sec.contains(key)) {
            return fallback;
        }
        if (!sec.at(key).is_boolean()) {
            throw Error(std::string(sname) + "." + key + " must be a boolean");
        }
        return sec.at(key).get<bool>();
    }

    static std::string text(const json& sec, const char* sname, const char* key, const std::string& fallback)
    {
        if (!sec.contains(key)) {
            return fallback;
        }
        if (!sec.at(key).is_string()) {
            throw Error(std::string(sname) + "." + key + " must be a string");
        }
        return sec.at(key).get<std::string>();
    }

private:
    const json& root_;
};

inline void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw Error(message);
    }
}

}  // namespace detail

// Validates a parsed JSON document and fills defaults. Errors name the key path.
inline RunConfig parse_config(const nlohmann::json& root)
{
    using detail::ConfigReader;
    using detail::require;
    if (!root.is_object()) {
        throw Error("configuration must be a JSON object");
    }
    static const std::set<std::string> sections = {"params", "constants", "ensemble", "chaos", "sweep", "output"};
    for (const auto& item : root.items()) {
        if (!sections.contains(item.key())) {
            throw Error("unknown key '" + item.key() + "'");
        }
    }
    ConfigReader rd(root);
    RunConfig cfg;

    const auto* params = rd.section("params", {"gamma", "omega_r", "delta", "step"});
    if (params == nullptr) {
        throw Error("missing required section 'params'");
    }
    cfg.params.gamma = ConfigReader::required_number(*params, "params", "gamma");
    cfg.params.omega_r = ConfigReader::required_number(*params, "params", "omega_r");
    cfg.params.delta = ConfigReader::required_number(*params, "params", "delta");
    cfg.step = ConfigReader::number(*params, "params", "step", kDefaultStep);
    require(cfg.params.gamma >= 0.0, "params.gamma must be ≥ 0");
    require(cfg.params.omega_r > 0.0, "params.omega_r must be > 0");
    require(std::abs(cfg.params.delta) < 1.0, "params.delta must satisfy |delta| < 1");
    require(cfg.step > 0.0, "params.step must be > 0");

    if (const auto* c = rd.section("constants", {"rabi_frequency", "natural_linewidth", "wavelength", "atomic_mass",
                                                  "reduced_planck", "boltzmann", "check_consistency", "tolerance"})) {
        cfg.constants_given = true;
        auto& k = cfg.constants;
        k.rabi_frequency = ConfigReader::number(*c, "constants", "rabi_frequency", k.rabi_frequency);
        k.natural_linewidth = ConfigReader::number(*c, "constants", "natural_linewidth", k.natural_linewidth);
        k.wavelength = ConfigReader::number(*c, "constants", "wavelength", k.wavelength);
        k.atomic_mass = ConfigReader::number(*c, "constants", "atomic_mass", k.atomic_mass);
        k.reduced_planck = ConfigReader::number(*c, "constants", "reduced_planck", k.reduced_planck);
        k.boltzmann = ConfigReader::number(*c, "constants", "boltzmann", k.boltzmann);
        cfg.check_consistency = ConfigReader::flag(*c, "constants", "check_consistency", true);
        cfg.consistency_tolerance = ConfigReader::number(*c, "constants", "tolerance", 0.01);
        require(cfg.consistency_tolerance > 0.0, "constants.tolerance must be > 0");
    }
    cfg.constants.validate();
    if (cfg.constants_given && cfg.check_consistency) {
        cfg.constants.check_consistency(cfg.params, cfg.consistency_tolerance);
    }

    if (const auto* e = rd.section("ensemble", {"n_traj", "p0_mean", "p0_sigma", "x0_law", "x0_mean", "x0_sigma",
                                                 "tau_max", "sample_interval", "seed", "jumps", "estimator",
                                                 "transient", "sigma_cap", "drift_cap", "horizon_fraction",
                                                 "jackknife_groups"})) {
        auto& s = cfg.ensemble;
        s.n_traj = ConfigReader::count(*e, "ensemble", "n_traj", s.n_traj);
        s.p0_mean = ConfigReader::number(*e, "ensemble", "p0_mean", s.p0_mean);
        s.p0_sigma = ConfigReader::number(*e, "ensemble", "p0_sigma", s.p0_sigma);
        const std::string law = ConfigReader::text(*e, "ensemble", "x0_law", "uniform");
        require(law == "uniform" || law == "gaussian", "ensemble.x0_law must be \"uniform\" or \"gaussian\"");
        s.x0_law = law == "uniform" ? PositionLaw::UniformPhase : PositionLaw::Gaussian;
        s.x0_mean = ConfigReader::number(*e, "ensemble", "x0_mean", s.x0_mean);
        s.x0_sigma = ConfigReader::number(*e, "ensemble", "x0_sigma", s.x0_sigma);
        s.tau_max = ConfigReader::number(*e, "ensemble", "tau_max", s.tau_max);
        s.sample_interval = ConfigReader::number(*e, "ensemble", "sample_interval", s.sample_interval);
        s.seed = ConfigReader::count(*e, "ensemble", "seed", s.seed);
        s.jumps_enabled = ConfigReader::flag(*e, "ensemble", "jumps", s.jumps_enabled);
        const std::string est = ConfigReader::text(*e, "ensemble", "estimator", "plain");
        require(est == "plain" || est == "recoil_conditioned",
                "ensemble.estimator must be \"plain\" or \"recoil_conditioned\"");
        cfg.window.estimator = est == "plain" ? VarianceEstimator::Plain : VarianceEstimator::RecoilConditioned;
        cfg.window.transient = ConfigReader::number(*e, "ensemble", "transient", cfg.window.transient);
        cfg.window.sigma_cap = ConfigReader::number(*e, "ensemble", "sigma_cap", cfg.window.sigma_cap);
        cfg.window.drift_cap = ConfigReader::number(*e, "ensemble", "drift_cap", cfg.window.drift_cap);
        cfg.window.horizon_fraction =
            ConfigReader::number(*e, "ensemble", "horizon_fraction", cfg.window.horizon_fraction);
        cfg.window.jackknife_groups =
            ConfigReader::count(*e, "ensemble", "jackknife_groups", cfg.window.jackknife_groups);
        require(s.n_traj >= 2, "ensemble.n_traj must be ≥ 2");
        require(s.p0_sigma >= 0.0, "ensemble.p0_sigma must be ≥ 0");
        require(s.x0_sigma >= 0.0, "ensemble.x0_sigma must be ≥ 0");
        require(s.tau_max > 0.0, "ensemble.tau_max must be > 0");
        require(s.sample_interval >= cfg.step && s.sample_interval <= s.tau_max,
                "ensemble.sample_interval must lie in [params.step, ensemble.tau_max]");
        require(cfg.window.sigma_cap > 0.0, "ensemble.sigma_cap must be > 0");
        require(cfg.window.drift_cap > 0.0, "ensemble.drift_cap must be > 0");
        require(cfg.window.horizon_fraction > 0.0, "ensemble.horizon_fraction must be > 0");
        require(cfg.window.jackknife_groups >= 2, "ensemble.jackknife_groups must be ≥ 2");
    }
    cfg.ensemble.step = cfg.step;

    if (const auto* c = rd.section("chaos", {"tau_max", "renorm_interval", "per_bin", "jitter", "threshold",
                                              "noise_floor_runs", "separation"})) {
        auto& l = cfg.chaos.lyapunov;
        l.tau_max = ConfigReader::number(*c, "chaos", "tau_max", l.tau_max);
        l.renorm_interval = ConfigReader::number(*c, "chaos", "renorm_interval", l.renorm_interval);
        l.separation = ConfigReader::number(*c, "chaos", "separation", l.separation);
        cfg.chaos.per_bin = ConfigReader::count(*c, "chaos", "per_bin", cfg.chaos.per_bin);
        cfg.chaos.jitter = ConfigReader::number(*c, "chaos", "jitter", cfg.chaos.jitter);
        cfg.chaos.noise_floor_runs = ConfigReader::count(*c, "chaos", "noise_floor_runs", cfg.chaos.noise_floor_runs);
        if (c->contains("threshold") && !c->at("threshold").is_null()) {
            cfg.chaos.threshold = ConfigReader::number(*c, "chaos", "threshold", 0.0);
            require(*cfg.chaos.threshold > 0.0, "chaos.threshold must be > 0");
        }
        require(l.renorm_interval >= cfg.step, "chaos.renorm_interval must be ≥ params.step");
        require(l.tau_max >= l.renorm_interval, "chaos.tau_max must be ≥ chaos.renorm_interval");
        require(l.separation > 0.0, "chaos.separation must be > 0");
        require(cfg.chaos.per_bin >= 1, "chaos.per_bin must be ≥ 1");
        require(cfg.chaos.jitter >= 0.0 && cfg.chaos.jitter < 1.0, "chaos.jitter must lie in [0, 1)");
        require(cfg.chaos.noise_floor_runs >= 1, "chaos.noise_floor_runs must be ≥ 1");
    }
    cfg.chaos.lyapunov.step = cfg.step;

    if (const auto* s = rd.section("sweep", {"p_min", "p_max", "bins", "grid", "bin_spread"})) {
        auto& w = cfg.sweep;
        w.p_min = ConfigReader::number(*s, "sweep", "p_min", w.p_min);
        w.p_max = ConfigReader::number(*s, "sweep", "p_max", w.p_max);
        w.bins = ConfigReader::count(*s, "sweep", "bins", w.bins);
        w.bin_spread = ConfigReader::number(*s, "sweep", "bin_spread", w.bin_spread);
        require(w.bin_spread >= 0.0 && w.bin_spread <= 1.0, "sweep.bin_spread must lie in [0, 1]");
        if (s->contains("grid")) {
            const auto& g = s->at("grid");
            require(g.is_array() && !g.empty(), "sweep.grid must be a non-empty array of numbers");
            for (const auto& v : g) {
                require(v.is_number() && v.get<double>() > 0.0, "sweep.grid entries must be positive numbers");
                w.grid.push_back(v.get<double>());
            }
            for (std::size_t i = 1; i < w.grid.size(); ++i) {
                require(w.grid[i] > w.grid[i - 1], "sweep.grid must be strictly increasing");
            }
        } else {
            require(w.p_min > 0.0 && w.p_max > w.p_min, "sweep.p_max must exceed sweep.p_min > 0");
            require(w.bins >= 2, "sweep.bins must be ≥ 2");
        }
    }

    if (const auto* o = rd.section("output", {"prefix"})) {
        cfg.output.prefix = ConfigReader::text(*o, "output", "prefix", cfg.output.prefix);
        require(!cfg.output.prefix.empty() && cfg.output.prefix.find('/') == std::string::npos,
                "output.prefix must be a non-empty file-name prefix");
    }
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text)
{
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("configuration is not valid JSON: ") + e.what());
    }
    return parse_config(root);
}

inline RunConfig parse_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open configuration file '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// Serializes every recognized key; parse_config(emit_config(c)) reproduces c.
inline nlohmann::json emit_config(const RunConfig& cfg)
{
    nlohmann::json j;
    j["params"] = {{"gamma", cfg.params.gamma}, {"omega_r", cfg.params.omega_r}, {"delta", cfg.params.delta},
                   {"step", cfg.step}};
    if (cfg.constants_given) {
        const auto& k = cfg.constants;
        j["constants"] = {{"rabi_frequency", k.rabi_frequency}, {"natural_linewidth", k.natural_linewidth},
                          {"wavelength", k.wavelength},         {"atomic_mass", k.atomic_mass},
                          {"reduced_planck", k.reduced_planck}, {"boltzmann", k.boltzmann},
                          {"check_consistency", cfg.check_consistency}, {"tolerance", cfg.consistency_tolerance}};
    }
    const auto& e = cfg.ensemble;
    j["ensemble"] = {
        {"n_traj", e.n_traj},
        {"p0_mean", e.p0_mean},
        {"p0_sigma", e.p0_sigma},
        {"x0_law", e.x0_law == PositionLaw::UniformPhase ? "uniform" : "gaussian"},
        {"x0_mean", e.x0_mean},
        {"x0_sigma", e.x0_sigma},
        {"tau_max", e.tau_max},
        {"sample_interval", e.sample_interval},
        {"seed", e.seed},
        {"jumps", e.jumps_enabled},
        {"estimator", cfg.window.estimator == VarianceEstimator::Plain ? "plain" : "recoil_conditioned"},
        {"transient", cfg.window.transient},
        {"sigma_cap", cfg.window.sigma_cap},
        {"drift_cap", cfg.window.drift_cap},
        {"horizon_fraction", cfg.window.horizon_fraction},
        {"jackknife_groups", cfg.window.jackknife_groups},
    };
    j["chaos"] = {{"tau_max", cfg.chaos.lyapunov.tau_max},
                  {"renorm_interval", cfg.chaos.lyapunov.renorm_interval},
                  {"separation", cfg.chaos.lyapunov.separation},
                  {"per_bin", cfg.chaos.per_bin},
                  {"jitter", cfg.chaos.jitter},
                  {"noise_floor_runs", cfg.chaos.noise_floor_runs}};
    if (cfg.chaos.threshold) {
        j["chaos"]["threshold"] = *cfg.chaos.threshold;
    }
    j["sweep"] = {{"p_min", cfg.sweep.p_min}, {"p_max", cfg.sweep.p_max}, {"bins", cfg.sweep.bins},
                  {"bin_spread", cfg.sweep.bin_spread}};
    if (!cfg.sweep.grid.empty()) {
        j["sweep"]["grid"] = cfg.sweep.grid;
    }
    j["output"] = {{"prefix", cfg.output.prefix}};
    return j;
}

}  // namespace atomchaos
