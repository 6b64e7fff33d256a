#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include "metastab/errors.hpp"

namespace metastab::app {

namespace {

using nlohmann::json;

const std::vector<std::pair<Experiment, std::string>>& name_table() {
    static const std::vector<std::pair<Experiment, std::string>> t = {
        {Experiment::TransitionSweep, "transition-sweep"}, {Experiment::SingleTrajectory, "single-trajectory"},
        {Experiment::PrefactorCurve, "prefactor-curve"},   {Experiment::Bifurcation, "bifurcation"},
        {Experiment::Ergodicity, "ergodicity"},            {Experiment::MeasureCheck, "measure-check"}};
    return t;
}

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) fail(where + " must be an object");
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.contains(k)) fail("unknown key '" + k + "' in " + where);
    }
}

double get_number(const json& v, const std::string& key) {
    if (!v.is_number()) fail("'" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail("'" + key + "' must be finite");
    return x;
}

std::size_t get_count(const json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail("'" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

/// A grid is either an array of numbers or {"start", "stop", "step"}, both ends inclusive.
std::vector<double> get_grid(const json& v, const std::string& key) {
    std::vector<double> out;
    if (v.is_array()) {
        for (const auto& x : v) out.push_back(get_number(x, key));
        return out;
    }
    if (v.is_object()) {
        check_keys(v, {"start", "stop", "step"}, "'" + key + "'");
        if (!v.contains("start") || !v.contains("stop") || !v.contains("step")) {
            fail("'" + key + "' range needs start, stop and step");
        }
        const double a = get_number(v["start"], key), b = get_number(v["stop"], key);
        const double h = get_number(v["step"], key);
        if (h == 0.0 || (b - a) / h < 0.0) fail("'" + key + "' range step has the wrong sign");
        const auto count = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9)) + 1;
        if (count > 1000000) fail("'" + key + "' range is too long");
        for (std::size_t i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * h);
        return out;
    }
    fail("'" + key + "' must be an array or a {start, stop, step} range");
}

void apply_system(const json& s, ExperimentConfig& c) {
    check_keys(s, {"n", "delta", "beta", "boundary", "potential", "alpha"}, "'system'");
    if (s.contains("n")) c.system.n = get_count(s["n"], "system.n");
    if (s.contains("delta")) c.system.delta = get_number(s["delta"], "system.delta");
    if (s.contains("beta")) c.system.beta = get_number(s["beta"], "system.beta");
    if (s.contains("boundary")) {
        if (!s["boundary"].is_string()) fail("'system.boundary' must be a string");
        try {
            c.system.bc = boundary_from_string(s["boundary"].get<std::string>());
        } catch (const ContractViolation& e) {
            fail(e.what());
        }
    }
    if (s.contains("alpha")) c.alpha = get_number(s["alpha"], "system.alpha");
    std::string pot = c.system.potential.family() == Potential::Family::Quadratic ? "quadratic" : "double_well";
    if (s.contains("potential")) {
        if (!s["potential"].is_string()) fail("'system.potential' must be a string");
        pot = s["potential"].get<std::string>();
    }
    if (pot == "double_well") {
        c.system.potential = Potential::double_well();
    } else if (pot == "quadratic") {
        if (!(c.alpha > 0.0)) fail("'system.alpha' must be positive");
        c.system.potential = Potential::quadratic(c.alpha);
    } else {
        fail("unknown potential '" + pot + "' (expected double_well or quadratic)");
    }
}

std::vector<double> linspace_step(double a, double b, double h) {
    std::vector<double> out;
    for (std::size_t i = 0; a + static_cast<double>(i) * h <= b + 1e-12; ++i) out.push_back(a + static_cast<double>(i) * h);
    return out;
}

}  // namespace

std::string to_string(Experiment e) {
    for (const auto& [k, v] : name_table()) {
        if (k == e) return v;
    }
    return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
    for (const auto& [k, v] : name_table()) {
        if (v == name) return k;
    }
    fail("unknown experiment '" + name + "'");
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [k, v] : name_table()) n.push_back(v);
        return n;
    }();
    return names;
}

ExperimentConfig default_config(Experiment e) {
    ExperimentConfig c;
    c.experiment = e;
    c.gamma_grid = {0.0, 0.5, 1.0, 2.0, 5.0};
    switch (e) {
        case Experiment::TransitionSweep:
            c.delta_grid = {0.2, 1.0};
            c.barrier_grid = {2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
            break;
        case Experiment::SingleTrajectory:
            c.delta_grid = {0.2};
            c.barrier_grid = {4.0};
            c.ensemble = 1;
            c.horizon_tau = 50.0;
            break;
        case Experiment::PrefactorCurve:
            c.delta_grid = linspace_step(0.33, 1.5, 0.01);
            break;
        case Experiment::Bifurcation:
            c.delta_grid = linspace_step(0.05, 0.5, 0.005);
            break;
        case Experiment::Ergodicity:
            c.system.n = 1024;
            c.delta_grid = {0.05, 1.0};
            c.barrier_grid = {3.0};
            c.horizon = 600.0;
            break;
        case Experiment::MeasureCheck:
            c.system.potential = Potential::quadratic(1.0);
            c.system.beta = 10.0;
            c.n_grid = {64, 128, 256, 512};
            c.concentration_betas = {0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0};
            break;
    }
    return c;
}

ExperimentConfig parse_config(const json& doc, Experiment e) {
    ExperimentConfig c = default_config(e);
    check_keys(doc,
               {"experiment", "system", "delta_grid", "beta_grid", "barrier_grid", "n_grid", "ensemble", "horizon",
                "horizon_tau", "dt", "dt_factor", "stratify", "gamma_grid", "seeds", "dump_interval", "samples",
                "concentration_betas", "epsilon", "box_constant", "terms", "seed", "output", "workers"},
               "config");
    if (doc.contains("experiment")) {
        if (!doc["experiment"].is_string()) fail("'experiment' must be a string");
        if (experiment_from_string(doc["experiment"].get<std::string>()) != e) {
            fail("config is for '" + doc["experiment"].get<std::string>() + "', not '" + to_string(e) + "'");
        }
    }
    if (doc.contains("system")) apply_system(doc["system"], c);
    if (doc.contains("delta_grid")) c.delta_grid = get_grid(doc["delta_grid"], "delta_grid");
    if (doc.contains("beta_grid")) c.beta_grid = get_grid(doc["beta_grid"], "beta_grid");
    if (doc.contains("barrier_grid")) c.barrier_grid = get_grid(doc["barrier_grid"], "barrier_grid");
    if (doc.contains("n_grid")) {
        c.n_grid.clear();
        if (!doc["n_grid"].is_array()) fail("'n_grid' must be an array");
        for (const auto& v : doc["n_grid"]) c.n_grid.push_back(get_count(v, "n_grid"));
    }
    if (doc.contains("ensemble")) c.ensemble = get_count(doc["ensemble"], "ensemble");
    if (doc.contains("horizon")) c.horizon = get_number(doc["horizon"], "horizon");
    if (doc.contains("horizon_tau")) c.horizon_tau = get_number(doc["horizon_tau"], "horizon_tau");
    if (doc.contains("dt")) {
        if (doc["dt"].is_null()) {
            c.dt.reset();
        } else {
            c.dt = get_number(doc["dt"], "dt");
        }
    }
    if (doc.contains("dt_factor")) c.dt_factor = get_number(doc["dt_factor"], "dt_factor");
    if (doc.contains("stratify")) {
        if (!doc["stratify"].is_boolean()) fail("'stratify' must be true or false");
        c.stratify = doc["stratify"].get<bool>();
    }
    if (doc.contains("gamma_grid")) c.gamma_grid = get_grid(doc["gamma_grid"], "gamma_grid");
    if (doc.contains("seeds")) c.seeds = get_count(doc["seeds"], "seeds");
    if (doc.contains("dump_interval")) c.dump_interval = get_number(doc["dump_interval"], "dump_interval");
    if (doc.contains("samples")) c.samples = get_count(doc["samples"], "samples");
    if (doc.contains("concentration_betas")) {
        c.concentration_betas = get_grid(doc["concentration_betas"], "concentration_betas");
    }
    if (doc.contains("epsilon")) c.epsilon = get_number(doc["epsilon"], "epsilon");
    if (doc.contains("box_constant")) c.box_constant = get_number(doc["box_constant"], "box_constant");
    if (doc.contains("terms")) c.terms = get_count(doc["terms"], "terms");
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0)) {
            fail("'seed' must be a non-negative integer");
        }
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("output")) {
        if (!doc["output"].is_string()) fail("'output' must be a string");
        c.output = doc["output"].get<std::string>();
    }
    if (doc.contains("workers")) c.workers = get_count(doc["workers"], "workers");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, Experiment e) {
    std::ifstream in(path);
    if (!in) fail("cannot read config file " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& err) {
        fail("config " + path.string() + " is not valid JSON: " + err.what());
    }
    return parse_config(doc, e);
}

void ExperimentConfig::validate() const {
    try {
        system.validate();
    } catch (const ContractViolation& e) {
        fail(std::string("system: ") + e.what());
    }
    auto positive_grid = [](const std::vector<double>& g, const std::string& name) {
        if (g.empty()) fail("'" + name + "' must not be empty");
        for (double v : g) {
            if (!(v > 0.0)) fail("'" + name + "' entries must be positive");
        }
    };
    auto need_barrier_or_beta = [&] {
        if (beta_grid.empty()) {
            positive_grid(barrier_grid, "barrier_grid");
        } else {
            positive_grid(beta_grid, "beta_grid");
        }
    };
    auto need_double_well = [&] {
        if (system.potential.family() != Potential::Family::DoubleWell) {
            fail(to_string(experiment) + " needs the double_well potential");
        }
    };
    if (!(horizon >= 0.0)) fail("'horizon' must be >= 0");
    if (!(horizon_tau > 0.0)) fail("'horizon_tau' must be positive");
    if (dt && !(*dt > 0.0)) fail("'dt' must be positive");
    if (!(dt_factor > 0.0 && dt_factor <= 1.0)) fail("'dt_factor' must lie in (0, 1]");
    for (double g : gamma_grid) {
        if (!(g >= 0.0)) fail("'gamma_grid' entries must be >= 0");
    }

    switch (experiment) {
        case Experiment::TransitionSweep:
        case Experiment::SingleTrajectory:
            need_double_well();
            positive_grid(delta_grid, "delta_grid");
            need_barrier_or_beta();
            if (ensemble == 0) fail("'ensemble' must be at least 1");
            if (experiment == Experiment::SingleTrajectory && ensemble != 1) {
                fail("single-trajectory runs exactly one trajectory; drop 'ensemble' or set it to 1");
            }
            break;
        case Experiment::PrefactorCurve:
        case Experiment::Bifurcation:
            need_double_well();
            positive_grid(delta_grid, "delta_grid");
            if (experiment == Experiment::Bifurcation) {
                const bool up = std::is_sorted(delta_grid.begin(), delta_grid.end());
                const bool down = std::is_sorted(delta_grid.rbegin(), delta_grid.rend());
                if (!up && !down) fail("'delta_grid' must be monotone for bifurcation");
            }
            break;
        case Experiment::Ergodicity:
            need_double_well();
            positive_grid(delta_grid, "delta_grid");
            need_barrier_or_beta();
            if (seeds == 0) fail("'seeds' must be at least 1");
            if (!(dump_interval > 0.0)) fail("'dump_interval' must be positive");
            break;
        case Experiment::MeasureCheck:
            if (system.potential.family() != Potential::Family::Quadratic) {
                fail("measure-check needs the quadratic potential");
            }
            if (samples == 0) fail("'samples' must be at least 1");
            if (n_grid.empty()) fail("'n_grid' must not be empty");
            for (auto n : n_grid) {
                if (n < 2) fail("'n_grid' entries must be >= 2");
            }
            positive_grid(concentration_betas, "concentration_betas");
            if (!(epsilon > 0.0 && epsilon < 1.0)) fail("'epsilon' must lie in (0, 1)");
            if (!(box_constant > 0.0)) fail("'box_constant' must be positive");
            if (terms == 0) fail("'terms' must be at least 1");
            break;
    }
}

void prepare_output_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto probe = dir / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f) fail("output directory " + dir.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
}

json to_json(const ExperimentConfig& c) {
    json sys = {{"n", c.system.n},
                {"delta", c.system.delta},
                {"beta", c.system.beta},
                {"boundary", to_string(c.system.bc)},
                {"potential", c.system.potential.family() == Potential::Family::Quadratic ? "quadratic" : "double_well"},
                {"alpha", c.alpha}};
    return {{"experiment", to_string(c.experiment)},
            {"system", sys},
            {"delta_grid", c.delta_grid},
            {"beta_grid", c.beta_grid},
            {"barrier_grid", c.barrier_grid},
            {"n_grid", c.n_grid},
            {"ensemble", c.ensemble},
            {"horizon", c.horizon},
            {"horizon_tau", c.horizon_tau},
            {"dt", c.dt ? json(*c.dt) : json(nullptr)},
            {"dt_factor", c.dt_factor},
            {"stratify", c.stratify},
            {"gamma_grid", c.gamma_grid},
            {"seeds", c.seeds},
            {"dump_interval", c.dump_interval},
            {"samples", c.samples},
            {"concentration_betas", c.concentration_betas},
            {"epsilon", c.epsilon},
            {"box_constant", c.box_constant},
            {"terms", c.terms},
            {"seed", c.seed},
            {"output", c.output.string()},
            {"workers", c.workers}};
}

std::size_t effective_workers(const ExperimentConfig& c) {
    if (c.workers > 0) return c.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace metastab::app
