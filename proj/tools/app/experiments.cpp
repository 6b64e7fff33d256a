#include "experiments.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "metastab/dynamics.hpp"
#include "metastab/errors.hpp"
#include "metastab/random.hpp"
#include "parallel.hpp"

namespace metastab::app {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<double> betas_for(const ExperimentConfig& c, double barrier_height) {
    if (!c.beta_grid.empty()) return c.beta_grid;
    std::vector<double> out;
    for (double x : c.barrier_grid) out.push_back(x / barrier_height);
    return out;
}

struct TrajectoryOutcome {
    CrossingRecord record;
    double drift = 0.0;
    std::string error;
};

TrajectoryOutcome run_counted(const SystemParams& params, const DividingSurface& surface, LatticeState ic,
                              double horizon, double dt, std::uint64_t index) {
    IntegratorConfig ic_cfg;
    ic_cfg.dt = dt;
    ic_cfg.horizon = horizon;
    ic_cfg.cadence = std::max<std::size_t>(1, static_cast<std::size_t>(horizon / dt / 1000.0));
    CrossingCounter counter(surface, index);
    Observer* obs[] = {&counter};
    auto summary = integrate(params, std::move(ic), ic_cfg, obs);
    TrajectoryOutcome out;
    out.record = counter.record(horizon);
    out.drift = summary.max_relative_drift();
    if (summary.aborted) out.error = summary.error;
    return out;
}

SweepResult run_sweep(const ExperimentConfig& c, bool single) {
    const std::size_t workers = effective_workers(c);
    SweepResult result;
    std::uint64_t task = 0;
    for (double delta : c.delta_grid) {
        SystemParams params = c.system;
        params.delta = delta;
        std::optional<Landscape> land;
        std::string land_error;
        try {
            land = build_landscape(params);
        } catch (const std::exception& e) {
            land_error = e.what();
        }
        const double barrier_height = land ? land->barrier_plus() : 1.0;
        for (double beta : betas_for(c, barrier_height)) {
            SweepRow row;
            row.delta = delta;
            row.beta = beta;
            row.seed = task_seed(c.seed, task++);
            row.report.n = params.n;
            row.report.delta = delta;
            row.report.beta = beta;
            row.report.gamma_grid = c.gamma_grid;
            if (!land) {
                row.error = "critical points: " + land_error;
                result.rows.push_back(std::move(row));
                continue;
            }
            try {
                SystemParams p = params;
                p.beta = beta;
                row.barrier = land->barrier_plus();
                row.saddle_index = land->saddle.morse_index;
                auto& th = row.report.theory;
                th = tst_rate_theory(land->saddle_data(), land->plus_data(), land->minus_data(), beta, p.n);
                try {
                    row.report.tau_micro = microcanonical_tau(land->saddle_data(), land->plus_data(), beta, p.n);
                } catch (const DomainError&) {
                    row.report.tau_micro.reset();
                }
                const double lambda1 = land->saddle_spectrum.eigenvalues.front();
                for (double g : c.gamma_grid) {
                    row.report.tau_langevin.push_back(langevin_tau(g, lambda1, th.lambda_plus, th.barrier_plus, beta));
                }
                row.horizon = c.horizon > 0.0 ? c.horizon : c.horizon_tau * th.tau_plus_finite;
                row.dt = run_dt(c, p);

                EnsembleSpec spec;
                spec.params = p;
                spec.count = c.ensemble;
                spec.seed = row.seed;
                spec.stratify_soft_mode = c.stratify;
                CanonicalSampler sampler(spec, land->plus, land->plus_spectrum);
                auto outcomes = parallel_map(c.ensemble, workers, [&](std::size_t i) {
                    return run_counted(p, land->surface, sampler.draw(i).state, row.horizon, row.dt, i);
                });
                std::vector<CrossingRecord> records;
                for (auto& o : outcomes) {
                    if (!o.error.empty()) throw NumericalFailure("trajectory " + std::to_string(o.record.trajectory) + ": " + o.error);
                    row.max_energy_drift = std::max(row.max_energy_drift, o.drift);
                    row.trajectories_crossing += o.record.count() > 0;
                    records.push_back(std::move(o.record));
                }
                row.report.empirical = empirical_rate(records, row.horizon);
                if (single) row.residency = residency_correlation(records.front());
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

KernelKind kernel_for(Boundary bc) {
    return bc == Boundary::Neumann ? KernelKind::NeumannMassive : KernelKind::DirichletMassive;
}

void note_task(ExperimentOutputs& out, const std::string& name, std::uint64_t seed, const std::string& error) {
    nlohmann::json t = {{"task", name}, {"seed", seed}, {"status", error.empty() ? "ok" : "failed"}};
    if (!error.empty()) {
        t["error"] = error;
        ++out.failures;
    }
    out.tasks.push_back(std::move(t));
}

}  // namespace

std::uint64_t task_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x5851f42d4c957f2dULL));
}

double run_dt(const ExperimentConfig& c, const SystemParams& params) {
    return c.dt ? *c.dt : c.dt_factor * stable_dt(params);
}

Landscape build_landscape(const SystemParams& params) {
    Landscape l;
    l.params = params;
    std::vector<double> up(params.n, 1.0), down(params.n, -1.0);
    l.saddle = find_saddle(params);
    l.plus = find_minimizer(params, up);
    l.minus = find_minimizer(params, down);
    l.saddle_spectrum = hessian_spectrum(params, l.saddle.u, true);
    l.plus_spectrum = hessian_spectrum(params, l.plus.u, true);
    l.minus_spectrum = hessian_spectrum(params, l.minus.u, true);
    l.surface = make_dividing_surface(l.saddle, l.saddle_spectrum, l.plus.u);
    return l;
}

SweepResult run_transition_sweep(const ExperimentConfig& c) { return run_sweep(c, false); }

SweepResult run_single_trajectory(const ExperimentConfig& c) { return run_sweep(c, true); }

std::vector<PrefactorRow> run_prefactor_curve(const ExperimentConfig& c) {
    return parallel_map(c.delta_grid.size(), effective_workers(c), [&](std::size_t i) {
        PrefactorRow row;
        row.delta = c.delta_grid[i];
        try {
            SystemParams p = c.system;
            p.delta = row.delta;
            std::vector<double> up(p.n, 1.0);
            auto saddle = find_saddle(p);
            auto plus = find_minimizer(p, up);
            row.lambda = prefactor_lambda(hessian_spectrum(p, saddle.u, false), hessian_spectrum(p, plus.u, false));
            row.barrier = barrier(saddle, plus);
            row.saddle_index = saddle.morse_index;
        } catch (const std::exception& e) {
            row.lambda = nan;
            row.barrier = nan;
            row.error = e.what();
        }
        return row;
    });
}

BifurcationResult run_bifurcation(const ExperimentConfig& c) {
    BifurcationResult r;
    r.rows = bifurcation_scan(c.system, c.delta_grid);
    const std::vector<double> shown = {0.1, 0.15, 0.2, 0.25, 0.3, 0.4};
    r.profiles = parallel_map(shown.size(), effective_workers(c), [&](std::size_t i) {
        SystemParams p = c.system;
        p.delta = shown[i];
        return SaddleProfile{shown[i], find_saddle(p).u};
    });
    return r;
}

ErgodicityResult run_ergodicity(const ExperimentConfig& c) {
    const std::size_t workers = effective_workers(c);
    ErgodicityResult result;
    std::uint64_t task = 0;
    for (double delta : c.delta_grid) {
        SystemParams params = c.system;
        params.delta = delta;
        const Landscape land = build_landscape(params);
        for (double beta : betas_for(c, land.barrier_plus())) {
            SystemParams p = params;
            p.beta = beta;
            EnsembleSpec spec;
            spec.params = p;
            spec.count = c.seeds;
            spec.seed = task_seed(c.seed, task++);
            CanonicalSampler sampler(spec, land.plus, land.plus_spectrum);
            const double dt = run_dt(c, p);
            auto runs = parallel_map(c.seeds, workers, [&](std::size_t k) {
                ErgodicityRun run;
                run.delta = delta;
                run.beta = beta;
                run.seed_index = k;
                IntegratorConfig cfg;
                cfg.dt = dt;
                cfg.horizon = c.horizon;
                cfg.cadence = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c.dump_interval / dt)));
                ReducedObserver reduced([&](std::span<const double> u) { return land.surface.distance(u); });
                CrossingCounter counter(land.surface, k);
                Observer* obs[] = {&reduced, &counter};
                auto summary = integrate(p, sampler.draw(k).state, cfg, obs);
                if (summary.aborted) run.error = summary.error;
                run.rows = reduced.rows();
                run.report = ergodicity_diagnostics(run.rows, p.potential, beta);
                run.crossings = counter.record(c.horizon);
                run.residency = residency_correlation(run.crossings);
                run.max_energy_drift = summary.max_relative_drift();
                return run;
            });
            for (auto& r : runs) result.runs.push_back(std::move(r));
        }
    }
    return result;
}

MeasureCheckResult run_measure_check(const ExperimentConfig& c) {
    const std::size_t workers = effective_workers(c);
    MeasureCheckResult result;
    const double beta = c.system.beta;
    const CovarianceKernel kernel{kernel_for(c.system.bc), c.system.delta, c.alpha};
    auto s_fn = [](double x) { return std::sin(std::numbers::pi * x); };
    auto t_fn = [](double x) { return std::cos(std::numbers::pi * x); };
    const double limit = char_functional_limit(s_fn, t_fn, beta, kernel);

    std::uint64_t task = 0;
    for (std::size_t n : c.n_grid) {
        SystemParams p = c.system;
        p.n = n;
        std::vector<double> zero(n, 0.0), s(n), t(n);
        for (std::size_t j = 0; j < n; ++j) {
            s[j] = s_fn(grid_point(j, n));
            t[j] = t_fn(grid_point(j, n));
        }
        CriticalPoint minimum;
        minimum.u = zero;
        const Spectrum spectrum = hessian_spectrum(p, zero, true);
        const DenseMatrix target = covariance_on_grid(kernel, n);

        EnsembleSpec spec;
        spec.params = p;
        spec.count = c.samples;
        spec.pin_energy = false;
        spec.seed = task_seed(c.seed, task++);
        CanonicalSampler canonical(spec, minimum, spectrum);
        MicrocanonicalSampler micro(p, static_cast<double>(n) / beta, task_seed(c.seed, task++));

        for (int which = 0; which < 2; ++which) {
            auto samples = parallel_map(c.samples, workers, [&](std::size_t i) {
                return which == 0 ? canonical.draw(i).state : micro.draw(i);
            });
            MeasureRow row;
            row.n = n;
            row.sampler = which == 0 ? "canonical" : "microcanonical";
            row.estimate = empirical_char_functional(samples, s, t);
            row.limit = limit;
            row.z_real = (row.estimate.value.real() - limit) / row.estimate.stderr_real;
            row.z_imag = row.estimate.value.imag() / row.estimate.stderr_imag;
            const DenseMatrix emp = empirical_covariance(samples, zero);
            const double m = static_cast<double>(c.samples);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double k = target(i, j) / beta;
                    const double sd = std::sqrt((target(i, i) * target(j, j) + target(i, j) * target(i, j)) / m) / beta;
                    const double err = std::abs(emp(i, j) - k);
                    row.cov_max_error = std::max(row.cov_max_error, err);
                    row.cov_max_stderr = std::max(row.cov_max_stderr, sd);
                    row.cov_max_z = std::max(row.cov_max_z, err / sd);
                }
            }
            result.rows.push_back(std::move(row));
        }
    }

    std::vector<double> lam(c.terms);
    for (std::size_t j = 0; j < c.terms; ++j) lam[j] = static_cast<double>((j + 1) * (j + 1));
    for (double b : c.concentration_betas) {
        result.concentration.push_back({b, concentration_bound(b, lam, c.epsilon, c.box_constant)});
    }
    return result;
}

ExperimentOutputs tabulate(const SweepResult& r, bool single) {
    ExperimentOutputs out;
    CsvTable sweep;
    sweep.columns = {"delta",        "beta",         "barrier",       "tau_emp",          "tau_emp_stderr",
                     "tau_theory_finiteN", "tau_theory_limit", "tau_micro", "nu_emp",       "nu_theory",
                     "mean_crossings", "lower_bound", "trajectories_crossing", "Lambda", "saddle_index",
                     "horizon",      "dt",           "max_energy_drift"};
    if (single) {
        sweep.columns.push_back("residency_corr");
        sweep.columns.push_back("residency_band");
    }
    CsvTable langevin;
    langevin.columns = {"delta", "beta", "gamma", "tau_langevin"};
    nlohmann::json reports = nlohmann::json::array();
    for (const auto& row : r.rows) {
        const auto& e = row.report.empirical;
        const auto& th = row.report.theory;
        const bool ok = row.error.empty();
        auto v = [&](double x) { return ok ? x : nan; };
        std::vector<double> line = {row.delta,
                                    row.beta,
                                    v(row.barrier),
                                    v(e.tau),
                                    v(e.tau_stderr),
                                    v(th.tau_plus_finite),
                                    v(th.tau_plus_limit),
                                    ok && row.report.tau_micro ? *row.report.tau_micro : nan,
                                    v(e.nu),
                                    v(th.nu_canonical),
                                    v(e.mean_crossings),
                                    v(e.lower_bound ? 1.0 : 0.0),
                                    v(static_cast<double>(row.trajectories_crossing)),
                                    v(th.lambda_plus),
                                    v(static_cast<double>(row.saddle_index)),
                                    v(row.horizon),
                                    v(row.dt),
                                    v(row.max_energy_drift)};
        if (single) {
            const bool have = ok && row.residency && row.residency->sufficient;
            line.push_back(have ? row.residency->correlation : nan);
            line.push_back(have ? row.residency->band : nan);
        }
        sweep.rows.push_back(std::move(line));
        if (ok) {
            for (std::size_t i = 0; i < row.report.gamma_grid.size(); ++i) {
                langevin.rows.push_back({row.delta, row.beta, row.report.gamma_grid[i], row.report.tau_langevin[i]});
            }
            auto j = to_json(row.report);
            j["seed"] = row.seed;
            j["horizon"] = row.horizon;
            j["dt"] = row.dt;
            reports.push_back(std::move(j));
        }
        note_task(out, "delta=" + short_number(row.delta) + " beta=" + short_number(row.beta), row.seed, row.error);
    }
    const std::string stem = single ? "single_trajectory" : "sweep";
    out.tables.push_back({stem + ".csv", std::move(sweep)});
    out.tables.push_back({stem + "_langevin.csv", std::move(langevin)});
    out.documents.push_back({stem + "_reports.json", std::move(reports)});
    return out;
}

ExperimentOutputs tabulate(const std::vector<PrefactorRow>& r) {
    ExperimentOutputs out;
    CsvTable t;
    t.columns = {"delta", "Lambda", "barrier", "saddle_index"};
    for (const auto& row : r) {
        t.rows.push_back({row.delta, row.lambda, row.barrier,
                          row.error.empty() ? static_cast<double>(row.saddle_index) : nan});
        note_task(out, "delta=" + short_number(row.delta), 0, row.error);
    }
    out.tables.push_back({"prefactor.csv", std::move(t)});
    return out;
}

ExperimentOutputs tabulate(const BifurcationResult& r) {
    ExperimentOutputs out;
    CsvTable t;
    t.columns = {"delta", "energy", "index", "branch1_energy", "branch2_energy", "branch3_energy"};
    for (const auto& row : r.rows) {
        const bool ok = row.error.empty();
        t.rows.push_back({row.delta, ok ? row.saddle_energy : nan, static_cast<double>(row.central_index),
                          row.branch_energy[0], row.branch_energy[1], row.branch_energy[2]});
        note_task(out, "delta=" + short_number(row.delta), 0, row.error);
    }
    CsvTable prof;
    prof.columns = {"delta", "x", "u"};
    for (const auto& p : r.profiles) {
        for (std::size_t j = 0; j < p.u.size(); ++j) prof.rows.push_back({p.delta, grid_point(j, p.u.size()), p.u[j]});
    }
    out.tables.push_back({"bifurcation.csv", std::move(t)});
    out.tables.push_back({"saddle_profiles.csv", std::move(prof)});
    return out;
}

ExperimentOutputs tabulate(const ErgodicityResult& r) {
    ExperimentOutputs out;
    CsvTable summary;
    summary.columns = {"delta",     "beta",      "seed_index",          "pbar2_average",  "pbar2_target",
                       "beta_pbar2", "hbar_mean", "hbar_std",            "hbar_relative_fluctuation",
                       "hbar_drift", "crossings", "residency_corr",      "residency_band", "max_energy_drift"};
    for (const auto& run : r.runs) {
        const auto& rep = run.report;
        const bool corr = run.residency.sufficient;
        summary.rows.push_back({run.delta, run.beta, static_cast<double>(run.seed_index), rep.pbar2_average,
                                rep.pbar2_target, run.beta * rep.pbar2_average, rep.hbar_mean, rep.hbar_std,
                                rep.hbar_relative_fluctuation, rep.hbar_drift,
                                static_cast<double>(run.crossings.count()), corr ? run.residency.correlation : nan,
                                corr ? run.residency.band : nan, run.max_energy_drift});
        CsvTable dump;
        dump.columns = {"t", "ubar", "pbar", "H_N", "distance", "running_pbar2", "hbar"};
        for (std::size_t i = 0; i < run.rows.size(); ++i) {
            const auto& row = run.rows[i];
            dump.rows.push_back({row.t, row.ubar, row.pbar, row.energy, row.distance, rep.running_pbar2[i], rep.hbar[i]});
        }
        const std::string name = "ergodicity_d" + short_number(run.delta) + "_s" + std::to_string(run.seed_index);
        out.tables.push_back({name + ".csv", std::move(dump)});
        note_task(out, name, run.seed_index, run.error);
    }
    out.tables.insert(out.tables.begin(), OutputTable{"ergodicity_summary.csv", std::move(summary)});
    return out;
}

ExperimentOutputs tabulate(const MeasureCheckResult& r) {
    ExperimentOutputs out;
    CsvTable t;
    t.columns = {"n",      "microcanonical", "re",   "im",   "stderr_re",     "stderr_im",     "limit",
                 "z_re",   "z_im",           "cov_max_error", "cov_max_stderr", "cov_max_z"};
    for (const auto& row : r.rows) {
        t.rows.push_back({static_cast<double>(row.n), row.sampler == "microcanonical" ? 1.0 : 0.0,
                          row.estimate.value.real(), row.estimate.value.imag(), row.estimate.stderr_real,
                          row.estimate.stderr_imag, row.limit, row.z_real, row.z_imag, row.cov_max_error,
                          row.cov_max_stderr, row.cov_max_z});
    }
    CsvTable conc;
    conc.columns = {"beta", "log_product", "product", "mass_lower_bound"};
    for (const auto& row : r.concentration) {
        conc.rows.push_back({row.beta, row.bound.log_product, row.bound.product, row.bound.mass_lower_bound});
    }
    out.tables.push_back({"measure_check.csv", std::move(t)});
    out.tables.push_back({"concentration.csv", std::move(conc)});
    return out;
}

ExperimentOutputs run_experiment(const ExperimentConfig& c) {
    c.validate();
    switch (c.experiment) {
        case Experiment::TransitionSweep:
            return tabulate(run_transition_sweep(c), false);
        case Experiment::SingleTrajectory:
            return tabulate(run_single_trajectory(c), true);
        case Experiment::PrefactorCurve:
            return tabulate(run_prefactor_curve(c));
        case Experiment::Bifurcation:
            return tabulate(run_bifurcation(c));
        case Experiment::Ergodicity:
            return tabulate(run_ergodicity(c));
        case Experiment::MeasureCheck:
            return tabulate(run_measure_check(c));
    }
    throw ConfigError("unhandled experiment");
}

}  // namespace metastab::app
