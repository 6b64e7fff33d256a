// Acceptance suite: one PASS/FAIL line per primary criterion.
//
// The process exits 0 when every criterion was evaluated, whatever the
// verdicts; --strict makes any FAIL a nonzero exit. Tolerances, seeds and
// run sizes are fixed below and are not tuned per run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "app/config.hpp"
#include "app/experiments.hpp"
#include "metastab/critical_points.hpp"
#include "metastab/dynamics.hpp"
#include "metastab/measures.hpp"
#include "metastab/tst.hpp"

using namespace metastab;
using namespace metastab::app;

namespace tol {
constexpr double arrhenius_slope_rel = 0.10;
constexpr double arrhenius_tau_factor = 1.5;
constexpr double prefactor_rel = 0.02;
constexpr double single_vs_ensemble_factor = 2.0;
constexpr double bifurcation_resolution = 0.005;
constexpr double saddle_energy_gap = 0.01;
constexpr double char_functional_z = 3.0;
constexpr double covariance_z = 5.0;
constexpr double drift_max = 1e-4;
constexpr double drift_ratio_lo = 3.0;
constexpr double drift_ratio_hi = 5.0;
constexpr double reversibility = 1e-8;
constexpr double symmetric_identity = 1e-12;
constexpr double ergodic_pbar2_rel = 0.10;
constexpr double ergodic_spread_factor = 3.0;
constexpr double ergodic_hbar_factor = 5.0;
constexpr double concentration_target = 0.99;
}  // namespace tol

namespace plan {
constexpr double long_run_dt_factor = 0.5;  // of stable_dt, for the long ensemble runs
constexpr std::uint64_t arrhenius_seed = 1;
constexpr std::uint64_t single_seed = 2026;
constexpr std::uint64_t ergodicity_seed = 2024;
constexpr std::uint64_t measure_seed = 7;
}  // namespace plan

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double std_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

Verdict arrhenius() {
    auto c = default_config(Experiment::TransitionSweep);
    c.system.n = 128;
    c.delta_grid = {1.0};
    c.barrier_grid = {2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
    c.ensemble = 200;
    c.horizon_tau = 2.0;
    c.stratify = true;
    c.dt_factor = plan::long_run_dt_factor;
    c.seed = plan::arrhenius_seed;
    c.validate();
    const auto res = run_transition_sweep(c);

    std::vector<double> x, y;
    bool each = true;
    std::string ratios;
    for (const auto& row : res.rows) {
        if (!row.error.empty()) return {false, "row failed: " + row.error};
        const auto& e = row.report.empirical;
        const double ratio = e.tau / row.report.theory.tau_plus_finite;
        ratios += fmt(" %.3g", ratio);
        each = each && !e.lower_bound && ratio <= tol::arrhenius_tau_factor && ratio >= 1.0 / tol::arrhenius_tau_factor;
        x.push_back(row.beta);
        y.push_back(std::log(e.tau));
    }
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    const double slope = sxy / sxx;
    const double de = res.rows.front().barrier;
    const bool slope_ok = std::abs(slope - de) <= tol::arrhenius_slope_rel * de;
    return {slope_ok && each, fmt("slope %.4f vs Delta E %.4f (rel err %.3f); tau_emp/tau_c per beta:%s", slope, de,
                                  std::abs(slope - de) / de, ratios.c_str())};
}

Verdict prefactor() {
    SystemParams p;
    p.n = 1024;
    p.delta = 1.0;
    std::vector<double> zero(p.n, 0.0), one(p.n, 1.0);
    const double lam = prefactor_lambda(hessian_spectrum(p, zero, false), hessian_spectrum(p, one, false));
    const double r2 = std::sqrt(2.0);
    const double exact = std::sqrt(r2 * std::sin(1.0) / std::sinh(r2)) / r2;
    const double rel = std::abs(lam - exact) / exact;
    return {rel <= tol::prefactor_rel, fmt("Lambda_+ = %.6f, closed form %.6f, rel err %.2e", lam, exact, rel)};
}

Verdict single_vs_ensemble() {
    auto single = default_config(Experiment::SingleTrajectory);
    single.system.n = 128;
    single.delta_grid = {0.2};
    single.barrier_grid = {4.0};
    single.horizon_tau = 500.0;
    single.dt_factor = plan::long_run_dt_factor;
    single.seed = plan::single_seed;
    single.validate();
    auto ens = default_config(Experiment::TransitionSweep);
    ens.system.n = 128;
    ens.delta_grid = {0.2};
    ens.barrier_grid = {4.0};
    ens.ensemble = 200;
    ens.horizon_tau = 10.0;
    ens.dt_factor = plan::long_run_dt_factor;
    ens.seed = plan::single_seed;
    ens.validate();

    const auto s = run_single_trajectory(single).rows.front();
    const auto e = run_transition_sweep(ens).rows.front();
    if (!s.error.empty() || !e.error.empty()) return {false, "run failed: " + s.error + e.error};
    const auto& se = s.report.empirical;
    const auto& ee = e.report.empirical;
    const double ratio = se.tau / ee.tau;
    const bool ok = !se.lower_bound && !ee.lower_bound && ratio <= tol::single_vs_ensemble_factor &&
                    ratio >= 1.0 / tol::single_vs_ensemble_factor;
    return {ok, fmt("single tau %.2f (%zu crossings over %.0f) vs ensemble tau %.2f +- %.2f, ratio %.3f; tau_c %.2f",
                    se.tau, static_cast<std::size_t>(se.mean_crossings), s.horizon, ee.tau, ee.tau_stderr, ratio,
                    s.report.theory.tau_plus_finite)};
}

Verdict bifurcation() {
    auto c = default_config(Experiment::Bifurcation);
    c.system.n = 256;
    c.delta_grid.clear();
    for (int i = 0; i <= 70; ++i) c.delta_grid.push_back(0.05 + 0.005 * i);
    c.validate();
    const auto rows = bifurcation_scan(c.system, c.delta_grid);
    std::string detail;
    bool ok = true;
    for (std::size_t n = 1; n <= 3; ++n) {
        const double expected = 1.0 / (n * std::numbers::pi);
        double found = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            if (rows[i].central_index == n + 1 && rows[i + 1].central_index == n) {
                found = 0.5 * (rows[i].delta + rows[i + 1].delta);
            }
        }
        const bool hit = std::abs(found - expected) <= tol::bifurcation_resolution;
        ok = ok && hit;
        detail += fmt("index %zu->%zu at %.4f (1/%zu pi = %.4f); ", n, n + 1, found, n, expected);
    }
    // Saddle energy on the grid points just below 1/pi.
    std::vector<double> gaps;
    for (const auto& r : rows) {
        if (r.delta < 1.0 / std::numbers::pi && r.delta > 1.0 / std::numbers::pi - 0.02) {
            gaps.push_back(0.25 - r.saddle_energy);
        }
    }
    bool continuous = !gaps.empty() && gaps.back() >= 0.0 && gaps.back() <= tol::saddle_energy_gap;
    for (std::size_t i = 1; i < gaps.size(); ++i) continuous = continuous && gaps[i] <= gaps[i - 1];
    detail += fmt("1/4 - E^s at delta just below 1/pi: %.2e (monotone approach: %s)", gaps.empty() ? -1.0 : gaps.back(),
                  continuous ? "yes" : "no");
    return {ok && continuous, detail};
}

Verdict measure_equivalence() {
    auto c = default_config(Experiment::MeasureCheck);
    c.n_grid = {512};
    c.samples = 10000;
    c.seed = plan::measure_seed;
    c.validate();
    const auto res = run_measure_check(c);
    bool ok = true;
    std::string detail;
    for (const auto& r : res.rows) {
        const bool cf = std::abs(r.z_real) <= tol::char_functional_z && std::abs(r.z_imag) <= tol::char_functional_z;
        const bool cov = r.cov_max_z <= tol::covariance_z;
        ok = ok && cf && cov;
        detail += fmt("%s: phi = %.5f%+.5fi vs %.5f (z %.2f, %.2f), cov max z %.2f; ", r.sampler.c_str(),
                      r.estimate.value.real(), r.estimate.value.imag(), r.limit, r.z_real, r.z_imag, r.cov_max_z);
    }
    return {ok, detail};
}

Verdict integrator() {
    SystemParams p;
    p.n = 128;
    p.delta = 1.0;
    p.beta = 16.0;
    auto land = build_landscape(p);
    EnsembleSpec spec;
    spec.params = p;
    spec.seed = 11;
    const auto ic = CanonicalSampler(spec, land.plus, land.plus_spectrum).draw(0).state;

    IntegratorConfig cfg;
    cfg.dt = recommended_dt(p);
    cfg.horizon = 100.0;
    cfg.cadence = 10;
    const double drift = integrate(p, ic, cfg).max_relative_drift();
    cfg.dt /= 2.0;
    const double drift_half = integrate(p, ic, cfg).max_relative_drift();
    const double ratio = drift / drift_half;

    LatticeState s = ic;
    const double dt = recommended_dt(p);
    for (int k = 0; k < 20000; ++k) s = verlet_step(p, s, dt);
    for (double& v : s.p) v = -v;
    for (int k = 0; k < 20000; ++k) s = verlet_step(p, s, dt);
    double back = 0.0;
    for (std::size_t j = 0; j < p.n; ++j) back = std::max({back, std::abs(s.u[j] - ic.u[j]), std::abs(s.p[j] + ic.p[j])});

    const bool ok = drift <= tol::drift_max && ratio >= tol::drift_ratio_lo && ratio <= tol::drift_ratio_hi &&
                    back <= tol::reversibility;
    return {ok, fmt("max drift %.2e over T=100 at dt=%.3e; halving ratio %.2f; reversal error %.1e", drift,
                    recommended_dt(p), ratio, back)};
}

Verdict identities() {
    std::string detail;
    bool ok = true;
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    std::string ratios;
    for (std::size_t n : {64u, 128u, 256u, 512u, 1024u}) {
        SystemParams p;
        p.n = n;
        std::vector<double> zero(n, 0.0), one(n, 1.0);
        const CriticalData s{0.25, hessian_spectrum(p, zero, false).eigenvalues};
        const CriticalData w{0.0, hessian_spectrum(p, one, false).eigenvalues};
        const double beta = 4.0 / 0.25;
        const auto th = tst_rate_theory(s, w, w, beta, n);
        const double ratio = microcanonical_tau(s, w, beta, n) / th.tau_plus_finite;
        monotone = monotone && std::abs(ratio - 1.0) < std::abs(prev - 1.0);
        prev = ratio;
        ratios += fmt(" %.4f", ratio);
        if (n == 128) {
            const double lg = langevin_tau(0.0, s.eigenvalues.front(), th.lambda_plus, th.barrier_plus, beta);
            const bool bitwise = lg == th.tau_plus_limit;
            const double sym = std::abs(th.tau_plus_finite * 2.0 * th.nu_canonical - 1.0);
            ok = ok && bitwise && sym <= tol::symmetric_identity;
            detail += fmt("langevin(0) == limit bitwise: %s; |2 nu tau - 1| = %.1e; ", bitwise ? "yes" : "no", sym);
        }
    }
    detail += "tau_m/tau_c for N=64..1024:" + ratios;
    return {ok && monotone, detail};
}

Verdict ergodicity() {
    auto c = default_config(Experiment::Ergodicity);
    c.system.n = 1024;
    c.delta_grid = {0.05, 1.0};
    c.barrier_grid = {3.0};
    c.horizon = 600.0;
    c.seeds = 9;
    c.dt_factor = plan::long_run_dt_factor;
    c.seed = plan::ergodicity_seed;
    c.validate();
    const auto res = run_ergodicity(c);
    std::vector<double> small_p, large_p, small_h, large_h;
    for (const auto& r : res.runs) {
        if (!r.error.empty()) return {false, "run failed: " + r.error};
        const double bp = r.beta * r.report.pbar2_average;
        (r.delta < 0.5 ? small_p : large_p).push_back(bp);
        (r.delta < 0.5 ? small_h : large_h).push_back(r.report.hbar_relative_fluctuation);
    }
    double worst = 0.0;
    for (double v : small_p) worst = std::max(worst, std::abs(v - 1.0));
    const bool near = worst <= tol::ergodic_pbar2_rel;
    const double spread_small = std_of(small_p), spread_large = std_of(large_p);
    const bool spread = spread_large > tol::ergodic_spread_factor * spread_small;
    const double h_small = mean_of(small_h), h_large = mean_of(large_h);
    const bool hbar = h_large * tol::ergodic_hbar_factor <= h_small;
    std::string list;
    for (double v : small_p) list += fmt(" %.3f", v);
    return {near && spread && hbar,
            fmt("delta=0.05 beta*<pbar^2>:%s (worst dev %.3f, %s); spread ratio %.2f (%s); mean Hbar rel fluct "
                "%.3f vs %.3f, factor %.2f (%s)",
                list.c_str(), worst, near ? "ok" : "fail", spread_large / spread_small, spread ? "ok" : "fail",
                h_large, h_small, h_small / h_large, hbar ? "ok" : "fail")};
}

Verdict concentration() {
    std::vector<double> lam(10000);
    for (std::size_t j = 0; j < lam.size(); ++j) lam[j] = static_cast<double>((j + 1) * (j + 1));
    double prev = 0.0, best = 0.0, first = -1.0;
    bool monotone = true;
    for (double b : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0}) {
        const double v = concentration_bound(b, lam, 0.5, 1.0).product;
        monotone = monotone && v >= prev;
        prev = v;
        best = std::max(best, v);
        if (first < 0.0 && v > tol::concentration_target) first = b;
    }
    return {monotone && best > tol::concentration_target,
            fmt("monotone in beta: %s; product exceeds %.2f from beta = %g", monotone ? "yes" : "no",
                tol::concentration_target, first)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"metastab acceptance suite"};
    bool strict = false;
    std::vector<std::string> only;
    cli.add_flag("--strict", strict, "Exit nonzero when any criterion fails");
    std::string report_path;
    cli.add_option("--only", only, "Run only the named criteria");
    cli.add_option("--report", report_path, "Also write the verdict lines to this file");
    CLI11_PARSE(cli, argc, argv);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"arrhenius-slope", arrhenius},
        {"prefactor-closed-form", prefactor},
        {"single-trajectory-vs-ensemble", single_vs_ensemble},
        {"bifurcation-structure", bifurcation},
        {"measure-equivalence", measure_equivalence},
        {"integrator-quality", integrator},
        {"formula-identities", identities},
        {"ergodicity-contrast", ergodicity},
        {"concentration-bound", concentration},
    };

    std::ofstream report;
    if (!report_path.empty()) {
        report.open(report_path);
        if (!report) {
            std::cerr << "cannot write " << report_path << "\n";
            return 2;
        }
    }
    auto emit = [&](const std::string& line) {
        std::cout << line << std::endl;
        if (report) report << line << std::endl;
    };

    int failed = 0, ran = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        emit((v.pass ? "[PASS] " : "[FAIL] ") + name + ": " + v.detail + fmt(" (%.1fs)", secs));
        ++ran;
        failed += v.pass ? 0 : 1;
    }
    emit(std::to_string(ran - failed) + "/" + std::to_string(ran) + " criteria passed");
    return strict && failed > 0 ? 1 : 0;
}
