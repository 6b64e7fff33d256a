#include "metastab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "metastab/errors.hpp"

namespace metastab {

using detail::require;

void IntegratorConfig::validate() const {
    require(dt > 0.0 && std::isfinite(dt), "IntegratorConfig: dt must be positive");
    require(horizon >= 0.0 && std::isfinite(horizon), "IntegratorConfig: horizon must be >= 0");
    require(cadence >= 1, "IntegratorConfig: cadence must be >= 1");
}

double TrajectorySummary::max_relative_drift() const {
    if (energy.empty()) return 0.0;
    const double h0 = energy.front().energy;
    double worst = 0.0;
    for (const auto& e : energy) worst = std::max(worst, std::abs(e.energy - h0));
    return worst / std::abs(h0);
}

double TrajectorySummary::final_relative_drift() const {
    if (energy.empty()) return 0.0;
    const double h0 = energy.front().energy;
    return std::abs(energy.back().energy - h0) / std::abs(h0);
}

namespace {

void check_state(const SystemParams& params, const LatticeState& state) {
    require(state.u.size() == params.n && state.p.size() == params.n,
            "integrator: state size does not match N");
}

// In-place step that reuses F(u) from the previous step.
void step_inplace(const SystemParams& params, LatticeState& s, std::vector<double>& f, double dt) {
    const std::size_t n = s.u.size();
    const double half = 0.5 * dt;
    for (std::size_t j = 0; j < n; ++j) {
        s.p[j] += half * f[j];
        s.u[j] += dt * s.p[j];
    }
    force_into(params, s.u, f);
    for (std::size_t j = 0; j < n; ++j) s.p[j] += half * f[j];
}

}  // namespace

LatticeState verlet_step(const SystemParams& params, const LatticeState& state, double dt) {
    check_state(params, state);
    LatticeState next = state;
    std::vector<double> f(params.n);
    force_into(params, next.u, f);
    step_inplace(params, next, f, dt);
    next.t = state.t + dt;
    return next;
}

TrajectorySummary integrate(const SystemParams& params, LatticeState state, const IntegratorConfig& config,
                            std::span<Observer* const> observers) {
    params.validate();
    config.validate();
    check_state(params, state);

    TrajectorySummary summary;
    const double t0 = state.t;
    const std::size_t steps =
        config.horizon > 0.0 ? static_cast<std::size_t>(std::ceil(config.horizon / config.dt - 1e-9)) : 0;
    const double dt = steps > 0 ? config.horizon / static_cast<double>(steps) : config.dt;
    summary.dt = dt;

    std::vector<std::size_t> strides;
    for (Observer* obs : observers) {
        require(obs != nullptr, "integrate: null observer");
        summary.observers.push_back(obs->name());
        strides.push_back(obs->stride() == 0 ? config.cadence : obs->stride());
    }

    auto notify = [&](std::size_t step) {
        for (std::size_t k = 0; k < observers.size(); ++k) {
            if (step % strides[k] == 0 || step == steps) observers[k]->observe(params, state);
        }
        if (step % config.cadence == 0 || step == steps) {
            summary.energy.push_back({state.t, total_energy(params, state)});
        }
    };

    std::vector<double> f(params.n);
    force_into(params, state.u, f);
    try {
        notify(0);
        for (std::size_t i = 1; i <= steps; ++i) {
            step_inplace(params, state, f, dt);
            state.t = t0 + static_cast<double>(i) * dt;
            summary.steps = i;
            notify(i);
        }
    } catch (const std::exception& e) {
        summary.aborted = true;
        summary.error = e.what();
    }
    summary.final_state = std::move(state);
    return summary;
}

double stable_dt(const SystemParams& params, std::optional<double> lambda_max_hint) {
    params.validate();
    double lam = 0.0;
    if (lambda_max_hint) {
        lam = *lambda_max_hint;
    } else {
        double vmax = -std::numeric_limits<double>::infinity();
        constexpr int samples = 201;
        for (int i = 0; i < samples; ++i) {
            const double u = -1.0 + 2.0 * i / (samples - 1);
            vmax = std::max(vmax, params.potential.second(u));
        }
        lam = 4.0 * params.coupling() + vmax;
    }
    require(lam > 0.0, "stable_dt: lambda_max must be positive");
    return std::sqrt(0.1 / lam);
}

double recommended_dt(const SystemParams& params, std::optional<double> lambda_max_hint) {
    return stable_dt(params, lambda_max_hint) / 8.0;
}

void ReducedObserver::observe(const SystemParams& params, const LatticeState& state) {
    ReducedRow row;
    row.t = state.t;
    row.ubar = spatial_mean(state.u);
    row.pbar = spatial_mean(state.p);
    row.energy = total_energy(params, state);
    row.distance = distance_ ? distance_(state.u) : 0.0;
    rows_.push_back(row);
}

}  // namespace metastab
