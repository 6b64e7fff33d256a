#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metastab/lattice.hpp"

namespace metastab {

struct IntegratorConfig {
    double dt = 1e-3;
    double horizon = 0.0;     // T
    std::size_t cadence = 1;  // steps between observer calls and energy records

    void validate() const;
};

/// Read-only hook into a running trajectory. Observers see the state by
/// const reference and cannot alter the integration.
class Observer {
public:
    virtual ~Observer() = default;
    virtual std::string name() const = 0;
    /// Steps between calls; 0 means the integrator cadence.
    virtual std::size_t stride() const { return 0; }
    virtual void observe(const SystemParams& params, const LatticeState& state) = 0;
};

struct EnergySample {
    double t = 0.0;
    double energy = 0.0;
};

struct TrajectorySummary {
    LatticeState final_state;
    std::vector<EnergySample> energy;  // starts at the initial H_N
    std::size_t steps = 0;
    double dt = 0.0;  // step actually used, horizon / steps
    std::vector<std::string> observers;
    bool aborted = false;
    std::string error;

    /// max_t |H(t) - H(0)| / |H(0)| over the recorded series.
    double max_relative_drift() const;
    /// |H(T) - H(0)| / |H(0)|.
    double final_relative_drift() const;
};

/// One velocity-Verlet step:
///   u' = u + dt p + dt^2/2 F(u),  p' = p + dt/2 (F(u) + F(u')).
LatticeState verlet_step(const SystemParams& params, const LatticeState& state, double dt);

/// Runs velocity Verlet to the horizon. The step is shrunk to horizon /
/// ceil(horizon / dt) so the trajectory ends exactly at T. Observers are
/// called at step 0, at their stride and at the last step. An exception
/// from an observer stops the run; the summary then has aborted = true.
TrajectorySummary integrate(const SystemParams& params, LatticeState state, const IntegratorConfig& config,
                            std::span<Observer* const> observers = {});

/// Conservative step with dt^2 lambda_max <= 0.1. Without a hint lambda_max
/// is bounded by 4 delta^2 N^2 + max V'' on [-1, 1].
double stable_dt(const SystemParams& params, std::optional<double> lambda_max_hint = std::nullopt);

/// stable_dt / 8 (dt^2 lambda_max ~ 1.6e-3). At this step the relative
/// energy error of equilibrium trajectories stays below 1e-4 over T = 100;
/// at stable_dt it is a few 1e-3.
double recommended_dt(const SystemParams& params, std::optional<double> lambda_max_hint = std::nullopt);

struct ReducedRow {
    double t = 0.0;
    double ubar = 0.0;
    double pbar = 0.0;
    double energy = 0.0;    // H_N
    double distance = 0.0;  // signed distance to the dividing surface, 0 without one
};

/// Records (t, mean u, mean p, H_N, d) at the integrator cadence.
class ReducedObserver : public Observer {
public:
    using Distance = std::function<double(std::span<const double>)>;

    explicit ReducedObserver(Distance distance = {}, std::size_t stride = 0)
        : distance_(std::move(distance)), stride_(stride) {}

    std::string name() const override { return "reduced"; }
    std::size_t stride() const override { return stride_; }
    void observe(const SystemParams& params, const LatticeState& state) override;

    const std::vector<ReducedRow>& rows() const noexcept { return rows_; }

private:
    Distance distance_;
    std::size_t stride_;
    std::vector<ReducedRow> rows_;
};

}  // namespace metastab
