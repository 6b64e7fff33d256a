#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metastab/critical_points.hpp"
#include "metastab/dynamics.hpp"
#include "metastab/lattice.hpp"

namespace metastab {

/// Hyperplane through the saddle normal to its unstable eigenvector.
/// phi1 is oriented so that the + minimizer lies at positive distance.
struct DividingSurface {
    std::vector<double> u_s;
    std::vector<double> phi1;  // (1/N) sum phi1_j^2 = 1

    std::size_t size() const noexcept { return u_s.size(); }
    double distance(std::span<const double> u) const;
};

DividingSurface make_dividing_surface(const CriticalPoint& saddle, const Spectrum& saddle_spectrum,
                                      std::span<const double> plus_minimizer);

/// d(u) = (1/N) sum_j (u_j - u^s_j) phi1_j. Positive on the + side.
double surface_distance(const DividingSurface& surface, std::span<const double> u);

struct CrossingRecord {
    std::vector<double> times;  // ascending
    std::size_t up = 0;         // - to + crossings
    std::size_t down = 0;       // + to - crossings
    std::uint64_t trajectory = 0;
    double horizon = 0.0;

    std::size_t count() const noexcept { return times.size(); }
};

/// Streaming sign-change detector. A sample that is exactly zero takes the
/// sign of the next nonzero sample, so touching the surface and returning
/// is not a crossing while passing through a zero sample is one, timed at
/// that sample. Otherwise the crossing time is linearly interpolated.
class CrossingDetector {
public:
    void feed(double t, double d);
    const std::vector<double>& times() const noexcept { return times_; }
    std::size_t up() const noexcept { return up_; }
    std::size_t down() const noexcept { return down_; }
    std::size_t samples() const noexcept { return samples_; }
    /// Sign of the current region: +1, -1, or 0 before any nonzero sample.
    int region() const noexcept { return last_sign_; }

private:
    std::vector<double> times_;
    std::size_t up_ = 0;
    std::size_t down_ = 0;
    std::size_t samples_ = 0;
    int last_sign_ = 0;
    double last_t_ = 0.0;
    double last_d_ = 0.0;
    std::optional<double> first_zero_;
};

CrossingRecord count_crossings(std::span<const double> t, std::span<const double> d,
                               std::uint64_t trajectory = 0);

/// Counts surface crossings at every integrator step.
class CrossingCounter : public Observer {
public:
    explicit CrossingCounter(const DividingSurface& surface, std::uint64_t trajectory = 0)
        : surface_(&surface), trajectory_(trajectory) {}

    std::string name() const override { return "crossings"; }
    std::size_t stride() const override { return 1; }
    void observe(const SystemParams& params, const LatticeState& state) override;

    CrossingRecord record(double horizon) const;
    const CrossingDetector& detector() const noexcept { return detector_; }

private:
    const DividingSurface* surface_;
    std::uint64_t trajectory_;
    CrossingDetector detector_;
};

struct EmpiricalRate {
    double nu = 0.0;  // mean(N_T) / (2T)
    double nu_stderr = 0.0;
    double nu_directional = 0.0;  // mean(up crossings) / T
    double tau = 0.0;             // 1 / (2 nu) = T / mean(N_T)
    double tau_stderr = 0.0;
    double mean_crossings = 0.0;
    std::size_t records = 0;
    /// No record crossed: tau is only a lower bound (the total observed time).
    bool lower_bound = false;
};

EmpiricalRate empirical_rate(std::span<const CrossingRecord> records, double horizon);

/// Energy and ascending Hessian eigenvalues at a critical point.
struct CriticalData {
    double energy = 0.0;
    std::vector<double> eigenvalues;
};

struct TheoryRates {
    double nu_canonical = 0.0;
    double tau_plus_finite = 0.0;  // finite-N canonical residency times
    double tau_minus_finite = 0.0;
    double tau_plus_limit = 0.0;  // 2 pi Lambda e^{beta Delta E}
    double tau_minus_limit = 0.0;
    double lambda_plus = 0.0;  // prefactors
    double lambda_minus = 0.0;
    double barrier_plus = 0.0;
    double barrier_minus = 0.0;
    double mu_plus = 0.0;  // quadratic-approximation weights of B+ and B-
    double mu_minus = 0.0;
};

/// Canonical TST frequency and residency times. Products are evaluated in
/// log space.
TheoryRates tst_rate_theory(const CriticalData& saddle, const CriticalData& plus, const CriticalData& minus,
                            double beta, std::size_t n);

/// 2 pi Lambda e^{beta Delta E}.
double tau_limit(double prefactor, double barrier_height, double beta);

/// Microcanonical residency time on the shell E = N / beta. Throws
/// DomainError when beta E^s / N >= 1.
double microcanonical_tau(const CriticalData& saddle, const CriticalData& well, double beta, std::size_t n);

/// Langevin residency time; equals tau_limit bit-for-bit at gamma = 0.
double langevin_tau(double gamma, double lambda1_saddle, double prefactor, double barrier_height, double beta);

struct ErgodicityReport {
    std::vector<double> t;
    std::vector<double> running_pbar2;  // running time average of pbar^2
    std::vector<double> hbar;           // pbar^2 / 2 + V(ubar)
    double pbar2_average = 0.0;
    double pbar2_target = 0.0;  // 1 / beta
    double hbar_mean = 0.0;
    double hbar_std = 0.0;
    double hbar_drift = 0.0;  // hbar(T) - hbar(0)
    double hbar_relative_fluctuation = 0.0;  // std / |mean|
};

ErgodicityReport ergodicity_diagnostics(std::span<const ReducedRow> rows, const Potential& potential,
                                        double beta);

struct ResidencyCorrelation {
    bool sufficient = false;  // at least 10 crossings
    std::size_t intervals = 0;
    double correlation = 0.0;  // lag-1 Pearson of successive residency intervals
    double band = 0.0;         // 95% band for zero correlation, 1.96 / sqrt(pairs)
    bool significant = false;
};

ResidencyCorrelation residency_correlation(const CrossingRecord& record);

struct RateReport {
    std::size_t n = 0;
    double delta = 0.0;
    double beta = 0.0;
    EmpiricalRate empirical;
    TheoryRates theory;
    std::optional<double> tau_micro;
    std::vector<double> gamma_grid;
    std::vector<double> tau_langevin;
};

nlohmann::json to_json(const RateReport& report);

}  // namespace metastab
