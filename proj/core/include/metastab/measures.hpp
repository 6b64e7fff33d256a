#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metastab/critical_points.hpp"
#include "metastab/lattice.hpp"
#include "metastab/matrix.hpp"

namespace metastab {

enum class KernelKind { DirichletMassive, NeumannMassive, BrownianBridge };

std::string to_string(KernelKind kind);

/// Green's function of (-delta^2 d^2/dx^2 + mass) on [0, 1].
///
/// The massive kernels default to mass 1 (V = u^2 / 2); a general mass m
/// rescales the decay rate to sqrt(m) / delta. The Brownian bridge is the
/// massless Dirichlet case, (min(x, y) - x y) / delta^2.
double covariance_closed_form(KernelKind kind, double delta, double x, double y, double mass = 1.0);

struct CovarianceKernel {
    KernelKind kind = KernelKind::NeumannMassive;
    double delta = 1.0;
    double mass = 1.0;

    double operator()(double x, double y) const { return covariance_closed_form(kind, delta, x, y, mass); }
};

/// Closed-form kernel sampled at the lattice points x_j = j / (N + 1).
DenseMatrix covariance_on_grid(const CovarianceKernel& kernel, std::size_t n);

/// N (-delta^2 N^2 Lap + diag f)^{-1}: the covariance of u under
/// exp(-beta U_N) for a quadratic U_N, times beta. `mass` holds f(x_j) >= 0.
/// Throws NumericalFailure when the operator is singular (Neumann, f = 0).
DenseMatrix covariance_numeric(const SystemParams& params, std::span<const double> mass);

enum class Well { Plus, Minus };

struct EnsembleSpec {
    SystemParams params;
    std::size_t count = 1;
    std::uint64_t seed = 0;
    Well center = Well::Plus;
    /// Exact energy of each draw; defaults to N / beta. Ignored when
    /// pin_energy is false, in which case draws are plain Gaussian
    /// (the canonical measure of the quadratic approximation).
    std::optional<double> energy_target;
    bool pin_energy = true;
    /// Stratify the phase-space radius of the softest mode (its g
    /// coefficient together with the matching projection of h) over the
    /// ensemble: draw k of `count` takes its radius from quantile stratum k.
    /// Every draw keeps the exact Gaussian marginal; the ensemble covers the
    /// high-energy tail evenly instead of by chance. With pin_energy the
    /// stratified mode keeps its drawn amplitude and alpha rescales the rest.
    bool stratify_soft_mode = false;

    void validate() const;
    double target_energy() const;
};

struct CanonicalDraw {
    LatticeState state;
    double alpha = 1.0;  // fluctuation scale that hits the target energy
    int redraws = 0;     // momentum redraws needed for an admissible alpha
};

/// Initial conditions near a minimizer:
///   p = sqrt(N / beta) h,
///   u = u_min + (alpha / sqrt(beta)) sum_j g_j psi_j / sqrt(lambda_j),
/// with alpha solved so that H_N = target exactly. Draw k uses substream k.
class CanonicalSampler {
public:
    CanonicalSampler(EnsembleSpec spec, CriticalPoint minimum, Spectrum min_spectrum);

    CanonicalDraw draw(std::uint64_t index) const;
    std::vector<LatticeState> draw_all() const;

    const EnsembleSpec& spec() const noexcept { return spec_; }
    const CriticalPoint& minimum() const noexcept { return minimum_; }

private:
    double solve_alpha(std::span<const double> base, std::span<const double> fluct, double potential_target) const;

    EnsembleSpec spec_;
    CriticalPoint minimum_;
    Spectrum spectrum_;
};

std::vector<LatticeState> sample_canonical_ic(const EnsembleSpec& spec, const CriticalPoint& minimum,
                                              const Spectrum& min_spectrum);

/// Uniform points on the shell H_N = E for a quadratic potential: a
/// 2N-dimensional Gaussian normalized to radius sqrt(2E) in the
/// coordinates (p / sqrt(N), A^{1/2} u).
class MicrocanonicalSampler {
public:
    MicrocanonicalSampler(const SystemParams& params, double energy, std::uint64_t seed);

    LatticeState draw(std::uint64_t index) const;
    std::vector<LatticeState> draw_all(std::size_t count) const;

    const Spectrum& spectrum() const noexcept { return spectrum_; }

private:
    SystemParams params_;
    double energy_;
    std::uint64_t seed_;
    Spectrum spectrum_;
};

std::vector<LatticeState> sample_microcanonical_quadratic(const SystemParams& params, double energy,
                                                          std::uint64_t seed, std::size_t count);

struct CharFunctionalEstimate {
    std::complex<double> value;
    double stderr_real = 0.0;
    double stderr_imag = 0.0;
    std::size_t samples = 0;
};

/// Monte-Carlo mean of exp(i (s.p + t.u) / N).
CharFunctionalEstimate empirical_char_functional(std::span<const LatticeState> samples,
                                                 std::span<const double> s, std::span<const double> t);

/// Limit exp(-(1/2 beta) int s^2 - (1/2 beta) int int t C t), by adaptive quadrature.
double char_functional_limit(const std::function<double(double)>& s, const std::function<double(double)>& t,
                             double beta, const CovarianceKernel& kernel);

/// Sample covariance of u - center over the samples.
DenseMatrix empirical_covariance(std::span<const LatticeState> samples, std::span<const double> center);

struct ConcentrationBound {
    double log_product = 0.0;
    double product = 0.0;           // prod_j (1 - exp(-beta delta_j^2 lambda_j / 2))
    double mass_lower_bound = 0.0;  // sqrt(product): bound on the Gaussian box mass
};

/// Box half-widths delta_j^2 = box_constant / j^{1 + epsilon}.
ConcentrationBound concentration_bound(double beta, std::span<const double> eigenvalues, double epsilon,
                                       double box_constant);

}  // namespace metastab
