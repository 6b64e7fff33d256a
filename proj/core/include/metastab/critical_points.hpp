#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metastab/lattice.hpp"

namespace metastab {

/// Spectrum of the Hessian operator at a field.
///
/// Eigenvalues ascend. Eigenvectors (when requested) use the discrete L2
/// normalization (1/N) sum_j psi_j^2 = 1, so their Euclidean norm is sqrt(N).
struct Spectrum {
    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> eigenvectors;

    std::size_t size() const noexcept { return eigenvalues.size(); }
    std::size_t negative_count() const noexcept;
    bool has_vectors() const noexcept { return !eigenvectors.empty(); }
};

struct CriticalPoint {
    std::vector<double> u;
    double energy = 0.0;  // U_N(u)
    std::size_t morse_index = 0;
    double residual_norm = 0.0;  // max-norm of the force
    int iterations = 0;
};

struct NewtonOptions {
    double tolerance = 1e-10;  // on max |F|; raised to the round-off floor when needed
    int max_iterations = 200;
};

struct SaddleOptions {
    double seed_amplitude = 0.1;      // along the unstable cosine-like mode
    double continuation_step = 0.01;  // in delta
    double min_step = 1e-5;
    NewtonOptions newton;
};

Spectrum hessian_spectrum(const SystemParams& params, std::span<const double> u_star,
                          bool with_vectors = true);

/// Morse index from the Sturm count of the Hessian operator; O(N).
std::size_t morse_index(const SystemParams& params, std::span<const double> u);

/// Damped Newton on F(u) = 0 with backtracking on |F|. Finds whichever
/// critical point the seed is attracted to.
CriticalPoint find_critical_point(const SystemParams& params, std::span<const double> seed,
                                  const NewtonOptions& options = {});

/// Newton descent on U_N with a positive-definite shift away from minima.
/// Throws NumericalFailure if the limit does not have Morse index 0.
CriticalPoint find_minimizer(const SystemParams& params, std::span<const double> seed,
                             const NewtonOptions& options = {});

/// Minimum-energy index-1 saddle.
///
/// When the central critical point (the uniform field at the barrier top of
/// V, continued by Newton) already has index 1 it is returned. Otherwise the
/// first bifurcated branch is traced by continuation in delta from the
/// point where the central solution gains its second unstable direction.
/// Of the two mirror images, the one with u_N >= u_1 is returned.
CriticalPoint find_saddle(const SystemParams& params, const SaddleOptions& options = {});

/// The central critical point alone (u = 0 for the symmetric double well).
CriticalPoint central_critical_point(const SystemParams& params, const NewtonOptions& options = {});

/// Largest delta at which the central solution's Morse index exceeds
/// `index`, i.e. where branch `index` bifurcates. Requires V'' < 0 at the
/// barrier top.
double branch_onset(const SystemParams& params, std::size_t index);

/// Traces the n-th bifurcated branch (n = 1 is the saddle branch) at each
/// requested delta. Deltas must be descending. Entries are empty where the
/// branch does not exist (delta above onset) or the solve failed.
struct BranchPoint {
    double delta = 0.0;
    std::optional<CriticalPoint> point;
    std::string error;
};
std::vector<BranchPoint> trace_branch(const SystemParams& params, std::size_t branch,
                                      std::span<const double> deltas_descending,
                                      const SaddleOptions& options = {});

/// log of Lambda = lambda_1^{-1/2} prod_{j>=2} sqrt(lambda_j^s / lambda_j^min).
double log_prefactor_lambda(std::span<const double> saddle_eigenvalues,
                            std::span<const double> min_eigenvalues);
double prefactor_lambda(std::span<const double> saddle_eigenvalues,
                        std::span<const double> min_eigenvalues);
double prefactor_lambda(const Spectrum& saddle, const Spectrum& minimum);

/// Delta E = E^s - E^min; throws ContractViolation on a negative barrier.
double barrier(const CriticalPoint& saddle, const CriticalPoint& minimum);

struct BifurcationRow {
    double delta = 0.0;
    double saddle_energy = 0.0;       // minimum-energy index-1 saddle E^s
    std::size_t central_index = 0;    // Morse index of the central solution (u = 0)
    std::array<double, 3> branch_energy{};  // first three bifurcated branches, NaN where absent
    std::string error;                // non-empty when a solve on this row failed
};

/// Rows come back in the order of `delta_grid`, which must be monotone.
std::vector<BifurcationRow> bifurcation_scan(const SystemParams& params,
                                             std::span<const double> delta_grid,
                                             const SaddleOptions& options = {});

}  // namespace metastab
