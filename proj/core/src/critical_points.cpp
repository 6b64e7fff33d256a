#include "metastab/critical_points.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "metastab/errors.hpp"

namespace metastab {

std::size_t Spectrum::negative_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(eigenvalues.begin(), eigenvalues.end(), [](double v) { return v < 0.0; }));
}

namespace {

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// |F| cannot be resolved below the cancellation error of the bond term.
double residual_floor(const SystemParams& params, std::span<const double> u) {
    const double eps = std::numeric_limits<double>::epsilon();
    double curvature = 0.0;
    for (double x : u) curvature = std::max(curvature, std::abs(params.potential.second(x)));
    return 4.0 * eps * (4.0 * params.coupling() + curvature) * std::max(1.0, max_abs(u));
}

CriticalPoint make_point(const SystemParams& params, std::vector<double> u, double residual, int iterations) {
    CriticalPoint cp;
    cp.energy = potential_energy(params, u);
    cp.morse_index = morse_index(params, u);
    cp.residual_norm = residual;
    cp.iterations = iterations;
    cp.u = std::move(u);
    return cp;
}

// Sign convention for eigenvectors: the first component of largest
// magnitude is positive.
void orient(std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[best]) * (1.0 + 1e-12)) best = i;
    }
    if (v[best] < 0.0) {
        for (double& x : v) x = -x;
    }
}

// Barrier top of V between the wells: root of V' with V'' < 0 reached by
// scalar Newton from u = 0.
double barrier_top(const Potential& pot) {
    double u = 0.0;
    for (int it = 0; it < 100; ++it) {
        const PotentialValues v = pot.eval(u);
        if (std::abs(v.first) < 1e-15) break;
        if (v.second == 0.0) break;
        u -= v.first / v.second;
    }
    const PotentialValues v = pot.eval(u);
    if (!(v.second < 0.0) || std::abs(v.first) > 1e-10) {
        throw ContractViolation("potential '" + pot.name() + "' has no barrier top between two wells");
    }
    return u;
}

SystemParams with_delta(const SystemParams& params, double delta) {
    SystemParams p = params;
    p.delta = delta;
    return p;
}

}  // namespace

Spectrum hessian_spectrum(const SystemParams& params, std::span<const double> u_star, bool with_vectors) {
    const SymTridiagonal h = hessian_operator(params, u_star);
    Spectrum s;
    if (!with_vectors) {
        s.eigenvalues = tridiagonal_eigenvalues(h);
        return s;
    }
    TridiagonalEigen eig = tridiagonal_eigensystem(h);
    const double scale = std::sqrt(static_cast<double>(h.size()));
    for (auto& v : eig.vectors) {
        const double nrm = norm2(v);
        for (double& x : v) x *= scale / nrm;
        orient(v);
    }
    s.eigenvalues = std::move(eig.values);
    s.eigenvectors = std::move(eig.vectors);
    return s;
}

std::size_t morse_index(const SystemParams& params, std::span<const double> u) {
    return count_eigenvalues_below(hessian_operator(params, u), 0.0);
}

CriticalPoint find_critical_point(const SystemParams& params, std::span<const double> seed,
                                  const NewtonOptions& options) {
    params.validate();
    detail::require(seed.size() == params.n, "find_critical_point: seed has wrong length");
    std::vector<double> u(seed.begin(), seed.end());
    for (double x : u) detail::require(std::isfinite(x), "find_critical_point: seed is not finite");

    std::vector<double> f = force(params, u);
    double res = max_abs(f);
    for (int it = 0; it <= options.max_iterations; ++it) {
        const double tol = std::max(options.tolerance, residual_floor(params, u));
        if (res <= tol) return make_point(params, std::move(u), res, it);
        if (it == options.max_iterations) break;

        // F(u + s) ~ F(u) - H s, so the Newton step solves H s = F.
        std::vector<double> step;
        try {
            step = tridiagonal_solve(hessian_operator(params, u), f);
        } catch (const NumericalFailure&) {
            throw NumericalFailure("Newton: singular Hessian at iteration " + std::to_string(it));
        }
        const double r0 = norm2(f);
        double scale = 1.0;
        std::vector<double> trial(u.size());
        std::vector<double> ftrial;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
            for (std::size_t j = 0; j < u.size(); ++j) trial[j] = u[j] + scale * step[j];
            ftrial = force(params, trial);
            if (norm2(ftrial) < r0) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        u.swap(trial);
        f.swap(ftrial);
        res = max_abs(f);
    }
    throw NumericalFailure("Newton did not converge after " + std::to_string(options.max_iterations) +
                           " iterations (|F|_inf = " + std::to_string(res) + ")");
}

CriticalPoint find_minimizer(const SystemParams& params, std::span<const double> seed,
                             const NewtonOptions& options) {
    params.validate();
    detail::require(seed.size() == params.n, "find_minimizer: seed has wrong length");
    std::vector<double> u(seed.begin(), seed.end());
    for (double x : u) detail::require(std::isfinite(x), "find_minimizer: seed is not finite");

    std::vector<double> f = force(params, u);
    double res = max_abs(f);
    double energy = potential_energy(params, u);
    int it = 0;
    for (; it <= options.max_iterations; ++it) {
        const double tol = std::max(options.tolerance, residual_floor(params, u));
        if (res <= tol) break;
        if (it == options.max_iterations) {
            throw NumericalFailure("minimizer search did not converge after " +
                                   std::to_string(options.max_iterations) + " iterations (|F|_inf = " +
                                   std::to_string(res) + ")");
        }

        SymTridiagonal h = hessian_operator(params, u);
        double shift = 0.0;
        if (!is_positive_definite(h)) {
            double curvature = 0.0;
            for (double x : u) curvature = std::max(curvature, std::abs(params.potential.second(x)));
            shift = 1e-3 * (1.0 + curvature);
            while (!is_positive_definite(h.shifted(-shift))) shift *= 2.0;
            shift *= 2.0;
        }
        const std::vector<double> step = tridiagonal_solve(h.shifted(-shift), f);

        const double r0 = norm2(f);
        double scale = 1.0;
        std::vector<double> trial(u.size());
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving, scale *= 0.5) {
            for (std::size_t j = 0; j < u.size(); ++j) trial[j] = u[j] + scale * step[j];
            const double e_trial = potential_energy(params, trial);
            if (e_trial < energy || (shift == 0.0 && norm2(force(params, trial)) < r0)) {
                energy = e_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw NumericalFailure("minimizer line search stalled at iteration " + std::to_string(it));
        }
        u.swap(trial);
        f = force(params, u);
        res = max_abs(f);
    }
    CriticalPoint cp = make_point(params, std::move(u), res, it);
    if (cp.morse_index != 0) {
        throw NumericalFailure("minimizer search converged to a critical point with Morse index " +
                               std::to_string(cp.morse_index));
    }
    return cp;
}

CriticalPoint central_critical_point(const SystemParams& params, const NewtonOptions& options) {
    const double top = barrier_top(params.potential);
    const std::vector<double> seed(params.n, top);
    return find_critical_point(params, seed, options);
}

double branch_onset(const SystemParams& params, std::size_t index) {
    params.validate();
    detail::require(index >= 1, "branch_onset: branch index starts at 1");
    detail::require(index < params.n, "branch_onset: branch index exceeds lattice size");
    auto central_index = [&](double delta) {
        return central_critical_point(with_delta(params, delta)).morse_index;
    };
    double hi = 1.0;
    int guard = 0;
    while (central_index(hi) > index) {
        hi *= 2.0;
        if (++guard > 60) throw NumericalFailure("branch_onset: could not bracket onset from above");
    }
    double lo = hi;
    guard = 0;
    do {
        lo *= 0.5;
        if (++guard > 60) throw NumericalFailure("branch_onset: branch never appears");
    } while (central_index(lo) <= index);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (central_index(mid) > index) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

namespace {

bool is_branch_point(const CriticalPoint& cp, const CriticalPoint& central, std::size_t branch) {
    if (cp.morse_index != branch) return false;
    double dist = 0.0;
    for (std::size_t j = 0; j < cp.u.size(); ++j) dist = std::max(dist, std::abs(cp.u[j] - central.u[j]));
    return dist > 1e-6;
}

std::optional<CriticalPoint> try_branch_solve(const SystemParams& params, std::span<const double> seed,
                                              std::size_t branch, const NewtonOptions& newton) {
    try {
        CriticalPoint cp = find_critical_point(params, seed, newton);
        const CriticalPoint central = central_critical_point(params, newton);
        if (is_branch_point(cp, central, branch)) return cp;
    } catch (const NumericalFailure&) {
    }
    return std::nullopt;
}

}  // namespace

std::vector<BranchPoint> trace_branch(const SystemParams& params, std::size_t branch,
                                      std::span<const double> deltas_descending,
                                      const SaddleOptions& options) {
    params.validate();
    for (std::size_t i = 1; i < deltas_descending.size(); ++i) {
        detail::require(deltas_descending[i] < deltas_descending[i - 1],
                        "trace_branch: deltas must be strictly descending");
    }
    std::vector<BranchPoint> out;
    out.reserve(deltas_descending.size());
    for (double d : deltas_descending) out.push_back({d, std::nullopt, {}});
    if (out.empty()) return out;

    const double onset = branch_onset(params, branch);
    std::size_t first = 0;
    while (first < out.size() && out[first].delta >= onset) {
        out[first].error = "branch does not exist above its onset";
        ++first;
    }
    if (first == out.size()) return out;

    // Start just below the onset, or at the first requested delta if closer.
    double start = std::max(onset - options.continuation_step, 0.5 * onset);
    if (out[first].delta > start) start = out[first].delta;

    const SystemParams p_start = with_delta(params, start);
    const CriticalPoint central = central_critical_point(p_start, options.newton);
    const Spectrum spec = hessian_spectrum(p_start, central.u, true);
    std::vector<double> mode = spec.eigenvectors[branch];
    if (mode.back() < mode.front()) {
        for (double& x : mode) x = -x;
    }

    std::optional<CriticalPoint> current;
    for (double amp = options.seed_amplitude; amp <= 16.0 * options.seed_amplitude; amp *= 2.0) {
        std::vector<double> seed = central.u;
        for (std::size_t j = 0; j < seed.size(); ++j) seed[j] += amp * mode[j];
        current = try_branch_solve(p_start, seed, branch, options.newton);
        if (current) break;
    }
    if (!current) {
        for (std::size_t i = first; i < out.size(); ++i) {
            out[i].error = "could not seed branch " + std::to_string(branch) + " below its onset";
        }
        return out;
    }

    double at = start;
    double step = options.continuation_step;
    for (std::size_t i = first; i < out.size(); ++i) {
        const double target = out[i].delta;
        bool failed = false;
        while (at > target) {
            const double next = std::max(target, at - step);
            auto sol = try_branch_solve(with_delta(params, next), current->u, branch, options.newton);
            if (sol) {
                current = std::move(sol);
                at = next;
                step = std::min(options.continuation_step, 1.5 * step);
            } else {
                step *= 0.5;
                if (step < options.min_step) {
                    failed = true;
                    break;
                }
            }
        }
        if (failed) {
            out[i].error = "continuation stalled at delta = " + std::to_string(at);
            step = options.continuation_step;
            continue;
        }
        out[i].point = *current;
    }
    return out;
}

CriticalPoint find_saddle(const SystemParams& params, const SaddleOptions& options) {
    params.validate();
    const CriticalPoint central = central_critical_point(params, options.newton);
    if (central.morse_index == 1) return central;
    if (central.morse_index == 0) {
        throw NumericalFailure("central critical point is a minimum; no index-1 saddle between wells");
    }
    const double target[] = {params.delta};
    auto traced = trace_branch(params, 1, target, options);
    if (!traced.front().point) {
        throw NumericalFailure("saddle continuation failed: " + traced.front().error);
    }
    CriticalPoint cp = std::move(*traced.front().point);
    if (cp.u.back() < cp.u.front()) std::reverse(cp.u.begin(), cp.u.end());
    if (cp.morse_index != 1) {
        throw NumericalFailure("saddle has Morse index " + std::to_string(cp.morse_index));
    }
    return cp;
}

double log_prefactor_lambda(std::span<const double> saddle_eigenvalues,
                            std::span<const double> min_eigenvalues) {
    detail::require(saddle_eigenvalues.size() == min_eigenvalues.size() && !min_eigenvalues.empty(),
                    "prefactor: spectra must have equal, nonzero length");
    std::size_t negatives = 0;
    for (double v : saddle_eigenvalues) negatives += v < 0.0 ? 1 : 0;
    detail::require(negatives == 1 && saddle_eigenvalues[0] < 0.0,
                    "prefactor: saddle spectrum must have exactly one negative eigenvalue, got " +
                        std::to_string(negatives));
    for (double v : min_eigenvalues) {
        detail::require(v > 0.0, "prefactor: minimizer spectrum must be positive");
    }
    double acc = -0.5 * std::log(min_eigenvalues[0]);
    for (std::size_t j = 1; j < min_eigenvalues.size(); ++j) {
        acc += 0.5 * (std::log(saddle_eigenvalues[j]) - std::log(min_eigenvalues[j]));
    }
    return acc;
}

double prefactor_lambda(std::span<const double> saddle_eigenvalues, std::span<const double> min_eigenvalues) {
    return std::exp(log_prefactor_lambda(saddle_eigenvalues, min_eigenvalues));
}

double prefactor_lambda(const Spectrum& saddle, const Spectrum& minimum) {
    return prefactor_lambda(saddle.eigenvalues, minimum.eigenvalues);
}

double barrier(const CriticalPoint& saddle, const CriticalPoint& minimum) {
    const double de = saddle.energy - minimum.energy;
    if (de < 0.0) {
        throw ContractViolation("negative barrier: saddle and minimum are mislabeled");
    }
    return de;
}

std::vector<BifurcationRow> bifurcation_scan(const SystemParams& params, std::span<const double> delta_grid,
                                             const SaddleOptions& options) {
    params.validate();
    const std::size_t m = delta_grid.size();
    if (m == 0) return {};
    bool ascending = true;
    bool descending = true;
    for (std::size_t i = 1; i < m; ++i) {
        ascending = ascending && delta_grid[i] > delta_grid[i - 1];
        descending = descending && delta_grid[i] < delta_grid[i - 1];
    }
    detail::require(m == 1 || ascending || descending, "bifurcation_scan: delta grid must be monotone");
    for (double d : delta_grid) detail::require(d > 0.0, "bifurcation_scan: delta must be positive");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (ascending && m > 1) std::reverse(order.begin(), order.end());
    std::vector<double> desc(m);
    for (std::size_t i = 0; i < m; ++i) desc[i] = delta_grid[order[i]];

    std::vector<BifurcationRow> rows(m);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < m; ++i) {
        BifurcationRow& row = rows[order[i]];
        row.delta = desc[i];
        row.branch_energy.fill(nan);
        try {
            const CriticalPoint central = central_critical_point(with_delta(params, desc[i]), options.newton);
            row.central_index = central.morse_index;
            row.saddle_energy = central.morse_index == 1 ? central.energy : nan;
        } catch (const std::exception& e) {
            row.saddle_energy = nan;
            row.error = e.what();
        }
    }

    const std::size_t branches = std::min<std::size_t>(3, params.n - 1);
    for (std::size_t b = 1; b <= branches; ++b) {
        std::vector<BranchPoint> traced;
        try {
            traced = trace_branch(params, b, desc, options);
        } catch (const std::exception& e) {
            for (auto& row : rows) {
                if (row.error.empty()) row.error = "branch " + std::to_string(b) + ": " + e.what();
            }
            continue;
        }
        for (std::size_t i = 0; i < m; ++i) {
            BifurcationRow& row = rows[order[i]];
            if (traced[i].point) {
                row.branch_energy[b - 1] = traced[i].point->energy;
                if (b == 1 && row.central_index >= 2) row.saddle_energy = traced[i].point->energy;
            } else if (row.central_index > b && row.error.empty()) {
                row.error = "branch " + std::to_string(b) + ": " + traced[i].error;
            }
        }
    }
    return rows;
}

}  // namespace metastab
