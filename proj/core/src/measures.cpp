#include "metastab/measures.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "metastab/errors.hpp"
#include "metastab/random.hpp"

namespace metastab {

using detail::require;

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::DirichletMassive: return "dirichlet-massive";
        case KernelKind::NeumannMassive: return "neumann-massive";
        case KernelKind::BrownianBridge: return "brownian-bridge";
    }
    return "unknown";
}

double covariance_closed_form(KernelKind kind, double delta, double x, double y, double mass) {
    require(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0,
            "covariance_closed_form: coordinates must lie in [0, 1]");
    require(delta > 0.0, "covariance_closed_form: delta must be positive");
    const double lo = std::min(x, y);
    const double hi = std::max(x, y);
    const double d2 = delta * delta;
    if (kind == KernelKind::BrownianBridge) return (lo - x * y) / d2;

    require(mass > 0.0, "covariance_closed_form: massive kernels need mass > 0");
    const double k = std::sqrt(mass) / delta;
    const double denom = d2 * k * std::sinh(k);
    if (kind == KernelKind::DirichletMassive) return std::sinh(k * lo) * std::sinh(k * (1.0 - hi)) / denom;
    return std::cosh(k * lo) * std::cosh(k * (1.0 - hi)) / denom;
}

DenseMatrix covariance_on_grid(const CovarianceKernel& kernel, std::size_t n) {
    DenseMatrix c(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = grid_point(i, n);
        for (std::size_t j = i; j < n; ++j) {
            c(i, j) = c(j, i) = kernel(xi, grid_point(j, n));
        }
    }
    return c;
}

DenseMatrix covariance_numeric(const SystemParams& params, std::span<const double> mass) {
    params.validate();
    const std::size_t n = params.n;
    require(mass.size() == n, "covariance_numeric: mass profile must have N entries");
    for (double f : mass) require(f >= 0.0 && std::isfinite(f), "covariance_numeric: mass profile must be >= 0");

    const double k = params.coupling();
    SymTridiagonal op;
    op.off.assign(n - 1, -k);
    op.diag.resize(n);
    for (std::size_t j = 0; j < n; ++j) op.diag[j] = 2.0 * k + mass[j];
    if (params.bc == Boundary::Neumann) {
        op.diag.front() -= k;
        op.diag.back() -= k;
    }

    DenseMatrix c(n, n);
    std::vector<double> e(n, 0.0);
    const double scale = static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        std::vector<double> col;
        try {
            col = tridiagonal_solve(op, e);
        } catch (const NumericalFailure&) {
            throw NumericalFailure("covariance_numeric: operator is singular (" + to_string(params.bc) +
                                   " with vanishing mass has a constant null mode)");
        }
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) c(i, j) = scale * col[i];
    }
    // Symmetrize away solve round-off.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));
    }
    return c;
}

void EnsembleSpec::validate() const {
    params.validate();
    require(count >= 1, "EnsembleSpec: count must be >= 1");
    if (energy_target) require(std::isfinite(*energy_target), "EnsembleSpec: energy_target must be finite");
}

double EnsembleSpec::target_energy() const {
    return energy_target ? *energy_target : static_cast<double>(params.n) / params.beta;
}

CanonicalSampler::CanonicalSampler(EnsembleSpec spec, CriticalPoint minimum, Spectrum min_spectrum)
    : spec_(std::move(spec)), minimum_(std::move(minimum)), spectrum_(std::move(min_spectrum)) {
    spec_.validate();
    const std::size_t n = spec_.params.n;
    require(minimum_.u.size() == n, "CanonicalSampler: minimizer has the wrong size");
    require(spectrum_.size() == n && spectrum_.has_vectors(),
            "CanonicalSampler: minimizer spectrum needs N eigenpairs");
    for (double lam : spectrum_.eigenvalues) {
        require(lam > 0.0, "CanonicalSampler: minimizer spectrum must be positive");
    }
}

double CanonicalSampler::solve_alpha(std::span<const double> base, std::span<const double> fluct,
                                     double potential_target) const {
    const SystemParams& params = spec_.params;
    const std::size_t n = params.n;
    std::vector<double> u(n);
    auto excess = [&](double alpha) {
        for (std::size_t j = 0; j < n; ++j) u[j] = base[j] + alpha * fluct[j];
        return potential_energy(params, u) - potential_target;
    };

    const double e0 = excess(0.0);
    if (e0 >= 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (params.potential.family() == Potential::Family::Quadratic) {
        // excess = e0 + b alpha + c alpha^2 exactly.
        const double ep = excess(1.0);
        const double em = excess(-1.0);
        const double c = 0.5 * (ep + em) - e0;
        const double b = 0.5 * (ep - em);
        if (c <= 0.0) return std::numeric_limits<double>::quiet_NaN();
        return (-b + std::sqrt(b * b - 4.0 * c * e0)) / (2.0 * c);
    }

    double lo = 0.0;
    double hi = 1.0;
    int expansions = 0;
    while (excess(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++expansions > 60) return std::numeric_limits<double>::quiet_NaN();
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (excess(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return std::abs(excess(lo)) < std::abs(excess(hi)) ? lo : hi;
}

CanonicalDraw CanonicalSampler::draw(std::uint64_t index) const {
    const SystemParams& params = spec_.params;
    const std::size_t n = params.n;
    const double beta = params.beta;
    Substream rng(spec_.seed, index);

    CanonicalDraw out;
    out.state = LatticeState(n);

    // Softest-mode pair (g_1, h . psi_1 / sqrt(N)) in polar form when stratified.
    std::optional<double> soft_h;
    double soft_g = 0.0;
    if (spec_.stratify_soft_mode && index < spec_.count) {
        const double q = (static_cast<double>(index) + rng.uniform()) / static_cast<double>(spec_.count);
        const double r = std::sqrt(-2.0 * std::log1p(-q));
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        soft_g = r * std::cos(theta);
        soft_h = r * std::sin(theta);
    }

    // A stratified soft mode goes into the base and is left out of the alpha
    // rescaling, so its stratum energy survives the energy pinning.
    std::vector<double> base = minimum_.u;
    std::vector<double> fluct(n, 0.0);
    const double inv_sqrt_beta = 1.0 / std::sqrt(beta);
    for (std::size_t k = 0; k < n; ++k) {
        const bool soft = k == 0 && soft_h;
        const double g = soft ? soft_g : rng.normal();
        const double coef = g * inv_sqrt_beta / std::sqrt(spectrum_.eigenvalues[k]);
        const auto& psi = spectrum_.eigenvectors[k];
        auto& target = soft ? base : fluct;
        for (std::size_t j = 0; j < n; ++j) target[j] += coef * psi[j];
    }

    const double p_scale = std::sqrt(static_cast<double>(n) / beta);
    constexpr int max_redraws = 1000;
    for (;;) {
        for (std::size_t j = 0; j < n; ++j) out.state.p[j] = p_scale * rng.normal();
        if (soft_h) {
            const auto& psi = spectrum_.eigenvectors.front();
            const double inv_norm = 1.0 / std::sqrt(static_cast<double>(n));
            double proj = 0.0;
            for (std::size_t j = 0; j < n; ++j) proj += out.state.p[j] * psi[j] * inv_norm;
            const double shift = p_scale * *soft_h - proj;
            for (std::size_t j = 0; j < n; ++j) out.state.p[j] += shift * psi[j] * inv_norm;
        }
        if (!spec_.pin_energy) {
            out.alpha = 1.0;
            break;
        }
        const double target_u = spec_.target_energy() - kinetic_energy(params, out.state.p);
        if (target_u > minimum_.energy) {
            const double alpha = solve_alpha(base, fluct, target_u);
            if (std::isfinite(alpha) && alpha > 0.0) {
                out.alpha = alpha;
                break;
            }
        }
        if (++out.redraws > max_redraws) {
            throw NumericalFailure("CanonicalSampler: no admissible alpha after " + std::to_string(max_redraws) +
                                   " momentum redraws; energy target too close to the minimum");
        }
    }
    for (std::size_t j = 0; j < n; ++j) out.state.u[j] = base[j] + out.alpha * fluct[j];
    return out;
}

std::vector<LatticeState> CanonicalSampler::draw_all() const {
    std::vector<LatticeState> states;
    states.reserve(spec_.count);
    for (std::size_t i = 0; i < spec_.count; ++i) states.push_back(draw(i).state);
    return states;
}

std::vector<LatticeState> sample_canonical_ic(const EnsembleSpec& spec, const CriticalPoint& minimum,
                                              const Spectrum& min_spectrum) {
    return CanonicalSampler(spec, minimum, min_spectrum).draw_all();
}

MicrocanonicalSampler::MicrocanonicalSampler(const SystemParams& params, double energy, std::uint64_t seed)
    : params_(params), energy_(energy), seed_(seed) {
    params_.validate();
    if (params_.potential.family() != Potential::Family::Quadratic) {
        throw ContractViolation("microcanonical sampling is only supported for quadratic potentials, got " +
                                params_.potential.name());
    }
    require(energy > 0.0 && std::isfinite(energy), "MicrocanonicalSampler: energy must be positive");
    const std::vector<double> zero(params_.n, 0.0);
    spectrum_ = hessian_spectrum(params_, zero, true);
    for (double lam : spectrum_.eigenvalues) {
        require(lam > 0.0, "MicrocanonicalSampler: quadratic operator must be positive definite");
    }
}

LatticeState MicrocanonicalSampler::draw(std::uint64_t index) const {
    const std::size_t n = params_.n;
    Substream rng(seed_, index);
    std::vector<double> z(2 * n);
    double norm2 = 0.0;
    for (double& v : z) {
        v = rng.normal();
        norm2 += v * v;
    }
    const double scale = std::sqrt(2.0 * energy_ / norm2);
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    LatticeState s(n);
    for (std::size_t j = 0; j < n; ++j) s.p[j] = sqrt_n * scale * z[j];
    for (std::size_t k = 0; k < n; ++k) {
        const double coef = scale * z[n + k] / std::sqrt(spectrum_.eigenvalues[k]);
        const auto& psi = spectrum_.eigenvectors[k];
        for (std::size_t j = 0; j < n; ++j) s.u[j] += coef * psi[j];
    }
    return s;
}

std::vector<LatticeState> MicrocanonicalSampler::draw_all(std::size_t count) const {
    std::vector<LatticeState> states;
    states.reserve(count);
    for (std::size_t i = 0; i < count; ++i) states.push_back(draw(i));
    return states;
}

std::vector<LatticeState> sample_microcanonical_quadratic(const SystemParams& params, double energy,
                                                          std::uint64_t seed, std::size_t count) {
    return MicrocanonicalSampler(params, energy, seed).draw_all(count);
}

CharFunctionalEstimate empirical_char_functional(std::span<const LatticeState> samples,
                                                 std::span<const double> s, std::span<const double> t) {
    require(!samples.empty(), "empirical_char_functional: no samples");
    const std::size_t n = samples.front().size();
    require(s.size() == n && t.size() == n, "empirical_char_functional: test functions must have N entries");

    double sum_c = 0.0, sum_s = 0.0, sum_c2 = 0.0, sum_s2 = 0.0;
    for (const auto& st : samples) {
        require(st.size() == n && st.p.size() == n, "empirical_char_functional: inconsistent sample sizes");
        double theta = 0.0;
        for (std::size_t j = 0; j < n; ++j) theta += s[j] * st.p[j] + t[j] * st.u[j];
        theta /= static_cast<double>(n);
        const double c = std::cos(theta);
        const double sn = std::sin(theta);
        sum_c += c;
        sum_s += sn;
        sum_c2 += c * c;
        sum_s2 += sn * sn;
    }
    const double m = static_cast<double>(samples.size());
    CharFunctionalEstimate est;
    est.samples = samples.size();
    est.value = {sum_c / m, sum_s / m};
    if (samples.size() > 1) {
        const double var_c = std::max(0.0, (sum_c2 - m * est.value.real() * est.value.real()) / (m - 1.0));
        const double var_s = std::max(0.0, (sum_s2 - m * est.value.imag() * est.value.imag()) / (m - 1.0));
        est.stderr_real = std::sqrt(var_c / m);
        est.stderr_imag = std::sqrt(var_s / m);
    }
    return est;
}

double char_functional_limit(const std::function<double(double)>& s, const std::function<double(double)>& t,
                             double beta, const CovarianceKernel& kernel) {
    require(beta > 0.0, "char_functional_limit: beta must be positive");
    using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    constexpr unsigned depth = 12;
    constexpr double tol = 1e-11;

    const double s2 = Quad::integrate([&](double x) { return s(x) * s(x); }, 0.0, 1.0, depth, tol);
    // The kernel has a kink on the diagonal, so split the inner integral there.
    auto inner = [&](double x) {
        auto f = [&](double y) { return kernel(x, y) * t(y); };
        double left = x > 0.0 ? Quad::integrate(f, 0.0, x, depth, tol) : 0.0;
        double right = x < 1.0 ? Quad::integrate(f, x, 1.0, depth, tol) : 0.0;
        return t(x) * (left + right);
    };
    const double tct = Quad::integrate(inner, 0.0, 1.0, depth, tol);
    return std::exp(-(s2 + tct) / (2.0 * beta));
}

DenseMatrix empirical_covariance(std::span<const LatticeState> samples, std::span<const double> center) {
    require(samples.size() >= 2, "empirical_covariance: need at least two samples");
    const std::size_t n = center.size();
    std::vector<double> mean(n, 0.0);
    for (const auto& st : samples) {
        require(st.size() == n, "empirical_covariance: sample size mismatch");
        for (std::size_t j = 0; j < n; ++j) mean[j] += st.u[j] - center[j];
    }
    const double m = static_cast<double>(samples.size());
    for (double& v : mean) v /= m;

    DenseMatrix c(n, n);
    std::vector<double> d(n);
    for (const auto& st : samples) {
        for (std::size_t j = 0; j < n; ++j) d[j] = st.u[j] - center[j] - mean[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double di = d[i];
            double* row = &c.data[i * n];
            for (std::size_t j = i; j < n; ++j) row[j] += di * d[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) c(i, j) = c(j, i) = c(i, j) / (m - 1.0);
    }
    return c;
}

ConcentrationBound concentration_bound(double beta, std::span<const double> eigenvalues, double epsilon,
                                       double box_constant) {
    require(beta > 0.0, "concentration_bound: beta must be positive");
    require(epsilon > 0.0 && epsilon < 1.0, "concentration_bound: epsilon must lie in (0, 1)");
    require(box_constant > 0.0, "concentration_bound: box constant must be positive");
    ConcentrationBound out;
    double log_prod = 0.0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        const double lam = eigenvalues[i];
        if (!(lam > 0.0)) {
            throw ContractViolation("concentration_bound: eigenvalue " + std::to_string(i + 1) +
                                    " is not positive");
        }
        const double j = static_cast<double>(i + 1);
        const double width2 = box_constant / std::pow(j, 1.0 + epsilon);
        log_prod += std::log1p(-std::exp(-0.5 * beta * width2 * lam));
    }
    out.log_product = log_prod;
    out.product = std::exp(log_prod);
    out.mass_lower_bound = std::sqrt(out.product);
    return out;
}

}  // namespace metastab
