#include "metastab/lattice.hpp"

#include <cmath>
#include <utility>

#include "metastab/errors.hpp"

namespace metastab {

std::string to_string(Boundary bc) {
    return bc == Boundary::Dirichlet ? "dirichlet" : "neumann";
}

Boundary boundary_from_string(const std::string& name) {
    if (name == "dirichlet" || name == "Dirichlet") return Boundary::Dirichlet;
    if (name == "neumann" || name == "Neumann") return Boundary::Neumann;
    throw ContractViolation("unknown boundary condition '" + name + "'");
}

Potential::Potential(Family family, double alpha, Callable fn, std::string name)
    : family_(family), alpha_(alpha), fn_(std::move(fn)), name_(std::move(name)) {}

Potential Potential::double_well() { return Potential(Family::DoubleWell, 0.0, {}, "double-well"); }

Potential Potential::quadratic(double alpha) {
    detail::require(alpha > 0.0, "quadratic potential needs alpha > 0");
    return Potential(Family::Quadratic, alpha, {}, "quadratic");
}

Potential Potential::tabulated(Callable fn, std::string name) {
    detail::require(static_cast<bool>(fn), "tabulated potential needs a callable");
    return Potential(Family::Tabulated, 0.0, std::move(fn), std::move(name));
}

PotentialValues Potential::eval(double u) const {
    switch (family_) {
        case Family::DoubleWell: {
            const double w = 1.0 - u * u;
            return {0.25 * w * w, u * u * u - u, 3.0 * u * u - 1.0};
        }
        case Family::Quadratic:
            return {0.5 * alpha_ * u * u, alpha_ * u, alpha_};
        case Family::Tabulated:
            return fn_(u);
    }
    return {};
}

PotentialValues potential_eval(const Potential& potential, double u) { return potential.eval(u); }

void SystemParams::validate() const {
    detail::require(n >= 2, "SystemParams: N must be at least 2");
    detail::require(delta > 0.0 && std::isfinite(delta), "SystemParams: delta must be positive");
    detail::require(beta > 0.0 && std::isfinite(beta), "SystemParams: beta must be positive");
}

double grid_point(std::size_t index, std::size_t n) noexcept {
    return static_cast<double>(index + 1) / static_cast<double>(n + 1);
}

namespace {

void check_size(const SystemParams& params, std::size_t got, const char* what) {
    if (got != params.n) {
        throw ContractViolation(std::string(what) + ": expected length " + std::to_string(params.n) +
                                ", got " + std::to_string(got));
    }
}

// Ghost values u_0 and u_{N+1}.
std::pair<double, double> ghosts(Boundary bc, std::span<const double> u) {
    if (bc == Boundary::Dirichlet) return {0.0, 0.0};
    return {u.front(), u.back()};
}

template <typename DV>
void force_kernel(double k, std::span<const double> u, double left, double right,
                  std::span<double> out, DV dv) {
    const std::size_t n = u.size();
    if (n == 1) {
        out[0] = k * (left - 2.0 * u[0] + right) - dv(u[0]);
        return;
    }
    out[0] = k * (left - 2.0 * u[0] + u[1]) - dv(u[0]);
    for (std::size_t j = 1; j + 1 < n; ++j) {
        out[j] = k * (u[j - 1] - 2.0 * u[j] + u[j + 1]) - dv(u[j]);
    }
    out[n - 1] = k * (u[n - 2] - 2.0 * u[n - 1] + right) - dv(u[n - 1]);
}

}  // namespace

double kinetic_energy(const SystemParams& params, std::span<const double> p) {
    check_size(params, p.size(), "kinetic_energy");
    double s = 0.0;
    for (double v : p) s += v * v;
    return 0.5 * s / static_cast<double>(params.n);
}

double potential_energy(const SystemParams& params, std::span<const double> u) {
    check_size(params, u.size(), "potential_energy");
    const auto [left, right] = ghosts(params.bc, u);
    const double nn = static_cast<double>(params.n);

    double onsite = 0.0;
    for (double v : u) onsite += params.potential.value(v);

    double bonds = (u.front() - left) * (u.front() - left) + (right - u.back()) * (right - u.back());
    for (std::size_t j = 0; j + 1 < u.size(); ++j) {
        const double g = u[j + 1] - u[j];
        bonds += g * g;
    }
    return onsite / nn + 0.5 * nn * params.delta * params.delta * bonds;
}

EnergyParts energy_parts(const SystemParams& params, const LatticeState& state) {
    return {kinetic_energy(params, state.p), potential_energy(params, state.u)};
}

double total_energy(const SystemParams& params, const LatticeState& state) {
    return energy_parts(params, state).total();
}

void force_into(const SystemParams& params, std::span<const double> u, std::span<double> out) {
    check_size(params, u.size(), "force");
    check_size(params, out.size(), "force output");
    const auto [left, right] = ghosts(params.bc, u);
    const double k = params.coupling();
    const Potential& pot = params.potential;
    switch (pot.family()) {
        case Potential::Family::DoubleWell:
            force_kernel(k, u, left, right, out, [](double x) { return x * x * x - x; });
            break;
        case Potential::Family::Quadratic: {
            const double a = pot.stiffness();
            force_kernel(k, u, left, right, out, [a](double x) { return a * x; });
            break;
        }
        case Potential::Family::Tabulated:
            force_kernel(k, u, left, right, out, [&pot](double x) { return pot.first(x); });
            break;
    }
}

std::vector<double> force(const SystemParams& params, std::span<const double> u) {
    std::vector<double> out(u.size());
    force_into(params, u, out);
    return out;
}

SymTridiagonal hessian_operator(const SystemParams& params, std::span<const double> u) {
    check_size(params, u.size(), "hessian_operator");
    const std::size_t n = params.n;
    const double k = params.coupling();
    SymTridiagonal h;
    h.diag.resize(n);
    h.off.assign(n - 1, -k);
    for (std::size_t j = 0; j < n; ++j) h.diag[j] = 2.0 * k + params.potential.second(u[j]);
    if (params.bc == Boundary::Neumann) {
        // Ghost copies u_0 = u_1, u_{N+1} = u_N remove one bond stiffness.
        h.diag.front() -= k;
        h.diag.back() -= k;
    }
    return h;
}

double spatial_mean(std::span<const double> values) noexcept {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

}  // namespace metastab
