#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "metastab/tridiagonal.hpp"

namespace metastab {

enum class Boundary { Dirichlet, Neumann };

std::string to_string(Boundary bc);
Boundary boundary_from_string(const std::string& name);

/// Value, first and second derivative of an on-site potential at one point.
struct PotentialValues {
    double value = 0.0;
    double first = 0.0;
    double second = 0.0;
};

/// On-site potential V(u).
///
/// The double well is V(u) = (1 - u^2)^2 / 4 and the quadratic family is
/// V(u) = alpha u^2 / 2. Tabulated potentials wrap a user callable that
/// returns the (V, V', V'') triple; no differentiation is done here.
class Potential {
public:
    enum class Family { DoubleWell, Quadratic, Tabulated };
    using Callable = std::function<PotentialValues(double)>;

    static Potential double_well();
    static Potential quadratic(double alpha);
    static Potential tabulated(Callable fn, std::string name = "tabulated");

    Family family() const noexcept { return family_; }
    double stiffness() const noexcept { return alpha_; }
    const std::string& name() const noexcept { return name_; }

    PotentialValues eval(double u) const;
    double value(double u) const { return eval(u).value; }
    double first(double u) const { return eval(u).first; }
    double second(double u) const { return eval(u).second; }

private:
    Potential(Family family, double alpha, Callable fn, std::string name);

    Family family_;
    double alpha_ = 0.0;
    Callable fn_;
    std::string name_;
};

PotentialValues potential_eval(const Potential& potential, double u);

struct SystemParams {
    std::size_t n = 128;
    double delta = 1.0;
    double beta = 1.0;
    Boundary bc = Boundary::Neumann;
    Potential potential = Potential::double_well();

    /// Throws ContractViolation unless N >= 2, delta > 0 and beta > 0.
    void validate() const;

    /// delta^2 N^2, the bond stiffness that appears in the force.
    double coupling() const noexcept {
        const double nn = static_cast<double>(n);
        return delta * delta * nn * nn;
    }
};

/// Phase-space point of the truncated system.
struct LatticeState {
    std::vector<double> u;
    std::vector<double> p;
    double t = 0.0;

    LatticeState() = default;
    explicit LatticeState(std::size_t n) : u(n, 0.0), p(n, 0.0) {}
    LatticeState(std::vector<double> u_, std::vector<double> p_, double t_ = 0.0)
        : u(std::move(u_)), p(std::move(p_)), t(t_) {}

    std::size_t size() const noexcept { return u.size(); }
};

struct EnergyParts {
    double kinetic = 0.0;    // T_N = (1/N) sum p_j^2 / 2
    double potential = 0.0;  // U_N, on-site plus bonds
    double total() const noexcept { return kinetic + potential; }
};

/// Grid coordinate x_j = j / (N + 1) of site j = 1..N (passed zero-based).
double grid_point(std::size_t index, std::size_t n) noexcept;

double kinetic_energy(const SystemParams& params, std::span<const double> p);
double potential_energy(const SystemParams& params, std::span<const double> u);
EnergyParts energy_parts(const SystemParams& params, const LatticeState& state);
double total_energy(const SystemParams& params, const LatticeState& state);

/// F_j = delta^2 N^2 (u_{j-1} - 2 u_j + u_{j+1}) - V'(u_j), ghosts per bc.
std::vector<double> force(const SystemParams& params, std::span<const double> u);

/// Allocation-free variant used by the integrator. `out` must have size N.
void force_into(const SystemParams& params, std::span<const double> u, std::span<double> out);

/// The symmetric tridiagonal operator -delta^2 N^2 Lap + V''(u_j), i.e. the
/// Jacobian of -F. Its eigenvalues are the lambda_j of the rate formulas.
SymTridiagonal hessian_operator(const SystemParams& params, std::span<const double> u);

/// Spatial means (1/N) sum u_j and (1/N) sum p_j.
double spatial_mean(std::span<const double> values) noexcept;

}  // namespace metastab
