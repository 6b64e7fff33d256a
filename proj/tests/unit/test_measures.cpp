#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "metastab/critical_points.hpp"
#include "metastab/errors.hpp"
#include "metastab/measures.hpp"

using namespace metastab;

namespace {

SystemParams quadratic_params(std::size_t n, double delta, Boundary bc = Boundary::Neumann) {
    SystemParams p;
    p.n = n;
    p.delta = delta;
    p.bc = bc;
    p.potential = Potential::quadratic(1.0);
    return p;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

struct WellFixture {
    SystemParams params;
    CriticalPoint minimum;
    Spectrum spectrum;
};

WellFixture plus_well(std::size_t n, double delta, double beta) {
    WellFixture w;
    w.params.n = n;
    w.params.delta = delta;
    w.params.beta = beta;
    std::vector<double> one(n, 1.0);
    w.minimum = find_minimizer(w.params, one);
    w.spectrum = hessian_spectrum(w.params, w.minimum.u, true);
    return w;
}

}  // namespace

TEST(Kernels, ClosedFormExamples) {
    EXPECT_DOUBLE_EQ(covariance_closed_form(KernelKind::BrownianBridge, 1.0, 0.5, 0.5), 0.25);
    for (double d : {0.1, 1.0, 3.0}) {
        EXPECT_DOUBLE_EQ(covariance_closed_form(KernelKind::DirichletMassive, d, 0.0, 0.4), 0.0);
    }
    const double e = std::exp(1.0);
    EXPECT_NEAR(covariance_closed_form(KernelKind::NeumannMassive, 1.0, 0.0, 1.0), 2.0 / (e - 1.0 / e), 1e-15);
    EXPECT_NEAR(covariance_closed_form(KernelKind::NeumannMassive, 1.0, 0.0, 1.0), 0.8509, 1e-4);
}

TEST(Kernels, OutOfRangeThrows) {
    EXPECT_THROW(covariance_closed_form(KernelKind::NeumannMassive, 1.0, -0.1, 0.5), ContractViolation);
    EXPECT_THROW(covariance_closed_form(KernelKind::BrownianBridge, 1.0, 0.5, 1.5), ContractViolation);
}

TEST(Kernels, SymmetricAndPositiveSemidefinite) {
    for (auto kind : {KernelKind::DirichletMassive, KernelKind::NeumannMassive, KernelKind::BrownianBridge}) {
        CovarianceKernel k{kind, 0.4, 2.0};
        auto c = covariance_on_grid(k, 40);
        Eigen::MatrixXd m(40, 40);
        for (std::size_t i = 0; i < 40; ++i) {
            for (std::size_t j = 0; j < 40; ++j) {
                EXPECT_DOUBLE_EQ(c(i, j), c(j, i));
                m(i, j) = c(i, j);
            }
        }
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        EXPECT_EQ(llt.info(), Eigen::Success) << to_string(kind);
    }
}

TEST(Kernels, NumericInversionConvergesToClosedForm) {
    struct Case {
        Boundary bc;
        double f;
        KernelKind kind;
    };
    for (Case c : {Case{Boundary::Dirichlet, 1.0, KernelKind::DirichletMassive},
                   Case{Boundary::Dirichlet, 0.0, KernelKind::BrownianBridge},
                   Case{Boundary::Neumann, 1.0, KernelKind::NeumannMassive}}) {
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t n : {64u, 128u, 256u}) {
            auto p = quadratic_params(n, 1.0, c.bc);
            std::vector<double> mass(n, c.f);
            auto num = covariance_numeric(p, mass);
            auto exact = covariance_on_grid(CovarianceKernel{c.kind, 1.0, 1.0}, n);
            const double err = max_abs_diff(num, exact);
            EXPECT_LT(err, prev) << to_string(c.kind) << " N=" << n;
            EXPECT_LT(err, 3.0 / static_cast<double>(n)) << to_string(c.kind) << " N=" << n;
            prev = err;
        }
    }
}

TEST(Kernels, SingularNeumannOperatorThrows) {
    auto p = quadratic_params(32, 1.0);
    std::vector<double> zero(32, 0.0);
    EXPECT_THROW(covariance_numeric(p, zero), NumericalFailure);
    std::vector<double> neg(32, -1.0);
    EXPECT_THROW(covariance_numeric(p, neg), ContractViolation);
}

TEST(Canonical, EveryDrawHasTargetEnergy) {
    auto w = plus_well(64, 1.0, 12.0);
    EnsembleSpec spec;
    spec.params = w.params;
    spec.count = 50;
    spec.seed = 3;
    CanonicalSampler sampler(spec, w.minimum, w.spectrum);
    for (std::uint64_t i = 0; i < spec.count; ++i) {
        auto d = sampler.draw(i);
        EXPECT_NEAR(total_energy(w.params, d.state), 64.0 / 12.0, 1e-10 * 64.0 / 12.0);
        EXPECT_GT(d.alpha, 0.0);
    }
}

TEST(Canonical, SeedDeterminism) {
    auto w = plus_well(32, 1.0, 10.0);
    EnsembleSpec spec;
    spec.params = w.params;
    spec.count = 5;
    spec.seed = 99;
    auto a = sample_canonical_ic(spec, w.minimum, w.spectrum);
    auto b = sample_canonical_ic(spec, w.minimum, w.spectrum);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].u, b[i].u);
        EXPECT_EQ(a[i].p, b[i].p);
    }
    spec.seed = 100;
    auto c = sample_canonical_ic(spec, w.minimum, w.spectrum);
    EXPECT_NE(a[0].u, c[0].u);
}

TEST(Canonical, LowTemperatureConcentratesAtMinimizer) {
    auto w = plus_well(32, 1.0, 1e8);
    EnsembleSpec spec;
    spec.params = w.params;
    spec.count = 3;
    for (const auto& s : sample_canonical_ic(spec, w.minimum, w.spectrum)) {
        for (double v : s.u) EXPECT_NEAR(v, 1.0, 1e-2);
        for (double v : s.p) EXPECT_NEAR(v, 0.0, 1e-2);
    }
}

TEST(Canonical, CovarianceMatchesNumericKernelWithMassTwo) {
    const std::size_t n = 24;
    auto w = plus_well(n, 1.0, 400.0);
    EnsembleSpec spec;
    spec.params = w.params;
    spec.count = 6000;
    spec.seed = 5;
    auto samples = sample_canonical_ic(spec, w.minimum, w.spectrum);
    auto emp = empirical_covariance(samples, w.minimum.u);
    std::vector<double> mass(n, 2.0);
    auto c = covariance_numeric(w.params, mass);
    const double m = static_cast<double>(spec.count);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double target = c(i, j) / w.params.beta;
            const double se = std::sqrt((c(i, i) * c(j, j) + c(i, j) * c(i, j)) / m) / w.params.beta;
            worst = std::max(worst, std::abs(emp(i, j) - target) / se);
        }
    }
    EXPECT_LT(worst, 5.0);
}

TEST(Canonical, StratifiedDrawsKeepMarginal) {
    auto w = plus_well(16, 1.0, 10.0);
    EnsembleSpec spec;
    spec.params = w.params;
    spec.count = 4000;
    spec.pin_energy = false;
    spec.stratify_soft_mode = true;
    auto samples = sample_canonical_ic(spec, w.minimum, w.spectrum);
    // Soft-mode phase-space radius r^2 = beta (lambda_1 c_1^2 + pbar'^2) is chi^2 with 2 dof.
    const auto& psi = w.spectrum.eigenvectors.front();
    const double lam = w.spectrum.eigenvalues.front();
    double mean_r2 = 0.0, max_r2 = 0.0;
    for (const auto& s : samples) {
        double cu = 0.0, cp = 0.0;
        for (std::size_t j = 0; j < 16; ++j) {
            cu += (s.u[j] - w.minimum.u[j]) * psi[j] / 16.0;
            cp += s.p[j] * psi[j] / 16.0;
        }
        const double r2 = w.params.beta * (lam * cu * cu + cp * cp);
        mean_r2 += r2;
        max_r2 = std::max(max_r2, r2);
    }
    mean_r2 /= static_cast<double>(spec.count);
    EXPECT_NEAR(mean_r2, 2.0, 1e-2);
    // The top stratum always reaches the extreme tail.
    EXPECT_GT(max_r2, -2.0 * std::log(1.0 / static_cast<double>(spec.count)));
}

TEST(Canonical, PinningLeavesStratifiedModeIntact) {
    auto w = plus_well(32, 1.0, 20.0);
    EnsembleSpec spec;
    spec.params = w.params;
    spec.count = 50;
    spec.seed = 3;
    spec.stratify_soft_mode = true;
    EnsembleSpec loose = spec;
    loose.pin_energy = false;
    CanonicalSampler pinned(spec, w.minimum, w.spectrum);
    CanonicalSampler free(loose, w.minimum, w.spectrum);
    const auto& psi = w.spectrum.eigenvectors.front();
    for (std::uint64_t i : {0u, 25u, 49u}) {
        auto a = pinned.draw(i);
        auto b = free.draw(i);
        EXPECT_NEAR(total_energy(w.params, a.state), spec.target_energy(), 1e-9);
        double ca = 0.0, cb = 0.0;
        for (std::size_t j = 0; j < 32; ++j) {
            ca += (a.state.u[j] - w.minimum.u[j]) * psi[j];
            cb += (b.state.u[j] - w.minimum.u[j]) * psi[j];
        }
        EXPECT_NEAR(ca, cb, 1e-9 * (1.0 + std::abs(cb)));
    }
}

TEST(Canonical, RequiresPositiveSpectrum) {
    auto w = plus_well(8, 1.0, 10.0);
    w.spectrum.eigenvalues[0] = -1.0;
    EnsembleSpec spec;
    spec.params = w.params;
    EXPECT_THROW(CanonicalSampler(spec, w.minimum, w.spectrum), ContractViolation);
}

TEST(Microcanonical, DrawsLieOnShell) {
    auto p = quadratic_params(64, 0.5);
    MicrocanonicalSampler sampler(p, 7.5, 1);
    for (std::uint64_t i = 0; i < 20; ++i) {
        auto s = sampler.draw(i);
        EXPECT_NEAR(total_energy(p, s), 7.5, 1e-12 * 7.5);
    }
}

TEST(Microcanonical, Equipartition) {
    auto p = quadratic_params(32, 1.0);
    auto samples = sample_microcanonical_quadratic(p, 10.0, 2, 4000);
    double kin = 0.0;
    for (const auto& s : samples) kin += kinetic_energy(p, s.p);
    kin /= 4000.0;
    // Kinetic share of a uniform point on the 2N-sphere has mean E/2 and variance E^2/(4(N+1)) per draw.
    EXPECT_NEAR(kin, 5.0, 4.0 * 5.0 / std::sqrt(33.0 * 4000.0));
}

TEST(Microcanonical, NonQuadraticPotentialUnsupported) {
    SystemParams p;
    p.n = 8;
    EXPECT_THROW(MicrocanonicalSampler(p, 1.0, 0), ContractViolation);
    auto q = quadratic_params(8, 1.0);
    EXPECT_THROW(MicrocanonicalSampler(q, 0.0, 0), ContractViolation);
}

TEST(CharFunctional, OriginIsOne) {
    auto p = quadratic_params(16, 1.0);
    auto samples = sample_microcanonical_quadratic(p, 16.0, 4, 1000);
    std::vector<double> zero(16, 0.0);
    auto est = empirical_char_functional(samples, zero, zero);
    EXPECT_DOUBLE_EQ(est.value.real(), 1.0);
    EXPECT_DOUBLE_EQ(est.value.imag(), 0.0);
    EXPECT_EQ(est.samples, 1000u);
}

TEST(CharFunctional, LimitMatchesAnalyticIntegrals) {
    // s = 1, t = 0 gives exp(-1/(2 beta)).
    CovarianceKernel k{KernelKind::NeumannMassive, 1.0, 1.0};
    EXPECT_NEAR(char_functional_limit([](double) { return 1.0; }, [](double) { return 0.0; }, 2.0, k),
                std::exp(-0.25), 1e-12);
    // t = 1 against the Neumann kernel: int int C = 1 / mass (constant mode of -d^2 + m).
    EXPECT_NEAR(char_functional_limit([](double) { return 0.0; }, [](double) { return 1.0; }, 1.0, k),
                std::exp(-0.5), 1e-9);
}

TEST(Concentration, ProductBoundProperties) {
    std::vector<double> lam(1000);
    for (std::size_t j = 0; j < lam.size(); ++j) lam[j] = static_cast<double>((j + 1) * (j + 1));
    double prev = 0.0;
    for (double beta : {1.0, 5.0, 20.0, 100.0, 1000.0}) {
        auto b = concentration_bound(beta, lam, 0.5, 1.0);
        EXPECT_GE(b.product, prev);
        EXPECT_LE(b.product, 1.0);
        EXPECT_NEAR(b.mass_lower_bound, std::sqrt(b.product), 1e-15);
        prev = b.product;
    }
    EXPECT_GT(concentration_bound(1e6, lam, 0.5, 1.0).product, 0.999999);
}

TEST(Concentration, BoundsExactGaussianBoxMass) {
    std::vector<double> lam = {0.5, 2.0, 4.5, 9.0, 20.0};
    const double beta = 3.0, eps = 0.5, c = 1.0;
    double exact = 1.0;
    for (std::size_t j = 0; j < lam.size(); ++j) {
        const double half_width = std::sqrt(c / std::pow(j + 1.0, 1.0 + eps));
        exact *= std::erf(half_width * std::sqrt(beta * lam[j] / 2.0));
    }
    auto b = concentration_bound(beta, lam, eps, c);
    EXPECT_LE(b.mass_lower_bound, exact);
}

TEST(Concentration, RejectsBadInput) {
    std::vector<double> lam = {1.0, 0.0};
    EXPECT_THROW(concentration_bound(1.0, lam, 0.5, 1.0), ContractViolation);
    std::vector<double> ok = {1.0, 2.0};
    EXPECT_THROW(concentration_bound(1.0, ok, 1.0, 1.0), ContractViolation);
    EXPECT_THROW(concentration_bound(1.0, ok, 0.0, 1.0), ContractViolation);
}
