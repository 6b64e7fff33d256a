#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "metastab/critical_points.hpp"
#include "metastab/errors.hpp"

using namespace metastab;

namespace {

SystemParams neumann(std::size_t n, double delta) {
    SystemParams p;
    p.n = n;
    p.delta = delta;
    return p;
}

// Dense oracle: eigenvalues of the Hessian assembled entry by entry.
Eigen::VectorXd dense_hessian_eigenvalues(const SystemParams& p, const std::vector<double>& u) {
    const auto n = static_cast<Eigen::Index>(p.n);
    const double k = p.delta * p.delta * static_cast<double>(p.n * p.n);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        int bonds = 2;
        if (p.bc == Boundary::Neumann && (i == 0 || i == n - 1)) bonds = 1;
        h(i, i) = bonds * k + 3.0 * u[i] * u[i] - 1.0;
        if (i + 1 < n) h(i, i + 1) = h(i + 1, i) = -k;
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues();
}

double lambda_closed_form() {
    const double r2 = std::sqrt(2.0);
    return std::sqrt(r2 * std::sin(1.0) / std::sinh(r2)) / r2;
}

}  // namespace

TEST(CriticalPoints, MinimizerFromPositiveSeedIsPlusOne) {
    auto p = neumann(64, 1.0);
    std::vector<double> seed(64, 0.5);
    auto m = find_minimizer(p, seed);
    for (double v : m.u) EXPECT_NEAR(v, 1.0, 1e-10);
    EXPECT_EQ(m.morse_index, 0u);
    EXPECT_NEAR(m.energy, 0.0, 1e-15);
}

TEST(CriticalPoints, UniformSaddleAboveBifurcation) {
    auto p = neumann(128, 1.0);
    auto s = find_saddle(p);
    EXPECT_EQ(s.morse_index, 1u);
    EXPECT_NEAR(s.energy, 0.25, 1e-14);
    for (double v : s.u) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(CriticalPoints, SpectrumMatchesDenseOracleAndNormalization) {
    auto p = neumann(48, 0.2);
    auto s = find_saddle(p);
    auto spec = hessian_spectrum(p, s.u, true);
    auto oracle = dense_hessian_eigenvalues(p, s.u);
    for (std::size_t i = 0; i < p.n; ++i) EXPECT_NEAR(spec.eigenvalues[i], oracle(i), 1e-9 * (1 + std::abs(oracle(i))));
    EXPECT_EQ(spec.negative_count(), 1u);
    for (const auto& v : spec.eigenvectors) {
        double s2 = 0.0;
        for (double x : v) s2 += x * x;
        EXPECT_NEAR(s2 / static_cast<double>(p.n), 1.0, 1e-12);
    }
}

TEST(CriticalPoints, KinkSaddleBelowBifurcation) {
    auto p = neumann(256, 0.05);
    auto s = find_saddle(p);
    EXPECT_EQ(s.morse_index, 1u);
    EXPECT_GE(s.u.back(), s.u.front());
    EXPECT_LT(s.residual_norm, 1e-8);
    // Half of a full tanh kink: delta * int_{-1}^{1} sqrt(2 V) du.
    const double kink = p.delta * 4.0 / (3.0 * std::sqrt(2.0));
    EXPECT_NEAR(s.energy, kink, 0.01 * kink);
}

TEST(CriticalPoints, BranchOnsetIsDiscreteBifurcationPoint) {
    for (std::size_t n : {32u, 128u}) {
        auto p = neumann(n, 1.0);
        for (std::size_t branch = 1; branch <= 3; ++branch) {
            const double nn = static_cast<double>(n);
            const double expected = 1.0 / (2.0 * nn * std::sin(branch * std::numbers::pi / (2.0 * nn)));
            EXPECT_NEAR(branch_onset(p, branch), expected, 1e-9) << n << " " << branch;
        }
    }
}

TEST(CriticalPoints, MorseIndexOfCentralSolutionCountsModes) {
    auto p = neumann(128, 0.2);
    std::vector<double> zero(128, 0.0);
    EXPECT_EQ(morse_index(p, zero), 2u);
    p.delta = 0.1;
    EXPECT_EQ(morse_index(p, zero), 4u);
}

TEST(CriticalPoints, PrefactorClosedFormAtLargeN) {
    auto p = neumann(1024, 1.0);
    auto s = find_saddle(p);
    std::vector<double> one(1024, 1.0);
    auto m = find_minimizer(p, one);
    const double lam = prefactor_lambda(hessian_spectrum(p, s.u, false), hessian_spectrum(p, m.u, false));
    EXPECT_NEAR(lam, lambda_closed_form(), 0.001 * lambda_closed_form());
}

TEST(CriticalPoints, PrefactorAgreesWithDenseDiagonalization) {
    auto p = neumann(64, 1.0);
    std::vector<double> zero(64, 0.0), one(64, 1.0);
    auto es = dense_hessian_eigenvalues(p, zero);
    auto em = dense_hessian_eigenvalues(p, one);
    double log_oracle = -0.5 * std::log(em(0));
    for (Eigen::Index j = 1; j < 64; ++j) log_oracle += 0.5 * std::log(es(j) / em(j));
    auto s = find_saddle(p);
    auto m = find_minimizer(p, one);
    const double lam = prefactor_lambda(hessian_spectrum(p, s.u, false), hessian_spectrum(p, m.u, false));
    EXPECT_NEAR(std::log(lam), log_oracle, 1e-10);
}

TEST(CriticalPoints, PrefactorRejectsWrongIndex) {
    std::vector<double> two_neg = {-1.0, -0.5, 1.0};
    std::vector<double> pos = {1.0, 2.0, 3.0};
    EXPECT_THROW(prefactor_lambda(two_neg, pos), ContractViolation);
    EXPECT_THROW(prefactor_lambda(pos, pos), ContractViolation);
    std::vector<double> one_neg = {-1.0, 2.0, 3.0};
    std::vector<double> bad_min = {-1.0, 2.0, 3.0};
    EXPECT_THROW(prefactor_lambda(one_neg, bad_min), ContractViolation);
}

TEST(CriticalPoints, NegativeBarrierIsRejected) {
    CriticalPoint s, m;
    s.energy = 0.1;
    m.energy = 0.2;
    EXPECT_THROW(barrier(s, m), ContractViolation);
    m.energy = 0.0;
    EXPECT_DOUBLE_EQ(barrier(s, m), 0.1);
}

TEST(CriticalPoints, SaddleNeedsBarrierTop) {
    auto p = neumann(16, 1.0);
    p.potential = Potential::quadratic(1.0);
    EXPECT_THROW(find_saddle(p), ContractViolation);
}

TEST(CriticalPoints, BifurcationScanKeepsInputOrder) {
    auto p = neumann(128, 1.0);
    std::vector<double> grid = {0.12, 0.2, 0.3, 0.35};
    auto rows = bifurcation_scan(p, grid);
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(rows[i].delta, grid[i]);
    EXPECT_EQ(rows[3].central_index, 1u);
    EXPECT_NEAR(rows[3].saddle_energy, 0.25, 1e-12);
    EXPECT_TRUE(std::isnan(rows[3].branch_energy[0]));
    EXPECT_EQ(rows[1].central_index, 2u);
    EXPECT_LT(rows[1].saddle_energy, 0.25);
    EXPECT_FALSE(std::isnan(rows[0].branch_energy[1]));
    EXPECT_TRUE(std::isnan(rows[0].branch_energy[2]));
    // Branches are ordered in energy below the central solution.
    EXPECT_LT(rows[0].branch_energy[0], rows[0].branch_energy[1]);
    EXPECT_LT(rows[0].branch_energy[1], 0.25);
}
