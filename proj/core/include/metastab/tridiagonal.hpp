#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace metastab {

/// Real symmetric tridiagonal matrix: diag has size n, off has size n - 1
/// (off[i] couples rows i and i + 1).
struct SymTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const noexcept { return diag.size(); }
    double trace() const noexcept;
    std::vector<double> multiply(std::span<const double> x) const;
    SymTridiagonal shifted(double sigma) const;
};

/// Unit-norm eigenpairs, eigenvalues ascending.
struct TridiagonalEigen {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

/// Eigenvalues only, ascending. Implicit-shift QL; O(n^2).
std::vector<double> tridiagonal_eigenvalues(const SymTridiagonal& t);

/// Full eigensystem via implicit-shift QL with accumulated rotations; O(n^3).
TridiagonalEigen tridiagonal_eigensystem(const SymTridiagonal& t);

/// Number of eigenvalues strictly below sigma (Sylvester inertia of the
/// LDL^T factorization of t - sigma I).
std::size_t count_eigenvalues_below(const SymTridiagonal& t, double sigma);

/// Unit-norm eigenvector for an eigenvalue estimate, by inverse iteration.
std::vector<double> inverse_iteration(const SymTridiagonal& t, double lambda);

/// Solves t x = rhs with partial pivoting (works for indefinite t).
/// Throws NumericalFailure when t is numerically singular.
std::vector<double> tridiagonal_solve(const SymTridiagonal& t, std::span<const double> rhs);

/// Cholesky-style LDL^T attempt; true when every pivot is positive.
bool is_positive_definite(const SymTridiagonal& t);

}  // namespace metastab
