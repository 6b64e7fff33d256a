#include "metastab/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "metastab/errors.hpp"

namespace metastab {
namespace {

constexpr int kMaxQlIterations = 60;

void check_shape(const SymTridiagonal& t) {
    detail::require(!t.diag.empty(), "tridiagonal matrix is empty");
    detail::require(t.off.size() + 1 == t.diag.size(),
                    "tridiagonal off-diagonal must have size n - 1");
}

double max_abs_entry(const SymTridiagonal& t) {
    double m = 0.0;
    for (double v : t.diag) m = std::max(m, std::abs(v));
    for (double v : t.off) m = std::max(m, std::abs(v));
    return m;
}

// Implicit-shift QL on (d, e) where e[i] couples i and i + 1 and e[n-1] = 0.
// When vecs is non-null, vecs[k] holds eigenvector k and rotations are
// accumulated into it.
void ql_implicit(std::vector<double>& d, std::vector<double>& e,
                 std::vector<std::vector<double>>* vecs) {
    const int n = static_cast<int>(d.size());
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m = l;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m == l) break;
            if (iter++ == kMaxQlIterations) {
                throw NumericalFailure("tridiagonal QL did not converge for eigenvalue " +
                                       std::to_string(l) + " after " +
                                       std::to_string(kMaxQlIterations) + " iterations");
            }
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0;
            double c = 1.0;
            double p = 0.0;
            int i = m - 1;
            bool underflow = false;
            for (; i >= l; --i) {
                const double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if (vecs != nullptr) {
                    auto& lo = (*vecs)[static_cast<std::size_t>(i)];
                    auto& hi = (*vecs)[static_cast<std::size_t>(i + 1)];
                    for (std::size_t k = 0; k < lo.size(); ++k) {
                        const double hk = hi[k];
                        hi[k] = s * lo[k] + c * hk;
                        lo[k] = c * lo[k] - s * hk;
                    }
                }
            }
            if (underflow) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (m != l);
    }
}

}  // namespace

double SymTridiagonal::trace() const noexcept {
    return std::accumulate(diag.begin(), diag.end(), 0.0);
}

std::vector<double> SymTridiagonal::multiply(std::span<const double> x) const {
    const std::size_t n = size();
    detail::require(x.size() == n, "tridiagonal multiply: size mismatch");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = diag[i] * x[i];
        if (i > 0) acc += off[i - 1] * x[i - 1];
        if (i + 1 < n) acc += off[i] * x[i + 1];
        y[i] = acc;
    }
    return y;
}

SymTridiagonal SymTridiagonal::shifted(double sigma) const {
    SymTridiagonal out = *this;
    for (double& v : out.diag) v -= sigma;
    return out;
}

std::vector<double> tridiagonal_eigenvalues(const SymTridiagonal& t) {
    check_shape(t);
    std::vector<double> d = t.diag;
    std::vector<double> e(t.off);
    e.push_back(0.0);
    ql_implicit(d, e, nullptr);
    std::sort(d.begin(), d.end());
    return d;
}

TridiagonalEigen tridiagonal_eigensystem(const SymTridiagonal& t) {
    check_shape(t);
    const std::size_t n = t.size();
    std::vector<double> d = t.diag;
    std::vector<double> e(t.off);
    e.push_back(0.0);
    std::vector<std::vector<double>> vecs(n, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < n; ++k) vecs[k][k] = 1.0;
    ql_implicit(d, e, &vecs);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

    TridiagonalEigen out;
    out.values.reserve(n);
    out.vectors.reserve(n);
    for (std::size_t k : order) {
        out.values.push_back(d[k]);
        out.vectors.push_back(std::move(vecs[k]));
    }
    return out;
}

std::size_t count_eigenvalues_below(const SymTridiagonal& t, double sigma) {
    check_shape(t);
    const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    std::size_t count = 0;
    double q = t.diag[0] - sigma;
    for (std::size_t i = 0;; ++i) {
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++count;
        if (i + 1 == t.size()) break;
        q = (t.diag[i + 1] - sigma) - t.off[i] * t.off[i] / q;
    }
    return count;
}

bool is_positive_definite(const SymTridiagonal& t) {
    check_shape(t);
    double q = t.diag[0];
    for (std::size_t i = 0;; ++i) {
        if (!(q > 0.0)) return false;
        if (i + 1 == t.size()) return true;
        q = t.diag[i + 1] - t.off[i] * t.off[i] / q;
    }
}

namespace {

// Gaussian elimination with partial pivoting (LAPACK gtsv layout). When
// `perturb` is set, exactly singular pivots are nudged instead of rejected,
// which is what inverse iteration wants.
std::vector<double> pivoted_solve(const SymTridiagonal& t, std::span<const double> rhs, bool perturb) {
    check_shape(t);
    const std::size_t n = t.size();
    detail::require(rhs.size() == n, "tridiagonal solve: rhs size mismatch");
    std::vector<double> d = t.diag;
    std::vector<double> du = t.off;
    std::vector<double> dl = t.off;
    std::vector<double> du2(n > 2 ? n - 2 : 0, 0.0);
    std::vector<double> b(rhs.begin(), rhs.end());

    const double scale = std::max(max_abs_entry(t), std::numeric_limits<double>::min());
    const double threshold = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    auto guard = [&](double& pivot) {
        if (std::abs(pivot) > threshold) return;
        if (!perturb) throw NumericalFailure("tridiagonal solve: operator is numerically singular");
        pivot = pivot < 0.0 ? -threshold : threshold;
    };

    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            guard(d[i]);
            const double f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            b[i + 1] -= f * b[i];
        } else {
            const double f = d[i] / dl[i];
            d[i] = dl[i];
            const double tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            du[i] = tmp;
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= f * b[i];
        }
    }
    guard(d[n - 1]);

    std::vector<double> x(n);
    x[n - 1] = b[n - 1] / d[n - 1];
    if (n >= 2) x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    if (n >= 3) {
        for (std::size_t k = n - 2; k-- > 0;) {
            x[k] = (b[k] - du[k] * x[k + 1] - du2[k] * x[k + 2]) / d[k];
        }
    }
    return x;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

std::vector<double> tridiagonal_solve(const SymTridiagonal& t, std::span<const double> rhs) {
    return pivoted_solve(t, rhs, false);
}

std::vector<double> inverse_iteration(const SymTridiagonal& t, double lambda) {
    check_shape(t);
    const std::size_t n = t.size();
    const SymTridiagonal shifted = t.shifted(lambda);
    // Deterministic start vector with no special symmetry.
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.5 * std::sin(1.0 + 0.7 * static_cast<double>(i));
    for (int it = 0; it < 4; ++it) {
        x = pivoted_solve(shifted, x, true);
        const double nrm = norm2(x);
        if (!(nrm > 0.0) || !std::isfinite(nrm)) {
            throw NumericalFailure("inverse iteration broke down");
        }
        for (double& v : x) v /= nrm;
    }
    return x;
}

}  // namespace metastab
