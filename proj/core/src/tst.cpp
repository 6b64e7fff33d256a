#include "metastab/tst.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "metastab/errors.hpp"

namespace metastab {

using detail::require;

double surface_distance(const DividingSurface& surface, std::span<const double> u) {
    const std::size_t n = surface.size();
    if (u.size() != n || surface.phi1.size() != n) {
        throw ContractViolation("surface_distance: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                                std::to_string(n) + ")");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += (u[j] - surface.u_s[j]) * surface.phi1[j];
    return acc / static_cast<double>(n);
}

double DividingSurface::distance(std::span<const double> u) const { return surface_distance(*this, u); }

DividingSurface make_dividing_surface(const CriticalPoint& saddle, const Spectrum& saddle_spectrum,
                                      std::span<const double> plus_minimizer) {
    const std::size_t n = saddle.u.size();
    require(saddle_spectrum.size() == n && saddle_spectrum.has_vectors(),
            "make_dividing_surface: saddle spectrum needs eigenvectors");
    require(saddle_spectrum.negative_count() == 1,
            "make_dividing_surface: saddle must have exactly one negative eigenvalue");
    DividingSurface s{saddle.u, saddle_spectrum.eigenvectors.front()};
    const double d_plus = s.distance(plus_minimizer);
    require(d_plus != 0.0, "make_dividing_surface: + minimizer lies on the surface");
    if (d_plus < 0.0) {
        for (double& v : s.phi1) v = -v;
    }
    return s;
}

void CrossingDetector::feed(double t, double d) {
    ++samples_;
    if (d == 0.0) {
        if (!first_zero_) first_zero_ = t;
        return;
    }
    const int sign = d > 0.0 ? 1 : -1;
    if (last_sign_ != 0 && sign != last_sign_) {
        double tc;
        if (first_zero_) tc = *first_zero_;
        else tc = last_t_ + (t - last_t_) * last_d_ / (last_d_ - d);
        times_.push_back(tc);
        if (sign > 0) ++up_;
        else ++down_;
    }
    last_sign_ = sign;
    last_t_ = t;
    last_d_ = d;
    first_zero_.reset();
}

CrossingRecord count_crossings(std::span<const double> t, std::span<const double> d, std::uint64_t trajectory) {
    require(!t.empty(), "count_crossings: empty series");
    require(t.size() == d.size(), "count_crossings: time and distance series differ in length");
    CrossingDetector det;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i > 0) require(t[i] > t[i - 1], "count_crossings: sample times must increase");
        det.feed(t[i], d[i]);
    }
    CrossingRecord r;
    r.times = det.times();
    r.up = det.up();
    r.down = det.down();
    r.trajectory = trajectory;
    r.horizon = t.back() - t.front();
    return r;
}

void CrossingCounter::observe(const SystemParams&, const LatticeState& state) {
    detector_.feed(state.t, surface_->distance(state.u));
}

CrossingRecord CrossingCounter::record(double horizon) const {
    CrossingRecord r;
    r.times = detector_.times();
    r.up = detector_.up();
    r.down = detector_.down();
    r.trajectory = trajectory_;
    r.horizon = horizon;
    return r;
}

EmpiricalRate empirical_rate(std::span<const CrossingRecord> records, double horizon) {
    require(!records.empty(), "empirical_rate: no records");
    require(horizon > 0.0, "empirical_rate: horizon must be positive");
    const double tol = 1e-9 * horizon;
    double sum = 0.0, sum2 = 0.0, sum_up = 0.0;
    for (const auto& r : records) {
        require(std::abs(r.horizon - horizon) <= tol, "empirical_rate: records must share the horizon");
        const double c = static_cast<double>(r.count());
        sum += c;
        sum2 += c * c;
        sum_up += static_cast<double>(r.up);
    }
    const double m = static_cast<double>(records.size());
    EmpiricalRate out;
    out.records = records.size();
    out.mean_crossings = sum / m;
    out.nu = out.mean_crossings / (2.0 * horizon);
    out.nu_directional = sum_up / m / horizon;
    if (records.size() > 1) {
        const double var = std::max(0.0, (sum2 - m * out.mean_crossings * out.mean_crossings) / (m - 1.0));
        out.nu_stderr = std::sqrt(var / m) / (2.0 * horizon);
    }
    if (sum == 0.0) {
        out.lower_bound = true;
        out.tau = horizon * m;
        out.tau_stderr = 0.0;
    } else {
        out.tau = 1.0 / (2.0 * out.nu);
        out.tau_stderr = out.tau * out.nu_stderr / out.nu;
    }
    return out;
}

namespace {

void check_spectrum(const CriticalData& c, std::size_t n, const char* what) {
    require(c.eigenvalues.size() == n, std::string(what) + ": spectrum must have N eigenvalues");
}

// -1/2 sum_{j >= first} log lambda_j
double log_inv_sqrt_product(std::span<const double> lam, std::size_t first) {
    double acc = 0.0;
    for (std::size_t j = first; j < lam.size(); ++j) acc -= 0.5 * std::log(lam[j]);
    return acc;
}

}  // namespace

double tau_limit(double prefactor, double barrier_height, double beta) {
    return 2.0 * std::numbers::pi * prefactor * std::exp(beta * barrier_height);
}

TheoryRates tst_rate_theory(const CriticalData& saddle, const CriticalData& plus, const CriticalData& minus,
                            double beta, std::size_t n) {
    require(beta > 0.0, "tst_rate_theory: beta must be positive");
    check_spectrum(saddle, n, "tst_rate_theory saddle");
    check_spectrum(plus, n, "tst_rate_theory plus");
    check_spectrum(minus, n, "tst_rate_theory minus");

    TheoryRates r;
    r.lambda_plus = prefactor_lambda(saddle.eigenvalues, plus.eigenvalues);
    r.lambda_minus = prefactor_lambda(saddle.eigenvalues, minus.eigenvalues);
    r.barrier_plus = saddle.energy - plus.energy;
    r.barrier_minus = saddle.energy - minus.energy;
    require(r.barrier_plus >= 0.0 && r.barrier_minus >= 0.0,
            "tst_rate_theory: negative barrier, saddle and minima are mislabeled");

    const double log_ws = log_inv_sqrt_product(saddle.eigenvalues, 1) - beta * saddle.energy;
    const double log_wp = log_inv_sqrt_product(plus.eigenvalues, 0) - beta * plus.energy;
    const double log_wm = log_inv_sqrt_product(minus.eigenvalues, 0) - beta * minus.energy;
    const double hi = std::max(log_wp, log_wm);
    const double log_z = hi + std::log(std::exp(log_wp - hi) + std::exp(log_wm - hi));

    constexpr double two_pi = 2.0 * std::numbers::pi;
    r.nu_canonical = std::exp(log_ws - log_z) / two_pi;
    r.mu_plus = std::exp(log_wp - log_z);
    r.mu_minus = std::exp(log_wm - log_z);
    r.tau_plus_finite = two_pi * std::exp(log_wp - log_ws);
    r.tau_minus_finite = two_pi * std::exp(log_wm - log_ws);
    r.tau_plus_limit = tau_limit(r.lambda_plus, r.barrier_plus, beta);
    r.tau_minus_limit = tau_limit(r.lambda_minus, r.barrier_minus, beta);
    return r;
}

double microcanonical_tau(const CriticalData& saddle, const CriticalData& well, double beta, std::size_t n) {
    require(beta > 0.0 && n >= 2, "microcanonical_tau: need beta > 0 and N >= 2");
    check_spectrum(saddle, n, "microcanonical_tau saddle");
    check_spectrum(well, n, "microcanonical_tau well");
    const double nn = static_cast<double>(n);
    const double xs = beta * saddle.energy / nn;
    const double xw = beta * well.energy / nn;
    if (!(xs < 1.0) || !(xw < 1.0)) {
        throw DomainError("microcanonical_tau: energy shell N/beta lies below the saddle energy (beta E^s / N = " +
                          std::to_string(xs) + ")");
    }
    const double log_spec = log_prefactor_lambda(saddle.eigenvalues, well.eigenvalues);
    const double log_shell = (nn - 1.0) * (std::log1p(-xw) - std::log1p(-xs));
    return 2.0 * std::numbers::pi * std::exp(log_spec + log_shell);
}

double langevin_tau(double gamma, double lambda1_saddle, double prefactor, double barrier_height, double beta) {
    require(gamma >= 0.0, "langevin_tau: gamma must be >= 0");
    require(lambda1_saddle < 0.0, "langevin_tau: saddle eigenvalue must be negative");
    const double a = std::abs(lambda1_saddle);
    const double ratio = (gamma + std::sqrt(gamma * gamma + 4.0 * a)) / std::sqrt(a);
    return std::numbers::pi * ratio * prefactor * std::exp(beta * barrier_height);
}

ErgodicityReport ergodicity_diagnostics(std::span<const ReducedRow> rows, const Potential& potential,
                                        double beta) {
    require(!rows.empty(), "ergodicity_diagnostics: empty dump");
    require(beta > 0.0, "ergodicity_diagnostics: beta must be positive");
    ErgodicityReport rep;
    rep.pbar2_target = 1.0 / beta;
    const std::size_t m = rows.size();
    rep.t.reserve(m);
    rep.running_pbar2.reserve(m);
    rep.hbar.reserve(m);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& r = rows[i];
        const double p2 = r.pbar * r.pbar;
        acc += p2;
        rep.t.push_back(r.t);
        rep.running_pbar2.push_back(acc / static_cast<double>(i + 1));
        rep.hbar.push_back(0.5 * p2 + potential.value(r.ubar));
    }
    rep.pbar2_average = rep.running_pbar2.back();
    const double mean = std::accumulate(rep.hbar.begin(), rep.hbar.end(), 0.0) / static_cast<double>(m);
    double ss = 0.0;
    for (double h : rep.hbar) ss += (h - mean) * (h - mean);
    rep.hbar_mean = mean;
    rep.hbar_std = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
    rep.hbar_drift = rep.hbar.back() - rep.hbar.front();
    rep.hbar_relative_fluctuation = mean != 0.0 ? rep.hbar_std / std::abs(mean) : 0.0;
    return rep;
}

ResidencyCorrelation residency_correlation(const CrossingRecord& record) {
    ResidencyCorrelation out;
    const auto& t = record.times;
    if (t.size() < 10) return out;
    std::vector<double> iv;
    iv.reserve(t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i) iv.push_back(t[i] - t[i - 1]);
    out.intervals = iv.size();

    const std::size_t pairs = iv.size() - 1;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        mx += iv[i];
        my += iv[i + 1];
    }
    mx /= static_cast<double>(pairs);
    my /= static_cast<double>(pairs);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const double dx = iv[i] - mx;
        const double dy = iv[i + 1] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    out.sufficient = true;
    out.correlation = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    out.band = 1.96 / std::sqrt(static_cast<double>(pairs));
    out.significant = std::abs(out.correlation) > out.band;
    return out;
}

nlohmann::json to_json(const RateReport& report) {
    const auto& e = report.empirical;
    const auto& th = report.theory;
    nlohmann::json j;
    j["N"] = report.n;
    j["delta"] = report.delta;
    j["beta"] = report.beta;
    j["empirical"] = {{"nu", e.nu},
                      {"nu_stderr", e.nu_stderr},
                      {"nu_directional", e.nu_directional},
                      {"tau", e.tau},
                      {"tau_stderr", e.tau_stderr},
                      {"mean_crossings", e.mean_crossings},
                      {"records", e.records},
                      {"lower_bound", e.lower_bound}};
    j["theory"] = {{"nu_canonical", th.nu_canonical},
                   {"tau_plus_finiteN", th.tau_plus_finite},
                   {"tau_minus_finiteN", th.tau_minus_finite},
                   {"tau_plus_limit", th.tau_plus_limit},
                   {"tau_minus_limit", th.tau_minus_limit},
                   {"Lambda_plus", th.lambda_plus},
                   {"Lambda_minus", th.lambda_minus},
                   {"DeltaE_plus", th.barrier_plus},
                   {"DeltaE_minus", th.barrier_minus},
                   {"mu_plus", th.mu_plus},
                   {"mu_minus", th.mu_minus}};
    j["tau_micro"] = report.tau_micro ? nlohmann::json(*report.tau_micro) : nlohmann::json(nullptr);
    nlohmann::json lg = nlohmann::json::array();
    for (std::size_t i = 0; i < report.gamma_grid.size() && i < report.tau_langevin.size(); ++i) {
        lg.push_back({{"gamma", report.gamma_grid[i]}, {"tau", report.tau_langevin[i]}});
    }
    j["tau_langevin"] = lg;
    return j;
}

}  // namespace metastab
