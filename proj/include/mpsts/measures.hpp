// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mpsts/errors.hpp"
#include "mpsts/numeric.hpp"
#include "mpsts/pnd.hpp"

namespace mpsts {

// All four distances compare the state against the thermal reference with the
// SAME mean photon number, i.e. params (mu, a) versus (mu, 1).  Both pmfs are
// evaluated on their shared support prefix (the longer of the two certified
// truncations) so no mass mismatch biases the sums.

namespace detail {

struct SupportPair {
    std::vector<double> state;    // P_{mu,a}
    std::vector<double> thermal;  // P_{mu,1}
};

inline SupportPair shared_support(const PndParams& p, double tail_eps) {
    const int n_state = pnd_truncate(p, tail_eps).n_max;
    const int n_thermal = pnd_truncate(PndParams{p.mu, 1.0}, tail_eps).n_max;
    const int n = std::max(n_state, n_thermal);
    return SupportPair{pnd_prefix(p, n), pnd_prefix(PndParams{p.mu, 1.0}, n)};
}

}  // namespace detail

// Hilbert-Schmidt distance between the state and its thermal reference,
// normalized by the purity of the state itself:
//   delta_HS = 1/2 * (1 + (sum P_th^2 - 2 sum P_th P) / sum P^2).
inline double delta_hs(const PndParams& p, double tail_eps = kDefaultTailEps) {
    validate(p);
    if (p.mu == 0.0) return 0.0;
    const auto sp = detail::shared_support(p, tail_eps);
    KahanSum s_tt, s_ts, s_ss;
    for (std::size_t n = 0; n < sp.state.size(); ++n) {
        s_tt.add(sp.thermal[n] * sp.thermal[n]);
        s_ts.add(sp.thermal[n] * sp.state[n]);
        s_ss.add(sp.state[n] * sp.state[n]);
    }
    return 0.5 * (1.0 + (s_tt.value() - 2.0 * s_ts.value()) / s_ss.value());
}

// Relative entropy to the thermal reference.  The thermal entropy has the
// closed form (mu+1) ln(mu+1) - mu ln(mu), so
//   delta_RE = (mu+1) ln(mu+1) - mu ln(mu) + sum P ln P.
inline double delta_re(const PndParams& p, double tail_eps = kDefaultTailEps) {
    validate(p);
    if (p.mu == 0.0) return 0.0;
    const auto probs = pnd_truncate(p, tail_eps).probs;
    KahanSum plogp;
    for (double v : probs) {
        if (v > 0.0) plogp.add(v * std::log(v));
    }
    const double thermal_entropy = (p.mu + 1.0) * std::log1p(p.mu) - p.mu * std::log(p.mu);
    return thermal_entropy + plogp.value();
}

// Bhattacharyya-type fidelity of two diagonal states: (sum sqrt(p q))^2.
// The shorter pmf is zero-padded, so the sum runs over the common prefix.
inline double fidelity_diagonal(const std::vector<double>& p, const std::vector<double>& q) {
    require(!p.empty() && !q.empty(), errc::parameter_domain, "empty distribution");
    const std::size_t n = std::min(p.size(), q.size());
    KahanSum s;
    for (std::size_t i = 0; i < n; ++i) {
        require(p[i] >= 0.0 && q[i] >= 0.0, errc::parameter_domain,
                "probabilities must be nonnegative");
        s.add(std::sqrt(p[i] * q[i]));
    }
    const double root = std::min(s.value(), 1.0);
    return root * root;
}

// delta_F = 1 - sqrt(F) against the thermal reference.
inline double delta_f(const PndParams& p, double tail_eps = kDefaultTailEps) {
    validate(p);
    if (p.mu == 0.0) return 0.0;
    const auto sp = detail::shared_support(p, tail_eps);
    return 1.0 - std::sqrt(fidelity_diagonal(sp.thermal, sp.state));
}

// Kurtosis-based measure: delta_K = (2/3) |beta2| with the quadrature excess
// kurtosis beta2 = -6 (mu/(2mu+1))^2 (a-1)/a.  Closed form:
//   delta_K = (2mu/(2mu+1))^2 |a-1|/a.
inline double delta_k(const PndParams& p) {
    validate(p);
    const double r = 2.0 * p.mu / (2.0 * p.mu + 1.0);
    return r * r * std::abs(p.a - 1.0) / p.a;
}

struct NonGaussianity {
    double hs = 0.0;
    double re = 0.0;
    double f = 0.0;
    double k = 0.0;
};

inline NonGaussianity compute_measures(const PndParams& p, double tail_eps = kDefaultTailEps) {
    return NonGaussianity{delta_hs(p, tail_eps), delta_re(p, tail_eps), delta_f(p, tail_eps),
                          delta_k(p)};
}

struct SweepRow {
    double a = 0.0;
    double mu = 0.0;
    NonGaussianity measures;
    std::string error;  // nonempty if this cell failed; measures are NaN then
};

// Cartesian sweep over (a, mu).  Failed cells are reported, not fatal.
inline std::vector<SweepRow> sweep_measures(const std::vector<double>& a_values,
                                            const std::vector<double>& mu_values,
                                            double tail_eps = kDefaultTailEps) {
    require(!a_values.empty() && !mu_values.empty(), errc::parameter_domain,
            "sweep grids must be nonempty");
    std::vector<SweepRow> rows;
    rows.reserve(a_values.size() * mu_values.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double a : a_values) {
        for (double mu : mu_values) {
            SweepRow row;
            row.a = a;
            row.mu = mu;
            try {
                row.measures = compute_measures(PndParams{mu, a}, tail_eps);
            } catch (const error& e) {
                row.measures = NonGaussianity{nan, nan, nan, nan};
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

struct MeasureErrors {
    double hs = 0.0;
    double re = 0.0;
    double f = 0.0;
    double k = 0.0;
};

namespace detail {

template <class F>
std::array<double, 2> central_gradient(F&& f, const PndParams& p) {
    const double h_mu = 1e-5 * std::max(p.mu, 1e-3);
    const double h_a = 1e-5 * std::max(p.a, 1e-3);
    const double d_mu =
        (f(PndParams{p.mu + h_mu, p.a}) - f(PndParams{std::max(p.mu - h_mu, 0.0), p.a})) /
        (h_mu + std::min(h_mu, p.mu));
    const double d_a =
        (f(PndParams{p.mu, p.a + h_a}) - f(PndParams{p.mu, p.a - h_a})) / (2.0 * h_a);
    return {d_mu, d_a};
}

inline double quadratic_form(const std::array<double, 2>& g, const Mat2& cov) {
    return g[0] * (cov.m[0][0] * g[0] + cov.m[0][1] * g[1]) +
           g[1] * (cov.m[1][0] * g[0] + cov.m[1][1] * g[1]);
}

}  // namespace detail

// First-order propagation of the (mu, a) covariance onto each measure.
// delta_K uses its analytic gradient; the others use central differences.
inline MeasureErrors measure_error_propagation(const PndParams& p, const Mat2& covariance,
                                               double tail_eps = kDefaultTailEps) {
    validate(p);
    require(covariance.symmetric_psd(1e-7), errc::parameter_domain,
            "covariance must be symmetric positive semidefinite");
    const auto g_hs =
        detail::central_gradient([&](const PndParams& q) { return delta_hs(q, tail_eps); }, p);
    const auto g_re =
        detail::central_gradient([&](const PndParams& q) { return delta_re(q, tail_eps); }, p);
    const auto g_f =
        detail::central_gradient([&](const PndParams& q) { return delta_f(q, tail_eps); }, p);
    const double r = 2.0 * p.mu / (2.0 * p.mu + 1.0);
    const double sign = p.a >= 1.0 ? 1.0 : -1.0;
    const std::array<double, 2> g_k{
        sign * 8.0 * p.mu / std::pow(2.0 * p.mu + 1.0, 3.0) * (p.a - 1.0) / p.a,
        sign * r * r / (p.a * p.a)};
    MeasureErrors e;
    e.hs = std::sqrt(std::max(detail::quadratic_form(g_hs, covariance), 0.0));
    e.re = std::sqrt(std::max(detail::quadratic_form(g_re, covariance), 0.0));
    e.f = std::sqrt(std::max(detail::quadratic_form(g_f, covariance), 0.0));
    e.k = std::sqrt(std::max(detail::quadratic_form(g_k, covariance), 0.0));
    return e;
}

}  // namespace mpsts
