// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "mpsts/errors.hpp"
#include "mpsts/pnd.hpp"

namespace mpsts {

namespace detail {

// Accumulates sum_n w_n * W_n at one phase-space point, where
// W_n = (-1)^n / pi * e^{-s} L_n(2s), s = q^2 + p^2.  The recurrence runs on
// the pre-damped values l_k = e^{-s} L_k(2s), which stay bounded where the
// result is representable; for s beyond the double exponent range the state
// contributes nothing at double precision and the sum is exactly zero.
template <class Weight>
double wigner_sum(double s, int n_max, Weight&& weight) {
    constexpr double inv_pi = 0.3183098861837907;
    const double damp = std::exp(-s);
    if (damp == 0.0) return 0.0;
    double l_prev = damp;  // k = 0
    double acc = weight(0) * l_prev;
    if (n_max == 0) return inv_pi * acc;
    double l_cur = (1.0 - 2.0 * s) * damp;  // k = 1
    acc -= weight(1) * l_cur;
    double sign = 1.0;
    for (int k = 1; k < n_max; ++k) {
        const double l_next =
            ((2.0 * double(k) + 1.0 - 2.0 * s) * l_cur - double(k) * l_prev) / double(k + 1);
        l_prev = l_cur;
        l_cur = l_next;
        acc += sign * weight(k + 1) * l_cur;
        sign = -sign;
    }
    return inv_pi * acc;
}

}  // namespace detail

// Wigner function of the Fock state |n> at radius-squared s = q^2 + p^2.
inline double wigner_fock(int n, double q, double p) {
    require(n >= 0, errc::parameter_domain, "Fock index must be nonnegative");
    require(std::isfinite(q) && std::isfinite(p), errc::parameter_domain,
            "phase-space point must be finite");
    const double s = q * q + p * p;
    return detail::wigner_sum(s, n, [n](int k) { return k == n ? 1.0 : 0.0; });
}

// Wigner function of a photon-number-diagonal state at (q, p).
inline double wigner_point(const TruncatedPnd& dist, double q, double p) {
    require(!dist.probs.empty(), errc::parameter_domain, "empty distribution");
    require(std::isfinite(q) && std::isfinite(p), errc::parameter_domain,
            "phase-space point must be finite");
    const double s = q * q + p * p;
    return detail::wigner_sum(s, dist.n_max, [&](int k) { return dist.probs[std::size_t(k)]; });
}

struct WignerGrid {
    std::vector<double> q_axis;
    std::vector<double> p_axis;
    std::vector<double> values;  // row-major: values[iq * p_axis.size() + ip]

    double at(std::size_t iq, std::size_t ip) const { return values[iq * p_axis.size() + ip]; }
};

struct WignerGridSpec {
    int points_q = 201;
    int points_p = 201;
    double half_width = 0.0;  // 0 selects 6 sqrt(mu + 1/2) + 2 automatically
};

inline WignerGrid wigner_mpsts(const PndParams& p, WignerGridSpec spec = {},
                               double tail_eps = kDefaultTailEps) {
    validate(p);
    require(spec.points_q >= 2 && spec.points_p >= 2, errc::parameter_domain,
            "grid needs at least 2 points per axis");
    double w = spec.half_width;
    if (w == 0.0) w = 6.0 * std::sqrt(p.mu + 0.5) + 2.0;
    require(std::isfinite(w) && w > 0.0, errc::parameter_domain, "half-width must be positive");
    const TruncatedPnd dist = pnd_truncate(p, tail_eps);
    WignerGrid grid;
    grid.q_axis.resize(std::size_t(spec.points_q));
    grid.p_axis.resize(std::size_t(spec.points_p));
    for (int i = 0; i < spec.points_q; ++i) {
        grid.q_axis[std::size_t(i)] = -w + 2.0 * w * double(i) / double(spec.points_q - 1);
    }
    for (int i = 0; i < spec.points_p; ++i) {
        grid.p_axis[std::size_t(i)] = -w + 2.0 * w * double(i) / double(spec.points_p - 1);
    }
    grid.values.resize(grid.q_axis.size() * grid.p_axis.size());
    for (std::size_t iq = 0; iq < grid.q_axis.size(); ++iq) {
        for (std::size_t ip = 0; ip < grid.p_axis.size(); ++ip) {
            grid.values[iq * grid.p_axis.size() + ip] =
                wigner_point(dist, grid.q_axis[iq], grid.p_axis[ip]);
        }
    }
    return grid;
}

}  // namespace mpsts
