// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mpsts/errors.hpp"
#include "mpsts/numeric.hpp"

namespace mpsts {

inline constexpr double kDefaultTailEps = 1e-12;

// Two-parameter photon-number law (compound Poisson / negative binomial):
//
//   P(n) = Gamma(a+n) / (Gamma(a) n!) * (mu/a)^n / (1 + mu/a)^(n+a)
//
// mu is the mean photon number, a the coherence parameter: a = 1 is thermal
// (Bose-Einstein) light, integer a = M+1 arises from M-fold photon
// subtraction from a thermal beam, and a -> infinity approaches Poissonian
// statistics.  Fractional a is supported throughout; it shows up when fitting
// real data.  Variance is mu + mu^2/a, so g2 = 1 + 1/a independent of mu.
struct PndParams {
    double mu = 0.0;
    double a = 1.0;
};

inline void validate(const PndParams& p) {
    require(std::isfinite(p.mu) && p.mu >= 0.0, errc::parameter_domain,
            "mu must be finite and nonnegative, got " + std::to_string(p.mu));
    require(std::isfinite(p.a) && p.a > 0.0, errc::parameter_domain,
            "a must be finite and positive, got " + std::to_string(p.a));
}

// Finite prefix of a photon-number distribution with a certified bound on the
// discarded tail: 1 - sum(probs) <= tail_eps.
struct TruncatedPnd {
    PndParams params;
    int n_max = 0;
    std::vector<double> probs;
    double tail_eps = 0.0;
};

// Beam-splitter / damping channel in dimensionless time gamma*t, coupled to a
// reservoir holding mu_r mean photons (mu_r = 0 is pure loss).
struct LossChannel {
    double gamma_t = 0.0;
    double mu_r = 0.0;

    double transmission() const { return std::exp(-gamma_t); }
    // Reservoir photons mixed in by time t: mu_r * (1 - e^{-gamma t}).
    double reservoir_mean_at_t() const { return mu_r * (-std::expm1(-gamma_t)); }
};

inline void validate(const LossChannel& c) {
    require(std::isfinite(c.gamma_t) && c.gamma_t >= 0.0, errc::parameter_domain,
            "gamma_t must be finite and nonnegative, got " + std::to_string(c.gamma_t));
    require(std::isfinite(c.mu_r) && c.mu_r >= 0.0, errc::parameter_domain,
            "mu_r must be finite and nonnegative, got " + std::to_string(c.mu_r));
}

namespace detail {

// Threshold between the two evaluations of the rising factorial (a)_n.
// Below it, lgamma(a+n) - lgamma(a) is well conditioned (and exact at a = 1);
// far above it the difference cancels to ~a ln(a) eps of noise, so the
// product is folded into log1p terms instead.  Both forms are comfortably
// accurate near the crossover.
inline constexpr double kRisingFactorialSwitch = 32.0;

// log of the rising factorial (a)_n = a (a+1) ... (a+n-1).  Photon numbers
// are small, so the O(n) branch is cheap.
inline double log_rising_factorial(double a, std::int64_t n) {
    if (a <= kRisingFactorialSwitch) {
        return std::lgamma(a + double(n)) - std::lgamma(a);
    }
    KahanSum sum;
    for (std::int64_t k = 1; k < n; ++k) sum.add(std::log1p(double(k) / a));
    return double(n) * std::log(a) + sum.value();
}

}  // namespace detail

inline double pnd_log_pmf(const PndParams& p, std::int64_t n) {
    validate(p);
    require(n >= 0, errc::parameter_domain, "photon number must be nonnegative");
    if (p.mu == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const double nn = double(n);
    const double log_tail = -(nn + p.a) * std::log1p(p.mu / p.a);
    if (p.a <= detail::kRisingFactorialSwitch) {
        return std::lgamma(p.a + nn) - std::lgamma(p.a) - std::lgamma(nn + 1.0) +
               nn * std::log(p.mu / p.a) + log_tail;
    }
    // Large a (the Poisson limit): write (a)_n (mu/a)^n as
    // mu^n prod_{k<n} (1 + k/a), cancelling the big n log a pieces
    // symbolically so only well-conditioned terms remain.
    KahanSum shape;
    for (std::int64_t k = 1; k < n; ++k) shape.add(std::log1p(double(k) / p.a));
    return shape.value() + nn * std::log(p.mu) - std::lgamma(nn + 1.0) + log_tail;
}

inline double pnd_pmf(const PndParams& p, std::int64_t n) { return std::exp(pnd_log_pmf(p, n)); }

// pmf values for n = 0..n_max via the stable ratio recurrence
// P(n+1)/P(n) = (a+n)/(n+1) * mu/(mu+a).
inline std::vector<double> pnd_prefix(const PndParams& p, int n_max) {
    validate(p);
    require(n_max >= 0, errc::parameter_domain, "n_max must be nonnegative");
    std::vector<double> probs(std::size_t(n_max) + 1, 0.0);
    if (p.mu == 0.0) {
        probs[0] = 1.0;
        return probs;
    }
    const double x = p.mu / (p.mu + p.a);
    double value = std::exp(-p.a * std::log1p(p.mu / p.a));
    for (int n = 0; n <= n_max; ++n) {
        probs[std::size_t(n)] = value;
        value *= (p.a + double(n)) / (double(n) + 1.0) * x;
    }
    return probs;
}

// Smallest prefix whose mass reaches 1 - tail_eps.  The floor on tail_eps is
// a precision limit, not a tuning choice: the prefix mass carries summation
// roundoff of a few 1e-16, so a certificate tighter than ~45 eps of unit mass
// cannot be distinguished from that noise in double precision.
inline constexpr double kMinCertifiableTailEps = 1e-14;

inline TruncatedPnd pnd_truncate(const PndParams& p, double tail_eps = kDefaultTailEps) {
    validate(p);
    require(std::isfinite(tail_eps) && tail_eps >= kMinCertifiableTailEps && tail_eps < 1.0,
            errc::parameter_domain, "tail_eps must lie in [1e-14, 1); tighter bounds are below "
                                    "double-precision summation noise");
    TruncatedPnd out;
    out.params = p;
    out.tail_eps = tail_eps;
    if (p.mu == 0.0) {
        out.n_max = 0;
        out.probs = {1.0};
        return out;
    }
    const double x = p.mu / (p.mu + p.a);
    const double target = 1.0 - tail_eps;
    double value = std::exp(-p.a * std::log1p(p.mu / p.a));
    KahanSum mass;
    const std::int64_t hard_cap = 1 << 26;
    for (std::int64_t n = 0;; ++n) {
        out.probs.push_back(value);
        mass.add(value);
        if (mass.value() >= target) {
            out.n_max = int(n);
            break;
        }
        require(n < hard_cap, errc::parameter_domain,
                "tail_eps too small to certify at this mu, a");
        value *= (p.a + double(n)) / (double(n) + 1.0) * x;
        // Once terms underflow, the accumulated mass can never grow further.
        require(value > 0.0, errc::parameter_domain,
                "tail_eps too small to certify at this mu, a");
    }
    return out;
}

struct PndMoments {
    double mean = 0.0;
    double variance = 0.0;
    std::optional<double> g2;  // empty at mu = 0, where g2 is undefined
};

inline PndMoments pnd_moments(const PndParams& p) {
    validate(p);
    PndMoments m;
    m.mean = p.mu;
    m.variance = p.mu + p.mu * p.mu / p.a;
    if (p.mu > 0.0) m.g2 = 1.0 + 1.0 / p.a;
    return m;
}

// State after subtracting m photons one by one from a thermal beam of mean
// mu0, built by explicit conditioning: each step reweights P(n) by (n+1) and
// renormalizes.  The result matches the closed form (mu0*(m+1), a = m+1); the
// step-by-step construction is kept as the reference path.
inline TruncatedPnd subtract_photons(double mu0, int m_subtract,
                                     double tail_eps = kDefaultTailEps) {
    require(std::isfinite(mu0) && mu0 >= 0.0, errc::parameter_domain,
            "mu0 must be finite and nonnegative");
    require(m_subtract >= 0, errc::parameter_domain, "subtraction count must be nonnegative");
    require(std::isfinite(tail_eps) && tail_eps > 0.0 && tail_eps < 1.0, errc::parameter_domain,
            "tail_eps must lie in (0, 1)");
    require(mu0 > 0.0 || m_subtract == 0, errc::parameter_domain,
            "cannot subtract a photon from vacuum (zero trace after conditioning)");
    TruncatedPnd out;
    out.params = PndParams{mu0 * double(m_subtract + 1), double(m_subtract + 1)};
    out.tail_eps = tail_eps;
    if (mu0 == 0.0) {
        out.n_max = 0;
        out.probs = {1.0};
        return out;
    }
    // Generous thermal support: subtraction reweights the tail by a factor
    // that grows like n^m, so size the initial window from the final state.
    const double mu_final = out.params.mu;
    const double sigma_final = std::sqrt(mu_final + mu_final * mu_final / double(m_subtract + 1));
    const std::size_t support =
        std::size_t(std::ceil(mu_final + 30.0 * sigma_final)) + std::size_t(m_subtract) + 16;
    std::vector<double> probs(support + 1);
    const double ratio = mu0 / (1.0 + mu0);
    double value = 1.0 / (1.0 + mu0);
    for (auto& e : probs) {
        e = value;
        value *= ratio;
    }
    for (int step = 0; step < m_subtract; ++step) {
        KahanSum trace;
        for (std::size_t n = 0; n + 1 < probs.size(); ++n) {
            probs[n] = double(n + 1) * probs[n + 1];
            trace.add(probs[n]);
        }
        probs.pop_back();
        const double t = trace.value();
        require(t > 0.0, errc::parameter_domain, "zero trace while conditioning");
        for (auto& e : probs) e /= t;
    }
    KahanSum mass;
    std::size_t cut = probs.size() - 1;
    for (std::size_t n = 0; n < probs.size(); ++n) {
        mass.add(probs[n]);
        if (mass.value() >= 1.0 - tail_eps) {
            cut = n;
            break;
        }
    }
    probs.resize(cut + 1);
    out.n_max = int(cut);
    out.probs = std::move(probs);
    return out;
}

// Terminating Gauss hypergeometric series 2F1(p, -n; c; x), summed directly.
// c at a nonpositive integer above -n hits a pole of the Pochhammer ratio.
inline double gauss_2f1_terminating(double p, int n, double c, double x) {
    require(n >= 0, errc::parameter_domain, "series order must be nonnegative");
    require(std::isfinite(p) && std::isfinite(c) && std::isfinite(x), errc::parameter_domain,
            "2F1 arguments must be finite");
    require(!(c <= 0.0 && c == std::floor(c) && c > -double(n)), errc::parameter_domain,
            "2F1 lower parameter hits a pole before the series terminates");
    double term = 1.0;
    KahanSum sum;
    sum.add(1.0);
    for (int k = 0; k < n; ++k) {
        term *= (p + double(k)) * (double(k) - double(n)) / ((c + double(k)) * (double(k) + 1.0)) * x;
        sum.add(term);
        if (term == 0.0) break;
    }
    return sum.value();
}

// Photon-number law after damped evolution against a thermal reservoir:
//
//   P_t(n) = (1+mu_T)^(a-1) * s^n / (1+s)^(n+a) * 2F1(1-a, -n; 1; x') ...
//
// evaluated here in the equivalent all-positive form obtained from the Pfaff
// transformation,
//
//   2F1(1-a, -n; 1; x) = sum_k (a)_k/k! C(n,k) x^k (1-x)^(n-k),
//
// with s = theta*T + mu_T, x = theta*T / ((1+mu_T) s), theta = mu/a,
// T = e^{-gamma t}, mu_T = mu_r (1 - T).  The direct series cancels
// catastrophically for fractional a at large n; this form has only positive
// terms and is summed in log space.  At mu_r = 0 it collapses to the same
// law with mu replaced by mu*T.
inline double damped_log_pmf(const PndParams& p, const LossChannel& ch, std::int64_t n) {
    validate(p);
    validate(ch);
    require(n >= 0, errc::parameter_domain, "photon number must be nonnegative");
    const double transmission = ch.transmission();
    const double mu_t = ch.reservoir_mean_at_t();
    const double theta_t = (p.mu / p.a) * transmission;
    const double s = theta_t + mu_t;
    if (s == 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const double nn = double(n);
    const double log_prefactor =
        (p.a - 1.0) * std::log1p(mu_t) + nn * std::log(s) - (nn + p.a) * std::log1p(s);
    double x = theta_t / ((1.0 + mu_t) * s);
    x = std::min(x, 1.0);
    double log_f;
    if (n == 0 || x == 0.0) {
        log_f = 0.0;
    } else if (x == 1.0) {  // only the k = n term survives
        log_f = detail::log_rising_factorial(p.a, n) - std::lgamma(nn + 1.0);
    } else {
        const double lx = std::log(x);
        const double l1mx = std::log1p(-x);
        std::vector<double> terms(std::size_t(n) + 1);
        double log_poch = 0.0;  // log (a)_k, grown one factor per iteration
        for (std::int64_t k = 0; k <= n; ++k) {
            const double kk = double(k);
            terms[std::size_t(k)] = log_poch - std::lgamma(kk + 1.0) + log_binomial(n, k) +
                                    kk * lx + (nn - kk) * l1mx;
            log_poch += std::log(p.a + kk);
        }
        log_f = log_sum_exp(terms);
    }
    return log_prefactor + log_f;
}

inline double damped_pmf(const PndParams& p, const LossChannel& ch, std::int64_t n) {
    return std::exp(damped_log_pmf(p, ch, n));
}

// Binomial thinning of an explicit pmf: each photon survives independently
// with the given transmission.  O(N^2); meant for truncated supports.
inline TruncatedPnd apply_binomial_loss(const TruncatedPnd& dist, double transmission) {
    require(std::isfinite(transmission) && transmission >= 0.0 && transmission <= 1.0,
            errc::parameter_domain, "transmission must lie in [0, 1]");
    require(!dist.probs.empty(), errc::parameter_domain, "empty distribution");
    TruncatedPnd out;
    out.params = PndParams{dist.params.mu * transmission, dist.params.a};
    out.n_max = dist.n_max;
    out.tail_eps = dist.tail_eps;
    const std::size_t size = dist.probs.size();
    out.probs.assign(size, 0.0);
    if (transmission == 1.0) {
        out.probs = dist.probs;
        return out;
    }
    if (transmission == 0.0) {
        KahanSum total;
        for (double v : dist.probs) total.add(v);
        out.probs[0] = total.value();
        return out;
    }
    std::vector<double> log_fact(size + 1, 0.0);
    for (std::size_t k = 1; k <= size; ++k) log_fact[k] = std::lgamma(double(k) + 1.0);
    const double log_t = std::log(transmission);
    const double log_r = std::log1p(-transmission);
    for (std::size_t m = 0; m < size; ++m) {
        KahanSum acc;
        for (std::size_t n = m; n < size; ++n) {
            const double log_w = log_fact[n] - log_fact[m] - log_fact[n - m] +
                                 double(m) * log_t + double(n - m) * log_r;
            if (log_w > -745.0) acc.add(std::exp(log_w) * dist.probs[n]);
        }
        out.probs[m] = acc.value();
    }
    return out;
}

}  // namespace mpsts
