// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mpsts/errors.hpp"
#include "mpsts/numeric.hpp"
#include "mpsts/pnd.hpp"

namespace mpsts {

// Homodyne detection chain with quantum efficiency eta.  Inefficiency acts as
// a Gaussian convolution on the sqrt(eta)-rescaled quadrature; sigma_c_sq is
// the variance of that convolution kernel in unscaled units.
struct DetectorModel {
    double eta = 1.0;

    double sigma_c_sq() const { return (1.0 - eta) / (2.0 * eta); }
    // Variance of the additive noise after rescaling by sqrt(eta):
    // eta * sigma_c_sq = (1 - eta)/2.
    double smear_variance() const { return 0.5 * (1.0 - eta); }
};

inline void validate(const DetectorModel& d) {
    require(std::isfinite(d.eta) && d.eta > 0.0 && d.eta <= 1.0, errc::parameter_domain,
            "eta must lie in (0, 1]");
}

struct MomentSummary {
    double m2 = 0.0;        // second central moment
    double m4 = 0.0;        // fourth central moment
    double kurtosis = 0.0;  // m4 / m2^2
    double beta2 = 0.0;     // excess kurtosis, m4 / m2^2 - 3
};

// Harmonic-oscillator eigenfunction phi_n(q) in the convention where the
// vacuum quadrature variance is 1/2: phi_0 = pi^{-1/4} e^{-q^2/2}, and
// phi_{n+1} = q sqrt(2/(n+1)) phi_n - sqrt(n/(n+1)) phi_{n-1}.  Upward
// recurrence follows the dominant solution and is stable for all q.
inline double oscillator_eigenfunction(int n, double q) {
    require(n >= 0, errc::parameter_domain, "eigenfunction index must be nonnegative");
    require(std::isfinite(q), errc::parameter_domain, "q must be finite");
    const double phi0 = 0.7511255444649425 * std::exp(-0.5 * q * q);  // pi^{-1/4} e^{-q^2/2}
    if (n == 0) return phi0;
    double prev = phi0;
    double cur = std::sqrt(2.0) * q * phi0;
    for (int k = 1; k < n; ++k) {
        const double next =
            q * std::sqrt(2.0 / double(k + 1)) * cur - std::sqrt(double(k) / double(k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

// Quadrature density of a diagonal (Fock-basis) state:
// P(q) = sum_n p(n) phi_n(q)^2, evaluated with precomputed recurrence
// coefficients so a single call costs O(n_max) flops and no allocation.
class QuadratureModel {
  public:
    explicit QuadratureModel(TruncatedPnd dist) : dist_(std::move(dist)) {
        require(!dist_.probs.empty(), errc::parameter_domain, "empty distribution");
        const std::size_t n = dist_.probs.size();
        coeff_q_.resize(n);
        coeff_prev_.resize(n);
        for (std::size_t k = 1; k < n; ++k) {
            coeff_q_[k] = std::sqrt(2.0 / double(k));
            coeff_prev_[k] = std::sqrt(double(k - 1) / double(k));
        }
    }

    QuadratureModel(const PndParams& params, double tail_eps = kDefaultTailEps)
        : QuadratureModel(pnd_truncate(params, tail_eps)) {}

    double pdf(double q) const {
        const double phi0 = 0.7511255444649425 * std::exp(-0.5 * q * q);
        double prev = 0.0;
        double cur = phi0;
        double sum = dist_.probs[0] * phi0 * phi0;
        for (std::size_t k = 1; k < dist_.probs.size(); ++k) {
            const double next = q * coeff_q_[k] * cur - coeff_prev_[k] * prev;
            prev = cur;
            cur = next;
            sum += dist_.probs[k] * next * next;
        }
        return sum;
    }

    const TruncatedPnd& distribution() const { return dist_; }

    // Half-width covering the distribution out to n_sigmas standard
    // deviations of q (variance mu + 1/2), plus padding for the tails.
    double half_width(double n_sigmas = 8.0) const {
        return n_sigmas * std::sqrt(dist_.params.mu + 0.5) + 4.0;
    }

  private:
    TruncatedPnd dist_;
    std::vector<double> coeff_q_, coeff_prev_;
};

inline double quadrature_pdf(const PndParams& p, double q, double tail_eps = kDefaultTailEps) {
    require(std::isfinite(q), errc::parameter_domain, "q must be finite");
    return QuadratureModel(p, tail_eps).pdf(q);
}

// Analytic m2, m4 and excess kurtosis of the ideal quadrature distribution:
// m2 = mu + 1/2 and beta2 = -6 (mu/(2mu+1))^2 (a-1)/a.
inline MomentSummary ideal_moments(const PndParams& p) {
    validate(p);
    MomentSummary s;
    s.m2 = p.mu + 0.5;
    const double r = 2.0 * p.mu / (2.0 * p.mu + 1.0);
    s.beta2 = -1.5 * r * r * (p.a - 1.0) / p.a;
    s.kurtosis = s.beta2 + 3.0;
    s.m4 = s.kurtosis * s.m2 * s.m2;
    return s;
}

// Measured-quadrature density for an inefficient detector:
// y = sqrt(eta) q + xi with xi ~ N(0, (1-eta)/2), evaluated by direct
// convolution.  Physically identical to perfect detection of the state after
// a loss channel with transmission eta.
class SmearedQuadratureModel {
  public:
    SmearedQuadratureModel(const PndParams& params, const DetectorModel& det,
                           double tail_eps = kDefaultTailEps)
        : base_(params, tail_eps), det_(det) {
        validate(det);
    }

    double pdf(double y) const {
        require(std::isfinite(y), errc::parameter_domain, "q must be finite");
        if (det_.eta == 1.0) return base_.pdf(y);
        const double scale = std::sqrt(det_.eta);
        const double noise_var = det_.smear_variance();
        const double noise_sd = std::sqrt(noise_var);
        const double norm = 1.0 / std::sqrt(2.0 * 3.141592653589793 * noise_var);
        // Integrate only where both the state density and the kernel live.
        const double base_w = base_.half_width();
        double lo = std::max(-base_w, (y - 10.0 * noise_sd) / scale);
        double hi = std::min(base_w, (y + 10.0 * noise_sd) / scale);
        if (lo >= hi) return 0.0;
        IntegrateOptions opt;
        opt.abs_tol = 1e-13;
        opt.rel_tol = 1e-12;
        return integrate(
            [&](double q) {
                const double d = y - scale * q;
                return base_.pdf(q) * norm * std::exp(-0.5 * d * d / noise_var);
            },
            lo, hi, opt);
    }

    const QuadratureModel& base() const { return base_; }

  private:
    QuadratureModel base_;
    DetectorModel det_;
};

inline double detector_smear_pdf(const PndParams& p, const DetectorModel& det, double q,
                                 double tail_eps = kDefaultTailEps) {
    return SmearedQuadratureModel(p, det, tail_eps).pdf(q);
}

// Excess kurtosis of the underlying state from raw measured moments,
// removing the detector convolution:
// beta2 = (m4 - 3 m2^2) / (m2 - eta sigma_c^2)^2.
inline double corrected_kurtosis(double m2_raw, double m4_raw, const DetectorModel& det) {
    validate(det);
    require(std::isfinite(m2_raw) && std::isfinite(m4_raw), errc::parameter_domain,
            "moments must be finite");
    const double floor = det.eta * det.sigma_c_sq();
    require(m2_raw > floor, errc::unphysical_data,
            "second moment at or below the detection noise floor (1-eta)/2");
    const double denom = m2_raw - floor;
    return (m4_raw - 3.0 * m2_raw * m2_raw) / (denom * denom);
}

inline MomentSummary sample_moments(std::span<const double> samples) {
    require(samples.size() >= 4, errc::insufficient_data,
            "need at least 4 samples for fourth moments");
    KahanSum mean_acc;
    for (double v : samples) {
        require(std::isfinite(v), errc::unphysical_data, "samples must be finite");
        mean_acc.add(v);
    }
    const double mean = mean_acc.value() / double(samples.size());
    KahanSum m2_acc, m4_acc;
    for (double v : samples) {
        const double d = v - mean;
        const double d2 = d * d;
        m2_acc.add(d2);
        m4_acc.add(d2 * d2);
    }
    MomentSummary s;
    s.m2 = m2_acc.value() / double(samples.size());
    s.m4 = m4_acc.value() / double(samples.size());
    require(s.m2 > 0.0, errc::unphysical_data, "zero sample variance");
    s.kurtosis = s.m4 / (s.m2 * s.m2);
    s.beta2 = s.kurtosis - 3.0;
    return s;
}

}  // namespace mpsts
