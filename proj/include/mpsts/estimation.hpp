// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "mpsts/errors.hpp"
#include "mpsts/numeric.hpp"
#include "mpsts/pnd.hpp"
#include "mpsts/quadrature.hpp"
#include "mpsts/rng.hpp"

namespace mpsts {

// Density floor keeping single far-tail samples from driving the
// log-likelihood to -inf.
inline constexpr double kDensityFloor = 1e-300;

inline double log_likelihood(const QuadratureModel& model, std::span<const double> samples) {
    require(!samples.empty(), errc::insufficient_data, "log-likelihood of an empty sample");
    KahanSum acc;
    for (double q : samples) {
        require(std::isfinite(q), errc::unphysical_data, "samples must be finite");
        acc.add(std::log(std::max(model.pdf(q), kDensityFloor)));
    }
    return acc.value();
}

inline double log_likelihood(const PndParams& p, std::span<const double> samples,
                             double tail_eps = kDefaultTailEps) {
    return log_likelihood(QuadratureModel(p, tail_eps), samples);
}

struct MLEstimate {
    double mu_hat = 0.0;
    double a_hat = 0.0;
    double loglik = 0.0;
    Mat2 covariance;                       // (mu, a) covariance from inverse Fisher
    std::array<double, 2> mu_ci{0.0, 0.0};  // 95% Wald interval
    std::array<double, 2> a_ci{0.0, 0.0};
    double eta = 1.0;  // efficiency already divided out of mu_hat (1 = none)
    int evaluations = 0;
    bool converged = false;
};

// Expected per-sample information about (mu, a), scaled by sample_count:
//   I_jk = N * integral (d_j P)(d_k P) / P dq,
// with central differences at relative step 1e-5.
inline Mat2 fisher_information(const PndParams& p, double sample_count,
                               double tail_eps = kDefaultTailEps) {
    validate(p);
    require(p.mu > 0.0, errc::parameter_domain, "Fisher information needs mu > 0");
    require(std::isfinite(sample_count) && sample_count >= 1.0, errc::parameter_domain,
            "sample_count must be at least 1");
    const double h_mu = 1e-5 * p.mu;
    const double h_a = 1e-5 * p.a;
    const QuadratureModel base(p, tail_eps);
    const QuadratureModel mu_hi(PndParams{p.mu + h_mu, p.a}, tail_eps);
    const QuadratureModel mu_lo(PndParams{p.mu - h_mu, p.a}, tail_eps);
    const QuadratureModel a_hi(PndParams{p.mu, p.a + h_a}, tail_eps);
    const QuadratureModel a_lo(PndParams{p.mu, p.a - h_a}, tail_eps);
    const double w = base.half_width();
    const auto integrals = integrate3(
        [&](double q) -> std::array<double, 3> {
            const double density = base.pdf(q);
            if (density < 1e-280) return {0.0, 0.0, 0.0};
            const double d_mu = (mu_hi.pdf(q) - mu_lo.pdf(q)) / (2.0 * h_mu);
            const double d_a = (a_hi.pdf(q) - a_lo.pdf(q)) / (2.0 * h_a);
            return {d_mu * d_mu / density, d_mu * d_a / density, d_a * d_a / density};
        },
        -w, w);
    Mat2 info;
    info.m[0][0] = sample_count * integrals[0];
    info.m[0][1] = info.m[1][0] = sample_count * integrals[1];
    info.m[1][1] = sample_count * integrals[2];
    require(info.m[0][0] > 0.0 && info.m[1][1] > 0.0 && info.det() > 0.0,
            errc::estimation_failure, "Fisher information matrix is not positive definite");
    return info;
}

namespace detail {

inline std::array<double, 2> wald_interval(double center, double variance, double z = 1.96) {
    const double half = z * std::sqrt(std::max(variance, 0.0));
    return {center - half, center + half};
}

// Moment-based starting point: m2 = mu + 1/2 inverts to mu, and the excess
// kurtosis -6 (mu/(2mu+1))^2 (a-1)/a inverts to a, clamped to a sane box.
inline PndParams moment_start(std::span<const double> samples) {
    const MomentSummary mom = sample_moments(samples);
    double mu0 = mom.m2 - 0.5;
    if (!(mu0 > 1e-4)) mu0 = 0.1;
    const double r = 2.0 * mu0 / (2.0 * mu0 + 1.0);
    const double denom = 1.0 + mom.beta2 / (1.5 * r * r);
    double a0 = denom > 1e-3 ? 1.0 / denom : 50.0;
    a0 = std::clamp(a0, 0.2, 50.0);
    return PndParams{mu0, a0};
}

}  // namespace detail

// Maximum-likelihood fit of (mu, a) to raw quadrature samples, optimizing in
// (ln mu, ln a) with Nelder-Mead followed by a BFGS polish.  The detector
// efficiency is divided out of the returned estimate, so mu_hat refers to the
// state before the detector.  Error bars come from the inverse Fisher
// information at the fitted point.
inline MLEstimate mle_fit(std::span<const double> samples, const DetectorModel& det,
                          double tail_eps = kDefaultTailEps);

// Rescale a raw (at-detector) estimate to the state before an inefficient
// detector: mu -> mu / eta, with the covariance transformed accordingly.
// a is efficiency-invariant and stays put.
inline MLEstimate efficiency_correct(const MLEstimate& raw, const DetectorModel& det) {
    validate(det);
    MLEstimate out = raw;
    if (det.eta == 1.0) {
        out.eta = 1.0;
        return out;
    }
    out.mu_hat = raw.mu_hat / det.eta;
    out.covariance.m[0][0] = raw.covariance.m[0][0] / (det.eta * det.eta);
    out.covariance.m[0][1] = raw.covariance.m[0][1] / det.eta;
    out.covariance.m[1][0] = raw.covariance.m[1][0] / det.eta;
    out.covariance.m[1][1] = raw.covariance.m[1][1];
    out.mu_ci = detail::wald_interval(out.mu_hat, out.covariance.m[0][0]);
    out.a_ci = detail::wald_interval(out.a_hat, out.covariance.m[1][1]);
    out.eta = det.eta;
    return out;
}

inline MLEstimate mle_fit(std::span<const double> samples, const DetectorModel& det,
                          double tail_eps) {
    validate(det);
    require(samples.size() >= 100, errc::insufficient_data,
            "maximum-likelihood fit needs at least 100 samples");
    const PndParams start = detail::moment_start(samples);
    const auto objective = [&](const std::array<double, 2>& log_params) {
        const PndParams p{std::exp(log_params[0]), std::exp(log_params[1])};
        return -log_likelihood(QuadratureModel(p, tail_eps), samples);
    };
    // x_tol 1e-7 on log-parameters leaves the optimizer's stopping error four
    // orders of magnitude below the statistical uncertainty at any realistic
    // sample size; the relative f_tol keeps the spread target achievable for
    // log-likelihood magnitudes that grow with N.
    const std::array<double, 2> x0{std::log(start.mu), std::log(start.a)};
    const MinimizeResult coarse = nelder_mead2(objective, x0, 0.15, 1e-7, 1e-12, 600);
    const MinimizeResult fine = bfgs_polish2(objective, coarse.x, 1e-6, 1e-7, 1e-12, 60);
    const bool improved = fine.f <= coarse.f;
    const MinimizeResult& best = improved ? fine : coarse;
    require(coarse.converged || fine.converged, errc::estimation_failure,
            "likelihood optimization did not converge");
    MLEstimate est;
    est.mu_hat = std::exp(best.x[0]);
    est.a_hat = std::exp(best.x[1]);
    est.loglik = -best.f;
    est.evaluations = coarse.evaluations + fine.evaluations;
    est.converged = true;
    const Mat2 info =
        fisher_information(PndParams{est.mu_hat, est.a_hat}, double(samples.size()), tail_eps);
    est.covariance = info.inverse();
    est.mu_ci = detail::wald_interval(est.mu_hat, est.covariance.m[0][0]);
    est.a_ci = detail::wald_interval(est.a_hat, est.covariance.m[1][1]);
    est.eta = 1.0;
    return efficiency_correct(est, det);
}

struct FitReport {
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 0.0;
    int bins = 0;
    std::vector<double> edges;     // inner bin edges (bins - 1 of them)
    std::vector<double> observed;  // per-bin counts
    double expected = 0.0;         // common expected count per bin
};

// Pearson chi^2 against the model with equal-probability bins built from
// model quantiles.  Bin count is min(N/10, 100), so every bin expects at
// least 10 samples; dof subtracts the two fitted parameters and one for the
// total-count constraint.
inline FitReport chi2_goodness_of_fit(std::span<const double> samples, const PndParams& p,
                                      double tail_eps = kDefaultTailEps) {
    validate(p);
    require(samples.size() >= 200, errc::insufficient_data,
            "goodness-of-fit needs at least 200 samples");
    const int bins = std::min<int>(int(samples.size() / 10), 100);
    require(bins >= 5, errc::insufficient_data, "too few samples to form bins");
    const QuadratureModel model(p, tail_eps);
    const double w = model.half_width();
    const GriddedCdf cdf([&](double q) { return model.pdf(q); }, -w, w, 16385);
    FitReport report;
    report.bins = bins;
    report.edges.resize(std::size_t(bins) - 1);
    for (int i = 1; i < bins; ++i) {
        report.edges[std::size_t(i - 1)] = cdf.quantile(double(i) / double(bins));
    }
    report.observed.assign(std::size_t(bins), 0.0);
    for (double q : samples) {
        const auto it = std::upper_bound(report.edges.begin(), report.edges.end(), q);
        report.observed[std::size_t(it - report.edges.begin())] += 1.0;
    }
    report.expected = double(samples.size()) / double(bins);
    KahanSum chi2;
    for (double obs : report.observed) {
        const double d = obs - report.expected;
        chi2.add(d * d / report.expected);
    }
    report.chi2 = chi2.value();
    report.dof = bins - 3;
    report.p_value = boost::math::gamma_q(0.5 * double(report.dof), 0.5 * report.chi2);
    return report;
}

// Damping level gamma_t from an unconditioned (thermal, a = 1) dataset whose
// undamped mean photon number is known: fit mu with a fixed at 1, undo the
// detector efficiency, and read gamma_t = ln(mu_initial / mu_hat), clamped
// at zero.
inline double estimate_loss_level(std::span<const double> samples, double mu_initial,
                                  const DetectorModel& det, double tail_eps = kDefaultTailEps) {
    validate(det);
    require(std::isfinite(mu_initial) && mu_initial > 0.0, errc::parameter_domain,
            "mu_initial must be positive");
    require(samples.size() >= 100, errc::insufficient_data,
            "loss estimation needs at least 100 samples");
    const MomentSummary mom = sample_moments(samples);
    const double mu_guess = std::max(mom.m2 - 0.5, 1e-3);
    const auto objective = [&](double log_mu) {
        return -log_likelihood(QuadratureModel(PndParams{std::exp(log_mu), 1.0}, tail_eps),
                               samples);
    };
    const double log_mu_hat = golden_minimize(objective, std::log(mu_guess) - 1.5,
                                              std::log(mu_guess) + 1.5, 1e-9);
    const double mu_hat = std::exp(log_mu_hat) / det.eta;
    return std::max(std::log(mu_initial / mu_hat), 0.0);
}

struct DeltaKEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t bootstrap_count = 0;
};

// delta_K = (2/3)|beta2| straight from quadrature samples, with the detector
// correction applied inside beta2 and a bootstrap standard error.
inline DeltaKEstimate delta_k_from_samples(std::span<const double> samples,
                                           const DetectorModel& det,
                                           std::uint64_t bootstrap_count = 1000,
                                           std::uint64_t seed = 0) {
    validate(det);
    require(samples.size() >= 1000, errc::insufficient_data,
            "kurtosis estimation needs at least 1000 samples");
    require(bootstrap_count >= 2, errc::parameter_domain, "bootstrap_count must be at least 2");
    const MomentSummary mom = sample_moments(samples);
    DeltaKEstimate est;
    est.value = (2.0 / 3.0) * std::abs(corrected_kurtosis(mom.m2, mom.m4, det));
    // Bootstrap on raw power sums; replicates that land at or below the noise
    // floor are skipped (they would be rejected as unphysical by the point
    // estimator too).
    const std::uint64_t n = samples.size();
    const double floor = det.eta * det.sigma_c_sq();
    Rng rng = Rng::substream(seed, 0);
    std::vector<double> replicates;
    replicates.reserve(bootstrap_count);
    for (std::uint64_t b = 0; b < bootstrap_count; ++b) {
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            const double v = samples[rng.uniform_index(n)];
            const double v2 = v * v;
            s1 += v;
            s2 += v2;
            s3 += v2 * v;
            s4 += v2 * v2;
        }
        const double inv = 1.0 / double(n);
        const double mean = s1 * inv;
        const double m2 = s2 * inv - mean * mean;
        const double m4 = s4 * inv - 4.0 * mean * s3 * inv + 6.0 * mean * mean * s2 * inv -
                          3.0 * mean * mean * mean * mean;
        if (m2 <= floor) continue;
        const double denom = m2 - floor;
        replicates.push_back((2.0 / 3.0) *
                             std::abs((m4 - 3.0 * m2 * m2) / (denom * denom)));
    }
    require(replicates.size() >= std::max<std::size_t>(2, bootstrap_count / 2),
            errc::estimation_failure, "too many bootstrap replicates hit the noise floor");
    KahanSum mean_acc;
    for (double r : replicates) mean_acc.add(r);
    const double mean = mean_acc.value() / double(replicates.size());
    KahanSum var_acc;
    for (double r : replicates) var_acc.add((r - mean) * (r - mean));
    est.std_error = std::sqrt(var_acc.value() / double(replicates.size() - 1));
    est.bootstrap_count = replicates.size();
    return est;
}

}  // namespace mpsts
