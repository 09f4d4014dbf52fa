// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mpsts/errors.hpp"
#include "mpsts/numeric.hpp"
#include "mpsts/pnd.hpp"
#include "mpsts/quadrature.hpp"
#include "mpsts/rng.hpp"

namespace mpsts {

struct DatasetMeta {
    PndParams true_params;  // prepared state, before the recorded loss
    double eta = 1.0;
    double gamma_t = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t sample_count = 0;
    std::string rng = Rng::kIdentifier;

    // State actually measured: the prepared state after gamma_t of pure loss.
    PndParams measured_params() const {
        return PndParams{true_params.mu * std::exp(-gamma_t), true_params.a};
    }
};

struct HomodyneDataset {
    DatasetMeta meta;
    std::vector<double> samples;
};

// One photon-number draw via the conditional hierarchy
// lambda ~ Gamma(a, mu/a), n ~ Poisson(lambda), whose marginal is the
// two-parameter law exactly (no truncation).
inline std::uint64_t sample_photon_number(const PndParams& p, Rng& rng) {
    validate(p);
    if (p.mu == 0.0) return 0;
    return rng.poisson(rng.gamma(p.a, p.mu / p.a));
}

// Inverse-CDF sampler for the single-eigenstate quadrature density
// phi_n(q)^2, with one lazily built table per photon number.
class FockQuadratureSampler {
  public:
    double sample(std::uint64_t n, Rng& rng) {
        if (n >= tables_.size()) tables_.resize(n + 1);
        auto& table = tables_[n];
        if (!table) {
            const double w = std::sqrt(2.0 * double(n) + 1.0) + 6.0;
            const int ni = int(n);
            table = std::make_unique<GriddedCdf>(
                [ni](double q) {
                    const double phi = oscillator_eigenfunction(ni, q);
                    return phi * phi;
                },
                -w, w, kGridPoints);
        }
        return table->quantile(rng.uniform());
    }

  private:
    static constexpr int kGridPoints = 4096;
    std::vector<std::unique_ptr<GriddedCdf>> tables_;
};

// Homodyne record of `count` quadrature values measured on the state with an
// inefficient detector: q = sqrt(eta) q_ideal + N(0, (1-eta)/2).  The same
// seed always reproduces the same dataset.
inline HomodyneDataset sample_quadrature_dataset(const PndParams& p, const DetectorModel& det,
                                                 std::uint64_t count, std::uint64_t seed) {
    validate(p);
    validate(det);
    require(count >= 1, errc::parameter_domain, "sample count must be at least 1");
    Rng rng = Rng::substream(seed, 0);
    FockQuadratureSampler fock;
    const double scale = std::sqrt(det.eta);
    const double noise_sd = std::sqrt(det.smear_variance());
    HomodyneDataset ds;
    ds.meta.true_params = p;
    ds.meta.eta = det.eta;
    ds.meta.gamma_t = 0.0;
    ds.meta.seed = seed;
    ds.meta.sample_count = count;
    ds.samples.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t n = sample_photon_number(p, rng);
        double q = scale * fock.sample(n, rng);
        if (noise_sd > 0.0) q += noise_sd * rng.normal();
        ds.samples.push_back(q);
    }
    return ds;
}

// Dataset measured after sending the prepared state through a pure-loss
// channel.  Only a vacuum reservoir thins a photon-number-diagonal state into
// another one, so mu_r must be zero here.
inline HomodyneDataset apply_loss_to_dataset(const PndParams& p, const LossChannel& ch,
                                             const DetectorModel& det, std::uint64_t count,
                                             std::uint64_t seed) {
    validate(ch);
    require(ch.mu_r == 0.0, errc::parameter_domain,
            "dataset generation supports a vacuum reservoir only (mu_r = 0)");
    const PndParams damped{p.mu * ch.transmission(), p.a};
    HomodyneDataset ds = sample_quadrature_dataset(damped, det, count, seed);
    ds.meta.true_params = p;
    ds.meta.gamma_t = ch.gamma_t;
    return ds;
}

// Tap beam splitter used for conditional photon subtraction: reflectivity of
// the tap and how many tap detections are required to accept the event.
struct SubtractionTap {
    double reflectivity = 0.01;
    int clicks_required = 1;
};

inline void validate(const SubtractionTap& t) {
    require(std::isfinite(t.reflectivity) && t.reflectivity > 0.0 && t.reflectivity < 1.0,
            errc::parameter_domain, "tap reflectivity must lie in (0, 1)");
    require(t.clicks_required >= 0, errc::parameter_domain,
            "required click count must be nonnegative");
}

// Empirical photon-number histogram from accepted events.
struct EmpiricalDistribution {
    std::vector<double> probs;
    std::uint64_t accepted = 0;
    std::uint64_t trials = 0;

    double mean() const {
        KahanSum s;
        for (std::size_t n = 0; n < probs.size(); ++n) s.add(double(n) * probs[n]);
        return s.value();
    }
};

// Total variation distance between two pmfs (shorter one zero-padded).
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    KahanSum s;
    const std::size_t n = std::max(p.size(), q.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double pv = i < p.size() ? p[i] : 0.0;
        const double qv = i < q.size() ? q[i] : 0.0;
        s.add(std::abs(pv - qv));
    }
    return 0.5 * s.value();
}

// Monte Carlo model of conditional multiphoton subtraction: thermal photons
// hit a weak tap; an event is accepted when at least `clicks_required`
// photons reflect, and the transmitted number is recorded.  Runs until
// `accepted_events` acceptances.  In the weak-tap limit the accepted
// histogram approaches the (mu0 (m+1), a = m+1) law; at finite reflectivity
// the transmitted beam is additionally thinned by (1 - r).
inline EmpiricalDistribution simulate_conditional_subtraction(double mu0,
                                                              const SubtractionTap& tap,
                                                              std::uint64_t accepted_events,
                                                              std::uint64_t seed) {
    require(std::isfinite(mu0) && mu0 >= 0.0, errc::parameter_domain,
            "mu0 must be finite and nonnegative");
    validate(tap);
    require(accepted_events >= 1, errc::parameter_domain, "need at least one accepted event");
    Rng rng = Rng::substream(seed, 0);
    std::vector<std::uint64_t> counts;
    EmpiricalDistribution out;
    // Zero acceptances across a long prefix means the condition is
    // effectively unreachable; bail out rather than spin forever.
    const std::uint64_t stall_limit = 10'000'000;
    while (out.accepted < accepted_events) {
        require(!(out.accepted == 0 && out.trials >= stall_limit), errc::no_acceptance,
                "no event met the subtraction condition after " + std::to_string(out.trials) +
                    " trials");
        ++out.trials;
        const std::uint64_t n = rng.poisson(rng.gamma(1.0, mu0));
        const std::uint64_t reflected = rng.binomial(n, tap.reflectivity);
        if (reflected < std::uint64_t(tap.clicks_required)) continue;
        const std::uint64_t transmitted = n - reflected;
        if (transmitted >= counts.size()) counts.resize(transmitted + 1, 0);
        ++counts[transmitted];
        ++out.accepted;
    }
    out.probs.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out.probs[i] = double(counts[i]) / double(out.accepted);
    }
    return out;
}

}  // namespace mpsts
