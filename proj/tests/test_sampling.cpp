// SPDX-License-Identifier: Apache-2.0
//
// Random sampling: determinism, distributional faithfulness (KS and Pearson
// tests against the analytic laws), and the conditional subtraction tap.

#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mpsts/numeric.hpp"
#include "mpsts/quadrature.hpp"
#include "mpsts/sampling.hpp"

namespace {

using mpsts::DetectorModel;
using mpsts::EmpiricalDistribution;
using mpsts::HomodyneDataset;
using mpsts::LossChannel;
using mpsts::PndParams;
using mpsts::Rng;
using mpsts::SubtractionTap;

TEST(Rng, DeterministicStreamsAndSubstreams) {
    Rng a(12345), b(12345), c(12346);
    for (int i = 0; i < 100; ++i) {
        const double va = a.uniform();
        EXPECT_EQ(va, b.uniform());
        EXPECT_GT(va, 0.0);
        EXPECT_LE(va, 1.0);
    }
    EXPECT_NE(a.uniform(), c.uniform());
    Rng s0 = Rng::substream(99, 0), s0b = Rng::substream(99, 0), s1 = Rng::substream(99, 1);
    EXPECT_EQ(s0.uniform(), s0b.uniform());
    EXPECT_NE(s0.uniform(), s1.uniform());
    EXPECT_NE(Rng::derive_seed(1, 0), Rng::derive_seed(2, 0));
}

TEST(Rng, NormalMomentsAndPoissonMean) {
    Rng rng(7);
    const int n = 400000;
    double s1 = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        s1 += v;
        s2 += v * v;
        s4 += v * v * v * v;
    }
    EXPECT_NEAR(s1 / n, 0.0, 5e-3);
    EXPECT_NEAR(s2 / n, 1.0, 8e-3);
    EXPECT_NEAR(s4 / n, 3.0, 5e-2);
    double acc = 0;
    for (int i = 0; i < 200000; ++i) acc += double(rng.poisson(47.3));
    EXPECT_NEAR(acc / 200000.0, 47.3, 0.1);  // ~6.5 sigma window
}

TEST(Rng, GammaMomentsIncludingShapeBelowOne) {
    Rng rng(11);
    for (double shape : {0.7, 1.0, 3.0}) {
        const double scale = 2.0;
        const int n = 300000;
        double s1 = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double v = rng.gamma(shape, scale);
            s1 += v;
            s2 += v * v;
        }
        const double mean = s1 / n;
        const double var = s2 / n - mean * mean;
        EXPECT_NEAR(mean, shape * scale, 0.03) << "shape=" << shape;
        EXPECT_NEAR(var, shape * scale * scale, 0.15) << "shape=" << shape;
    }
}

double pearson_p_value(const std::vector<std::uint64_t>& counts, const std::vector<double>& pmf,
                       std::uint64_t draws) {
    // Pool the tail so every expected count is at least 5.
    std::vector<double> expected;
    std::vector<double> observed;
    double exp_acc = 0.0, obs_acc = 0.0;
    for (std::size_t n = 0; n < pmf.size(); ++n) {
        exp_acc += pmf[n] * double(draws);
        obs_acc += n < counts.size() ? double(counts[n]) : 0.0;
        if (exp_acc >= 5.0) {
            expected.push_back(exp_acc);
            observed.push_back(obs_acc);
            exp_acc = obs_acc = 0.0;
        }
    }
    // Remaining mass beyond the table.
    double tail_obs = obs_acc;
    for (std::size_t n = pmf.size(); n < counts.size(); ++n) tail_obs += double(counts[n]);
    expected.back() += double(draws) - [&] {
        double s = 0.0;
        for (double e : expected) s += e;
        return s;
    }();
    observed.back() += tail_obs;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const double d = observed[i] - expected[i];
        chi2 += d * d / expected[i];
    }
    const double dof = double(expected.size() - 1);
    return boost::math::gamma_q(0.5 * dof, 0.5 * chi2);
}

TEST(PhotonSampler, VacuumAndMean) {
    Rng rng(3);
    EXPECT_EQ(mpsts::sample_photon_number({0.0, 2.0}, rng), 0u);
    const PndParams p{8.86, 1.0};
    const int n = 1000000;
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += double(mpsts::sample_photon_number(p, rng));
    // sigma of the mean: sqrt(mu + mu^2)/sqrt(n) = 0.00935.
    EXPECT_NEAR(acc / n, 8.86, 3.0 * 0.00935);
}

// The gamma-Poisson hierarchy must reproduce the analytic pmf, checked with a
// Pearson test across 60 independent replications.
TEST(PhotonSampler, PearsonCalibrationAcrossRuns) {
    const PndParams p{4.0, 3.0};
    const auto pmf = mpsts::pnd_truncate(p, 1e-12).probs;
    int rejections = 0;
    const int runs = 60;
    for (int run = 0; run < runs; ++run) {
        Rng rng = Rng::substream(1000 + std::uint64_t(run), 0);
        const std::uint64_t draws = 20000;
        std::vector<std::uint64_t> counts;
        for (std::uint64_t i = 0; i < draws; ++i) {
            const std::uint64_t v = mpsts::sample_photon_number(p, rng);
            if (v >= counts.size()) counts.resize(v + 1, 0);
            ++counts[v];
        }
        if (pearson_p_value(counts, pmf, draws) < 0.01) ++rejections;
    }
    EXPECT_LE(rejections, 3);  // expect ~0.6 under the null
}

TEST(QuadratureDataset, DeterministicAndMetadataComplete) {
    const PndParams p{4.0, 3.0};
    const DetectorModel det{0.78};
    const HomodyneDataset a = mpsts::sample_quadrature_dataset(p, det, 5000, 42);
    const HomodyneDataset b = mpsts::sample_quadrature_dataset(p, det, 5000, 42);
    const HomodyneDataset c = mpsts::sample_quadrature_dataset(p, det, 5000, 43);
    EXPECT_EQ(a.samples, b.samples);
    EXPECT_NE(a.samples, c.samples);
    EXPECT_EQ(a.meta.seed, 42u);
    EXPECT_EQ(a.meta.sample_count, 5000u);
    EXPECT_EQ(a.meta.eta, 0.78);
    EXPECT_EQ(a.meta.gamma_t, 0.0);
    EXPECT_EQ(a.meta.rng, std::string(Rng::kIdentifier));
    EXPECT_DOUBLE_EQ(a.meta.measured_params().mu, 4.0);
}

TEST(QuadratureDataset, VacuumVarianceIsHalf) {
    const HomodyneDataset ds =
        mpsts::sample_quadrature_dataset({0.0, 1.0}, DetectorModel{1.0}, 200000, 5);
    const auto m = mpsts::sample_moments(ds.samples);
    // var(m2) ~ 2 m2^2 / n for a Gaussian.
    EXPECT_NEAR(m.m2, 0.5, 3.0 * std::sqrt(2.0 * 0.25 / 200000.0));
    EXPECT_NEAR(m.beta2, 0.0, 3.0 * std::sqrt(24.0 / 200000.0));
}

TEST(QuadratureDataset, MomentsMatchTheSmearedModel) {
    const PndParams p{4.0, 3.0};
    const DetectorModel det{0.78};
    const HomodyneDataset ds = mpsts::sample_quadrature_dataset(p, det, 400000, 17);
    const auto m = mpsts::sample_moments(ds.samples);
    const auto want = mpsts::ideal_moments({det.eta * p.mu, p.a});
    const double sd_m2 = std::sqrt((want.m4 - want.m2 * want.m2) / 400000.0);
    EXPECT_NEAR(m.m2, want.m2, 3.0 * sd_m2);
    // Excess kurtosis of the eta-thinned state, loose MC window.
    EXPECT_NEAR(m.beta2, want.beta2, 0.05);
}

// Empirical CDF against the analytic model CDF: Kolmogorov-Smirnov statistic
// under the 1% critical value in at least 95 of 100 runs.
TEST(QuadratureDataset, KolmogorovSmirnovCalibration) {
    const PndParams p{2.0, 3.0};
    const mpsts::QuadratureModel model(p, 1e-13);
    const double w = model.half_width();
    const mpsts::GriddedCdf cdf([&](double q) { return model.pdf(q); }, -w, w, 32769);
    const std::uint64_t draws = 100000;
    const double critical = 1.6276 / std::sqrt(double(draws));  // alpha = 0.01
    int rejections = 0;
    const int runs = 100;
    for (int run = 0; run < runs; ++run) {
        HomodyneDataset ds = mpsts::sample_quadrature_dataset(p, DetectorModel{1.0}, draws,
                                                              7000 + std::uint64_t(run));
        std::sort(ds.samples.begin(), ds.samples.end());
        double d_stat = 0.0;
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            const double f = cdf.cdf(ds.samples[i]);
            const double lo = double(i) / double(draws);
            const double hi = double(i + 1) / double(draws);
            d_stat = std::max({d_stat, std::abs(f - lo), std::abs(f - hi)});
        }
        if (d_stat > critical) ++rejections;
    }
    EXPECT_LE(rejections, 5);
}

TEST(LossDataset, ZeroLossIsByteIdentical) {
    const PndParams p{4.0, 3.0};
    const DetectorModel det{0.78};
    const HomodyneDataset direct = mpsts::sample_quadrature_dataset(p, det, 3000, 11);
    const HomodyneDataset through = mpsts::apply_loss_to_dataset(p, LossChannel{0.0, 0.0}, det,
                                                                 3000, 11);
    EXPECT_EQ(direct.samples, through.samples);
    EXPECT_EQ(through.meta.gamma_t, 0.0);
}

TEST(LossDataset, DampedVarianceAndMetadata) {
    const PndParams p{17.72, 2.0};
    const LossChannel ch{2.35, 0.0};
    const HomodyneDataset ds = mpsts::apply_loss_to_dataset(p, ch, DetectorModel{1.0}, 300000, 23);
    EXPECT_DOUBLE_EQ(ds.meta.true_params.mu, 17.72);
    EXPECT_DOUBLE_EQ(ds.meta.gamma_t, 2.35);
    const double mu_damped = 17.72 * std::exp(-2.35);
    EXPECT_NEAR(ds.meta.measured_params().mu, mu_damped, 1e-12);
    const auto m = mpsts::sample_moments(ds.samples);
    const auto want = mpsts::ideal_moments({mu_damped, 2.0});
    const double sd_m2 = std::sqrt((want.m4 - want.m2 * want.m2) / 300000.0);
    EXPECT_NEAR(m.m2, want.m2, 3.0 * sd_m2);
}

TEST(LossDataset, RejectsWarmReservoir) {
    EXPECT_THROW(
        mpsts::apply_loss_to_dataset({4.0, 3.0}, LossChannel{0.5, 0.3}, DetectorModel{1.0}, 100, 1),
        mpsts::error);
}

// g2 = 1 + 1/a survives loss: estimate it from photon-number draws before and
// after damping.
TEST(LossInvariance, G2FromSampledPhotonNumbers) {
    const double gamma_t = 1.18;
    auto estimate_g2 = [](const PndParams& p, std::uint64_t seed) {
        Rng rng = Rng::substream(seed, 0);
        const int n = 2000000;
        double s1 = 0, s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double v = double(mpsts::sample_photon_number(p, rng));
            s1 += v;
            s2 += v * (v - 1.0);
        }
        const double mean = s1 / n;
        return (s2 / n) / (mean * mean);
    };
    const double before = estimate_g2({4.0, 3.0}, 31);
    const double after = estimate_g2({4.0 * std::exp(-gamma_t), 3.0}, 32);
    EXPECT_NEAR(before, 4.0 / 3.0, 0.01);
    EXPECT_NEAR(after, 4.0 / 3.0, 0.01);
    EXPECT_NEAR(before, after, 0.015);
}

TEST(ConditionalSubtraction, UnconditionedTapIsThinnedThermal) {
    const double mu0 = 2.0, r = 0.05;
    const EmpiricalDistribution ed =
        mpsts::simulate_conditional_subtraction(mu0, SubtractionTap{r, 0}, 200000, 13);
    EXPECT_EQ(ed.accepted, 200000u);
    EXPECT_EQ(ed.trials, 200000u);  // every event accepted
    const double want_mean = mu0 * (1.0 - r);
    const double sd = std::sqrt(want_mean + want_mean * want_mean) / std::sqrt(200000.0);
    EXPECT_NEAR(ed.mean(), want_mean, 3.5 * sd);
}

TEST(ConditionalSubtraction, WeakTapApproachesSubtractedLaw) {
    const double mu0 = 8.86;
    const EmpiricalDistribution ed =
        mpsts::simulate_conditional_subtraction(mu0, SubtractionTap{0.001, 1}, 100000, 21);
    // Weak-tap limit: mean -> 2 mu0 (up to the (1-r) thinning and MC noise;
    // sigma_mean ~ sqrt(var)/sqrt(N) ~ 0.06).
    EXPECT_NEAR(ed.mean(), 2.0 * mu0, 0.03 * 2.0 * mu0);
    EXPECT_GT(ed.trials, ed.accepted);
}

TEST(ConditionalSubtraction, ImpossibleConditionSignalsNoAcceptance) {
    // mu0 = 0 never produces a tap click.
    try {
        mpsts::simulate_conditional_subtraction(0.0, SubtractionTap{0.5, 1}, 10, 2);
        FAIL() << "expected a no-acceptance error";
    } catch (const mpsts::error& e) {
        EXPECT_EQ(e.code(), mpsts::errc::no_acceptance);
    }
}

TEST(ConditionalSubtraction, RejectsBadTap) {
    EXPECT_THROW(mpsts::simulate_conditional_subtraction(1.0, SubtractionTap{0.0, 1}, 10, 2),
                 mpsts::error);
    EXPECT_THROW(mpsts::simulate_conditional_subtraction(1.0, SubtractionTap{1.0, 1}, 10, 2),
                 mpsts::error);
    EXPECT_THROW(mpsts::simulate_conditional_subtraction(1.0, SubtractionTap{0.1, -1}, 10, 2),
                 mpsts::error);
    EXPECT_THROW(mpsts::simulate_conditional_subtraction(1.0, SubtractionTap{0.1, 1}, 0, 2),
                 mpsts::error);
}

TEST(TotalVariation, BasicProperties) {
    EXPECT_EQ(mpsts::total_variation({0.5, 0.5}, {0.5, 0.5}), 0.0);
    EXPECT_NEAR(mpsts::total_variation({1.0}, {0.0, 1.0}), 1.0, 1e-15);
    EXPECT_NEAR(mpsts::total_variation({0.6, 0.4}, {0.4, 0.6}), 0.2, 1e-15);
}

}  // namespace
