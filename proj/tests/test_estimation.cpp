// SPDX-License-Identifier: Apache-2.0
//
// Likelihood, maximum-likelihood fitting, Fisher errors, goodness of fit, and
// the moment-based kurtosis estimator.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mpsts/estimation.hpp"
#include "mpsts/measures.hpp"
#include "mpsts/sampling.hpp"

namespace {

using mpsts::DetectorModel;
using mpsts::HomodyneDataset;
using mpsts::Mat2;
using mpsts::MLEstimate;
using mpsts::PndParams;
using mpsts::QuadratureModel;

TEST(LogLikelihood, SingleVacuumSampleClosedForm) {
    // ln pdf(0) for the vacuum: ln(1/sqrt(pi)) (frozen, 40 digits).
    const std::vector<double> q{0.0};
    EXPECT_NEAR(mpsts::log_likelihood({0.0, 1.0}, q), -0.5723649429247000870717136756765293558236,
                1e-14);
}

TEST(LogLikelihood, AdditiveOverSampleBlocks) {
    const HomodyneDataset ds =
        mpsts::sample_quadrature_dataset({4.0, 3.0}, DetectorModel{1.0}, 2000, 3);
    const std::span<const double> all(ds.samples);
    const double whole = mpsts::log_likelihood({3.5, 2.5}, all);
    const double parts = mpsts::log_likelihood({3.5, 2.5}, all.subspan(0, 800)) +
                         mpsts::log_likelihood({3.5, 2.5}, all.subspan(800));
    EXPECT_NEAR(whole, parts, 1e-9 * std::abs(whole));
}

TEST(LogLikelihood, TruthBeatsDistortedParameters) {
    const HomodyneDataset ds =
        mpsts::sample_quadrature_dataset({4.0, 3.0}, DetectorModel{1.0}, 50000, 9);
    const double at_truth = mpsts::log_likelihood({4.0, 3.0}, ds.samples);
    EXPECT_GT(at_truth, mpsts::log_likelihood({8.0, 3.0}, ds.samples));
    EXPECT_GT(at_truth, mpsts::log_likelihood({4.0, 1.0}, ds.samples));
    EXPECT_GT(at_truth, mpsts::log_likelihood({2.0, 6.0}, ds.samples));
}

TEST(LogLikelihood, EmptySampleRejected) {
    const std::vector<double> none;
    EXPECT_THROW(mpsts::log_likelihood({1.0, 1.0}, none), mpsts::error);
}

TEST(MleFit, RecoversTruthWithPerfectDetector) {
    const PndParams truth{17.72, 2.0};
    const HomodyneDataset ds =
        mpsts::sample_quadrature_dataset(truth, DetectorModel{1.0}, 100000, 101);
    const MLEstimate est = mpsts::mle_fit(ds.samples, DetectorModel{1.0});
    EXPECT_TRUE(est.converged);
    const double sd_mu = std::sqrt(est.covariance.m[0][0]);
    const double sd_a = std::sqrt(est.covariance.m[1][1]);
    EXPECT_NEAR(est.mu_hat, truth.mu, 3.0 * sd_mu);
    EXPECT_NEAR(est.a_hat, truth.a, 3.0 * sd_a);
    EXPECT_GT(sd_mu, 0.0);
    EXPECT_GT(sd_a, 0.0);
    // Wald intervals surround the point estimate symmetrically.
    EXPECT_NEAR(0.5 * (est.mu_ci[0] + est.mu_ci[1]), est.mu_hat, 1e-9);
    EXPECT_NEAR(est.mu_ci[1] - est.mu_ci[0], 2.0 * 1.96 * sd_mu, 1e-9);
}

// Fits at coherence parameters near the experimentally reported range
// (0.94 to 5.46), each with mu = 8.86 a, through an eta = 0.78 detector.
TEST(MleFit, RecoversExperimentLikeParameterRange) {
    const DetectorModel det{0.78};
    for (double a : {0.94, 2.42, 5.46}) {
        const PndParams truth{8.86 * a, a};
        const HomodyneDataset ds = mpsts::sample_quadrature_dataset(
            {truth.mu, truth.a}, det, 100000, 500 + std::uint64_t(a * 100));
        const MLEstimate est = mpsts::mle_fit(ds.samples, det);
        const double sd_mu = std::sqrt(est.covariance.m[0][0]);
        const double sd_a = std::sqrt(est.covariance.m[1][1]);
        // mu_hat already refers to the state before the detector.
        EXPECT_NEAR(est.mu_hat, truth.mu, 3.5 * sd_mu) << "a=" << a;
        EXPECT_NEAR(est.a_hat, truth.a, 3.5 * sd_a) << "a=" << a;
        EXPECT_EQ(est.eta, det.eta);
    }
}

TEST(MleFit, InsufficientSamplesRejected) {
    const std::vector<double> few(50, 0.3);
    EXPECT_THROW(mpsts::mle_fit(few, DetectorModel{1.0}), mpsts::error);
}

TEST(EfficiencyCorrect, RescalesMeanAndCovariance) {
    MLEstimate raw;
    raw.mu_hat = 3.12;
    raw.a_hat = 3.0;
    raw.covariance = Mat2{{{0.04, 0.01}, {0.01, 0.09}}};
    raw.eta = 1.0;
    const DetectorModel det{0.78};
    const MLEstimate fixed = mpsts::efficiency_correct(raw, det);
    EXPECT_DOUBLE_EQ(fixed.mu_hat, 4.0);
    EXPECT_DOUBLE_EQ(fixed.a_hat, 3.0);
    EXPECT_NEAR(fixed.covariance.m[0][0], 0.04 / (0.78 * 0.78), 1e-15);
    EXPECT_NEAR(fixed.covariance.m[0][1], 0.01 / 0.78, 1e-15);
    EXPECT_NEAR(fixed.covariance.m[1][0], 0.01 / 0.78, 1e-15);
    EXPECT_DOUBLE_EQ(fixed.covariance.m[1][1], 0.09);
    EXPECT_EQ(fixed.eta, 0.78);
    // Perfect detector: identity.
    const MLEstimate same = mpsts::efficiency_correct(raw, DetectorModel{1.0});
    EXPECT_DOUBLE_EQ(same.mu_hat, 3.12);
}

// The coherence parameter is efficiency-invariant: fits of the same state
// through different detectors must agree on a.
TEST(MleFit, CoherenceParameterInvariantUnderEfficiency) {
    const PndParams truth{8.86, 3.0};
    const HomodyneDataset perfect =
        mpsts::sample_quadrature_dataset(truth, DetectorModel{1.0}, 60000, 71);
    const HomodyneDataset lossy =
        mpsts::sample_quadrature_dataset(truth, DetectorModel{0.78}, 60000, 72);
    const MLEstimate est_perfect = mpsts::mle_fit(perfect.samples, DetectorModel{1.0});
    const MLEstimate est_lossy = mpsts::mle_fit(lossy.samples, DetectorModel{0.78});
    EXPECT_NEAR(est_perfect.a_hat, 3.0, 3.5 * std::sqrt(est_perfect.covariance.m[1][1]));
    EXPECT_NEAR(est_lossy.a_hat, 3.0, 3.5 * std::sqrt(est_lossy.covariance.m[1][1]));
    EXPECT_NEAR(est_lossy.mu_hat, 8.86, 3.5 * std::sqrt(est_lossy.covariance.m[0][0]));
}

TEST(FisherInformation, ExactlyLinearInSampleCount) {
    const PndParams p{4.0, 3.0};
    const Mat2 i1 = mpsts::fisher_information(p, 1000.0);
    const Mat2 i2 = mpsts::fisher_information(p, 2000.0);
    EXPECT_DOUBLE_EQ(i2.m[0][0], 2.0 * i1.m[0][0]);
    EXPECT_DOUBLE_EQ(i2.m[0][1], 2.0 * i1.m[0][1]);
    EXPECT_DOUBLE_EQ(i2.m[1][1], 2.0 * i1.m[1][1]);
}

TEST(FisherInformation, PositiveDefiniteAcrossParameterBox)
{
    for (double a : {1.0, 2.0, 4.0, 6.0}) {
        for (double mu : {0.5, 4.0, 20.0}) {
            const Mat2 info = mpsts::fisher_information({mu, a}, 1.0);
            EXPECT_GT(info.m[0][0], 0.0) << "mu=" << mu << " a=" << a;
            EXPECT_GT(info.m[1][1], 0.0) << "mu=" << mu << " a=" << a;
            EXPECT_GT(info.det(), 0.0) << "mu=" << mu << " a=" << a;
            EXPECT_NEAR(info.m[0][1], info.m[1][0], 1e-12 * std::abs(info.m[0][1]) + 1e-15);
        }
    }
}

TEST(FisherInformation, RequiresPositiveMeanAndCount) {
    EXPECT_THROW(mpsts::fisher_information({0.0, 1.0}, 100.0), mpsts::error);
    EXPECT_THROW(mpsts::fisher_information({1.0, 1.0}, 0.5), mpsts::error);
}

TEST(Chi2GoodnessOfFit, AcceptsWellSpecifiedModel) {
    const PndParams truth{4.0, 3.0};
    const HomodyneDataset ds =
        mpsts::sample_quadrature_dataset(truth, DetectorModel{1.0}, 20000, 55);
    const auto report = mpsts::chi2_goodness_of_fit(ds.samples, truth);
    EXPECT_EQ(report.bins, 100);
    EXPECT_EQ(report.dof, 97);
    EXPECT_DOUBLE_EQ(report.expected, 200.0);
    EXPECT_GT(report.p_value, 1e-4);
    EXPECT_LT(report.p_value, 1.0);
    double total = 0.0;
    for (double o : report.observed) total += o;
    EXPECT_DOUBLE_EQ(total, 20000.0);
    ASSERT_EQ(report.edges.size(), 99u);
    for (std::size_t i = 1; i < report.edges.size(); ++i) {
        EXPECT_LT(report.edges[i - 1], report.edges[i]);
    }
}

TEST(Chi2GoodnessOfFit, RejectsMisspecifiedCoherence) {
    // Data from a twice-subtracted state, tested against the thermal model
    // with the same mean: decisively rejected.
    const HomodyneDataset ds =
        mpsts::sample_quadrature_dataset({4.0, 3.0}, DetectorModel{1.0}, 30000, 56);
    const auto report = mpsts::chi2_goodness_of_fit(ds.samples, {4.0, 1.0});
    EXPECT_LT(report.p_value, 1e-6);
}

TEST(Chi2GoodnessOfFit, SmallSampleGuards) {
    const std::vector<double> few(100, 0.5);
    EXPECT_THROW(mpsts::chi2_goodness_of_fit(few, {1.0, 1.0}), mpsts::error);
}

TEST(EstimateLossLevel, RecoversKnownDamping) {
    const double mu_initial = 8.86;
    const double gamma_t = 2.35;
    const PndParams damped{mu_initial * std::exp(-gamma_t), 1.0};
    const DetectorModel det{0.78};
    const HomodyneDataset ds = mpsts::sample_quadrature_dataset(damped, det, 100000, 77);
    const double got = mpsts::estimate_loss_level(ds.samples, mu_initial, det);
    EXPECT_NEAR(got, gamma_t, 0.05);
}

TEST(EstimateLossLevel, ClampsAtZeroAndValidates) {
    const HomodyneDataset ds =
        mpsts::sample_quadrature_dataset({2.0, 1.0}, DetectorModel{1.0}, 20000, 78);
    // Claimed initial mean below the observed one: no positive loss explains
    // it, the estimate clamps at zero.
    EXPECT_EQ(mpsts::estimate_loss_level(ds.samples, 0.5, DetectorModel{1.0}), 0.0);
    EXPECT_THROW(mpsts::estimate_loss_level(ds.samples, 0.0, DetectorModel{1.0}), mpsts::error);
    EXPECT_THROW(mpsts::estimate_loss_level(ds.samples, -1.0, DetectorModel{1.0}), mpsts::error);
}

TEST(DeltaKFromSamples, GaussianDataGivesZero) {
    mpsts::Rng rng(81);
    std::vector<double> qs(200000);
    for (auto& v : qs) v = rng.normal() * std::sqrt(0.5 + 2.0);  // thermal mu = 2 quadrature
    const auto est = mpsts::delta_k_from_samples(qs, DetectorModel{1.0}, 300, 5);
    EXPECT_NEAR(est.value, 0.0, 3.5 * est.std_error);
    EXPECT_GT(est.std_error, 0.0);
}

TEST(DeltaKFromSamples, RecoversClosedFormWithAndWithoutDetector) {
    const PndParams truth{2.0, 3.0};
    const double want = mpsts::delta_k(truth);  // 0.42666...
    const HomodyneDataset clean =
        mpsts::sample_quadrature_dataset(truth, DetectorModel{1.0}, 200000, 82);
    const auto est_clean = mpsts::delta_k_from_samples(clean.samples, DetectorModel{1.0}, 300, 6);
    EXPECT_NEAR(est_clean.value, want, 3.5 * est_clean.std_error);
    const DetectorModel det{0.78};
    const HomodyneDataset smeared = mpsts::sample_quadrature_dataset(truth, det, 200000, 83);
    const auto est_smeared = mpsts::delta_k_from_samples(smeared.samples, det, 300, 7);
    EXPECT_NEAR(est_smeared.value, want, 3.5 * est_smeared.std_error);
}

TEST(DeltaKFromSamples, Guards) {
    const std::vector<double> few(500, 0.1);
    EXPECT_THROW(mpsts::delta_k_from_samples(few, DetectorModel{1.0}), mpsts::error);
}

// Null-case control: thermal data fit with the full two-parameter model must
// not fake coherence structure; a stays within its interval of 1.
TEST(MleFit, ThermalDataDoesNotFakeSubtraction) {
    const DetectorModel det{1.0};
    int covered = 0;
    const int runs = 40;
    for (int run = 0; run < runs; ++run) {
        const HomodyneDataset ds = mpsts::sample_quadrature_dataset(
            {2.0, 1.0}, det, 5000, 9000 + std::uint64_t(run));
        const MLEstimate est = mpsts::mle_fit(ds.samples, det);
        const double sd_a = std::sqrt(est.covariance.m[1][1]);
        if (std::abs(est.a_hat - 1.0) <= 3.0 * sd_a) ++covered;
    }
    EXPECT_GE(covered, runs - 2);
}

}  // namespace
