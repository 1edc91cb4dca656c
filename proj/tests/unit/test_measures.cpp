#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mfd/errors.hpp"
#include "mfd/geometry.hpp"
#include "mfd/measures.hpp"

using namespace mfd;
using std::numbers::pi;

namespace {

SmoothedMixture atoms_1d(std::vector<double> a, double t) {
  Mat m(1, static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = a[i];
  return SmoothedMixture(m, Vec::Constant(m.cols(), 1.0 / static_cast<double>(a.size())), t);
}

double normal_pdf(double x, double mu, double var) {
  return std::exp(-(x - mu) * (x - mu) / (2 * var)) / std::sqrt(2 * pi * var);
}

struct CorpusPair {
  SmoothedMixture p, q;
};

std::vector<CorpusPair> corpus() {
  std::vector<CorpusPair> out;
  Rng rng(9);
  for (const Manifold& m : {Manifold::circle(1.0, 2), Manifold::sphere(2, 1.0, 3)})
    for (double t : {0.5, 1.0})
      for (std::size_t n : {16u, 128u}) {
        int res = 64;
        while (m.quadrature_net(res).spacing > std::sqrt(t) / 10.0) res *= 2;
        const SmoothedMixture pop = population_smoothed(m, SurfaceDensity::uniform(), t, res);
        out.push_back({SmoothedMixture::uniform(m.sample(SurfaceDensity::uniform(), rng, n), t), pop});
      }
  return out;
}

}  // namespace

TEST(MixtureDensity, SingleAtomPeak) {
  EXPECT_NEAR(atoms_1d({0.0}, 1.0).density(Vec::Zero(1)), 1.0 / std::sqrt(2 * pi), 1e-15);
  EXPECT_NEAR(atoms_1d({0.0}, 1.0).density(Vec::Zero(1)), 0.39894, 1e-5);
}

TEST(MixtureDensity, TwoSymmetricAtoms) {
  const double hand = 0.5 * normal_pdf(0.0, 1.0, 1.0) + 0.5 * normal_pdf(0.0, -1.0, 1.0);
  const double got = atoms_1d({-1.0, 1.0}, 1.0).density(Vec::Zero(1));
  EXPECT_NEAR(got, hand, 1e-15);
  EXPECT_NEAR(got, 0.24197, 1e-5);
}

TEST(MixtureDensity, IntegratesToOneOnGrid) {
  Rng rng(1);
  const Manifold m = Manifold::circle(1.0, 2);
  const SmoothedMixture mix = SmoothedMixture::uniform(m.sample(SurfaceDensity::uniform(), rng, 7), 0.3);
  const double lo = -4.0, hi = 4.0;
  const int n = 400;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) acc += mix.density((Vec(2) << lo + (i + 0.5) * h, lo + (j + 0.5) * h).finished());
  EXPECT_NEAR(acc * h * h, 1.0, 0.01);
}

TEST(MixtureDensity, LogDensityStableAtSmallVariance) {
  const SmoothedMixture mix = atoms_1d({0.0, 1.0}, 1e-6);
  const double ld = mix.log_density((Vec(1) << 0.5).finished());
  EXPECT_TRUE(std::isfinite(ld));
  // Both atoms contribute exp(-0.25 / 2e-6) / sqrt(2 pi 1e-6).
  EXPECT_NEAR(ld, -0.125 / 1e-6 - 0.5 * std::log(2 * pi * 1e-6), 1e-6);
  EXPECT_GT(mix.density((Vec(1) << 0.01).finished()), 0.0);
}

TEST(MixtureScore, SingleAtomIsConditionalScore) {
  Mat a(3, 1);
  a << 0.3, -1.0, 2.0;
  const SmoothedMixture mix(a, Vec::Ones(1), 0.7);
  const Vec x = (Vec(3) << 1.0, 2.0, -0.5).finished();
  EXPECT_LT((mix.score(x) + (x - a.col(0)) / 0.7).norm(), 1e-14);
}

TEST(MixtureScore, SymmetricAtomsGiveZeroAtOrigin) {
  EXPECT_NEAR(atoms_1d({-1.0, 1.0}, 0.4).score(Vec::Zero(1))[0], 0.0, 1e-15);
}

TEST(MixtureScore, MatchesFiniteDifferencesOfLogDensity) {
  Rng rng(2);
  const Mat atoms = Mat::Random(3, 5);
  Vec w = Vec::Random(5).cwiseAbs() + Vec::Constant(5, 0.1);
  w /= w.sum();
  const SmoothedMixture mix(atoms, w, 0.4);
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const Vec x = 1.5 * gaussian_vec(rng, 3);
    Vec fd(3);
    for (int i = 0; i < 3; ++i) {
      Vec e = Vec::Zero(3);
      e[i] = h;
      fd[i] = (mix.log_density(x + e) - mix.log_density(x - e)) / (2 * h);
    }
    const Vec s = mix.score(x);
    ASSERT_LE((s - fd).norm(), 1e-5 * std::max(1.0, s.norm()));
  }
}

TEST(MixtureInvariants, WeightsSumToOne) {
  Rng rng(3);
  for (const auto& pair : corpus()) {
    EXPECT_NEAR(pair.p.weights().sum(), 1.0, 1e-12);
    EXPECT_NEAR(pair.q.weights().sum(), 1.0, 1e-12);
  }
}

TEST(PopulationSmoothed, UniformCircleNet) {
  const Manifold m = Manifold::circle(1.0, 2);
  const SmoothedMixture pop = population_smoothed(m, SurfaceDensity::uniform(), 0.5, 512);
  ASSERT_EQ(pop.size(), 512);
  for (Eigen::Index i = 0; i < 512; ++i) EXPECT_NEAR(pop.weights()[i], 1.0 / 512.0, 1e-15);
  std::vector<double> angles;
  for (Eigen::Index i = 0; i < 512; ++i) angles.push_back(std::atan2(pop.atoms()(1, i), pop.atoms()(0, i)));
  std::sort(angles.begin(), angles.end());
  for (std::size_t i = 1; i < angles.size(); ++i) EXPECT_NEAR(angles[i] - angles[i - 1], 2 * pi / 512, 1e-12);
}

TEST(PopulationSmoothed, VonMisesWeightsFollowDensity) {
  const Manifold m = Manifold::circle(1.0, 2);
  const SurfaceDensity vm = SurfaceDensity::von_mises(2.0, 0.5);
  const SmoothedMixture pop = population_smoothed(m, vm, 0.5, 256);
  EXPECT_NEAR(pop.weights().sum(), 1.0, 1e-12);
  const double ref = pop.weights()[0] / m.density_at(vm, pop.atoms().col(0));
  for (Eigen::Index i = 1; i < pop.size(); ++i)
    EXPECT_NEAR(pop.weights()[i] / m.density_at(vm, pop.atoms().col(i)), ref, 1e-12 * ref);
}

TEST(PopulationSmoothed, FarPointMatchesCircleConvolution) {
  const double t = 0.5;
  const SmoothedMixture pop = population_smoothed(Manifold::circle(1.0, 2), SurfaceDensity::uniform(), t, 512);
  for (double r : {2.0, 2.5}) {
    const Vec x = (Vec(2) << r * std::cos(0.3), r * std::sin(0.3)).finished();
    // Uniform circle convolved with N(0, t I): exp(-(r^2 + 1)/2t) I0(r/t) / (2 pi t).
    const double closed = std::exp(-(r * r + 1) / (2 * t)) * std::cyl_bessel_i(0.0, r / t) / (2 * pi * t);
    EXPECT_NEAR(pop.density(x), closed, 0.005 * closed);
  }
}

TEST(KlEstimate, IdenticalIsZero) {
  Rng rng(4);
  const SmoothedMixture p = atoms_1d({-1.0, 0.5, 2.0}, 0.3);
  const DivergenceEstimate e = kl_estimate(p, p, 5000, rng);
  EXPECT_NEAR(e.value, 0.0, 1e-14);
  EXPECT_GE(e.std_error, 0.0);
  const SmoothedMixture one = atoms_1d({0.0}, 1.0);
  EXPECT_NEAR(kl_estimate(one, one, 100, rng).value, 0.0, 1e-15);
}

TEST(KlEstimate, GaussianShiftClosedForm) {
  Rng rng(5);
  const double mu = 0.8, t = 0.5;
  const DivergenceEstimate e = kl_estimate(atoms_1d({0.0}, t), atoms_1d({mu}, t), 20000, rng);
  EXPECT_NEAR(e.value, mu * mu / (2 * t), 3 * e.std_error);
}

TEST(KlEstimate, CircleEmpiricalVsPopulationPositive) {
  Rng rng(6);
  const Manifold m = Manifold::circle(1.0, 3);
  const SmoothedMixture pop = population_smoothed(m, SurfaceDensity::uniform(), 0.5, 512);
  const SmoothedMixture emp = SmoothedMixture::uniform(m.sample(SurfaceDensity::uniform(), rng, 64), 0.5);
  const DivergenceEstimate e = kl_estimate(emp, pop, 5000, rng);
  EXPECT_TRUE(std::isfinite(e.value));
  EXPECT_GT(e.value, 0.0);
}

TEST(Chi2Estimate, IdenticalIsZero) {
  Rng rng(7);
  const SmoothedMixture p = atoms_1d({-1.0, 0.5}, 0.3);
  EXPECT_NEAR(chi2_upper_estimate(p, p, 2000, rng).value, 0.0, 1e-14);
}

TEST(Chi2Estimate, GaussianShiftClosedForm) {
  Rng rng(8);
  const double mu = 0.1, t = 1.0;
  const DivergenceEstimate e = chi2_upper_estimate(atoms_1d({mu}, t), atoms_1d({0.0}, t), 20000, rng);
  EXPECT_NEAR(e.value, std::exp(mu * mu / t) - 1.0, 3 * e.std_error);
}

TEST(HellingerEstimate, IdenticalAndDisjoint) {
  Rng rng(9);
  const SmoothedMixture p = atoms_1d({0.0}, 1e-3);
  EXPECT_NEAR(hellinger_sq_estimate(p, p, 2000, rng).value, 0.0, 1e-14);
  EXPECT_NEAR(hellinger_sq_estimate(p, atoms_1d({10.0}, 1e-3), 2000, rng).value, 2.0, 1e-6);
}

TEST(DivergenceInvariants, KlBelowChi2AndHellingerBelowKl) {
  Rng rng(10);
  for (const auto& [p, q] : corpus()) {
    const DivergenceEstimate kl = kl_estimate(p, q, 3000, rng);
    const DivergenceEstimate c2 = chi2_upper_estimate(p, q, 3000, rng);
    const DivergenceEstimate h2 = hellinger_sq_estimate(p, q, 3000, rng);
    const double se_kc = std::hypot(kl.std_error, c2.std_error);
    const double se_hk = std::hypot(kl.std_error, h2.std_error);
    EXPECT_LE(kl.value, c2.value + 3 * se_kc);
    EXPECT_LE(h2.value, kl.value + 3 * se_hk);
    for (const auto* e : {&kl, &c2, &h2}) {
      EXPECT_GE(e->std_error, 0.0);
      EXPECT_GE(e->value, -3 * e->std_error);
    }
  }
}

TEST(RateExperiment, LargerSmoothingLowersKl) {
  const Manifold m = Manifold::circle(1.0, 3);
  RateExperimentConfig cfg;
  cfg.n_grid = {64};
  cfg.seeds = {0, 1, 2};
  cfg.n_mc = 3000;
  cfg.resolution = 256;
  cfg.t0 = 0.25;
  const double narrow = smoothing_rate_experiment(m, SurfaceDensity::uniform(), cfg).median_kl.front();
  cfg.t0 = 0.5;
  const double wide = smoothing_rate_experiment(m, SurfaceDensity::uniform(), cfg).median_kl.front();
  EXPECT_LT(wide, narrow);
}

TEST(RateExperiment, FitSlopeRecoversExactPowerLaw) {
  std::vector<double> x, y;
  for (int n : {32, 64, 128, 256}) {
    x.push_back(std::log(n));
    y.push_back(std::log(3.0 / n));
  }
  const auto [slope, se] = fit_slope(x, y);
  EXPECT_NEAR(slope, -1.0, 1e-12);
  EXPECT_NEAR(se, 0.0, 1e-10);
}
