#include <gtest/gtest.h>

#include <cmath>

#include "mfd/errors.hpp"
#include "mfd/geometry.hpp"
#include "mfd/measures.hpp"
#include "mfd/score.hpp"

using namespace mfd;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Mat row(std::vector<double> a) {
  Mat m(1, static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = a[i];
  return m;
}

FieldPtr shifted(FieldPtr base, Vec c) {
  const int d = base->dim();
  return custom_score(d, [base, c](const Vec& x, double t) { return Vec(base->eval(x, t) + c); }, "shifted");
}

SmoothedMixture circle_population(double t) {
  const Manifold m = Manifold::circle(1.0, 2);
  int res = 64;
  while (m.quadrature_net(res).spacing > std::sqrt(t) / 10.0) res *= 2;
  return population_smoothed(m, SurfaceDensity::uniform(), t, res);
}

}  // namespace

TEST(ConditionalScore, Examples) {
  const Vec x0 = v2(0.3, -0.2);
  EXPECT_EQ(conditional_score(x0, x0, 0.5).norm(), 0.0);
  EXPECT_LT((conditional_score(v2(1, 0), v2(0, 0), 1.0) - v2(-1, 0)).norm(), 1e-15);
  const Vec a = conditional_score(v2(1.0, 2.0), x0, 0.8);
  const Vec b = conditional_score(v2(1.0, 2.0), x0, 0.4);
  EXPECT_LT((b - 2.0 * a).norm(), 1e-14);
}

TEST(Dsm, SingleAtomConditionalScoreIsZero) {
  Rng rng(1);
  const Mat a = row({0.7});
  const SmoothedMixture data(a, Vec::Ones(1), 0.3);
  const FieldPtr s = oracle_mixture_score(a, Vec::Ones(1));
  const DsmEstimate e = dsm(*s, data, 2000, rng);
  EXPECT_NEAR(e.value, 0.0, 1e-20);
  EXPECT_DOUBLE_EQ(e.t, 0.3);
}

TEST(Dsm, ZeroFieldIsDimensionOverT) {
  Rng rng(2);
  const double t = 0.25;
  Mat a(3, 2);
  a << 0, 1, 0, 0, 0, 0;
  const SmoothedMixture data(a, Vec::Constant(2, 0.5), t);
  const DsmEstimate e = dsm(*zero_score(3), data, 20000, rng);
  EXPECT_NEAR(e.value, 3.0 / t, 3.0 * e.std_error);
}

TEST(Dsm, EmpiricalMinimizerIsTheMixtureScore) {
  // Candidates: mixture scores with atoms at +-a. The DSM argmin over a dense
  // grid of a must sit at the data atoms +-1.
  Rng rng(3);
  const double t = 0.2;
  const SmoothedMixture data(row({-1.0, 1.0}), Vec::Constant(2, 0.5), t);
  const DsmDraws draws = draw_dsm_pairs(data, 40000, rng);
  double best_a = 0.0, best = std::numeric_limits<double>::infinity();
  for (double a = 0.5; a <= 1.5 + 1e-12; a += 0.02) {
    const FieldPtr cand = oracle_mixture_score(row({-a, a}), Vec::Constant(2, 0.5));
    const double v = dsm_terms(*cand, draws).mean();
    if (v < best) {
      best = v;
      best_a = a;
    }
  }
  EXPECT_NEAR(best_a, 1.0, 0.02 + 1e-12);
}

TEST(Dsm, OracleIsMinimalAgainstPerturbationFamily) {
  Rng rng(4);
  const double t = 0.3;
  const Mat atoms = row({-1.0, 0.2, 1.5});
  const Vec w = (Vec(3) << 0.3, 0.3, 0.4).finished();
  const SmoothedMixture data(atoms, w, t);
  const FieldPtr oracle = oracle_mixture_score(atoms, w);
  std::vector<FieldPtr> family;
  for (double c : {-0.5, -0.2, 0.2, 0.5}) family.push_back(shifted(oracle, Vec::Constant(1, c)));
  for (double k : {0.8, 1.25})
    family.push_back(custom_score(1, [oracle, k](const Vec& x, double tt) { return Vec(k * oracle->eval(x, tt)); },
                                  "scaled"));
  for (const auto& cand : family) {
    const DsmEstimate d = dsm_difference(*oracle, *cand, data, 20000, rng);
    EXPECT_LE(d.value, -3.0 * d.std_error) << cand->describe();
  }
}

TEST(Ldsm, HugeBandwidthRecoversDsm) {
  const double t = 0.4;
  const SmoothedMixture data(row({-1.0, 1.0}), Vec::Constant(2, 0.5), t);
  const FieldPtr f = zero_score(1);
  Rng r1(5), r2(5);
  const DsmEstimate full = dsm(*f, data, 20000, r1);
  const DsmEstimate local = ldsm(*f, Vec::Zero(1), 1e6, data, 20000, r2);
  EXPECT_NEAR(local.value, full.value, std::max(full.std_error, 1e-12));
}

TEST(Ldsm, SmallBandwidthOffSupportThrows) {
  Rng rng(6);
  const SmoothedMixture data(row({-1.0, 1.0}), Vec::Constant(2, 0.5), 0.1);
  EXPECT_THROW(ldsm(*zero_score(1), Vec::Constant(1, 0.0), 0.5, data, 1000, rng), EmptyNeighborhood);
}

TEST(Ldsm, ProjectionScoreExcessScalesNoFasterThanInverseT) {
  const Manifold m = Manifold::circle(1.0, 2);
  const FieldPtr proj = projection_score(m, Domain::tube(m, m.reach()));
  const Vec x_ref = v2(1.0, 0.0);
  std::vector<double> lt, le;
  for (double t : {1e-3, 3e-3, 1e-2, 3e-2}) {
    const SmoothedMixture pop = circle_population(t);
    const FieldPtr star = oracle_mixture_score(pop.atoms(), pop.weights());
    Rng r1(7), r2(7);
    const double excess =
        ldsm(*proj, x_ref, 0.5, pop, 20000, r1).value - ldsm(*star, x_ref, 0.5, pop, 20000, r2).value;
    ASSERT_GT(excess, 0.0);
    lt.push_back(std::log(t));
    le.push_back(std::log(excess));
  }
  const auto [slope, se] = fit_slope(lt, le);
  EXPECT_GE(slope, -1.05) << "slope " << slope << " +- " << se;
}

TEST(ExcessRisk, IdenticalFieldsHaveZeroGap) {
  Rng rng(8);
  const SmoothedMixture mu(row({-1.0, 1.0}), Vec::Constant(2, 0.5), 0.5);
  const FieldPtr s = oracle_mixture_score(mu.atoms(), mu.weights());
  const ExcessRisk e = excess_risk_check(*s, *s, mu, 5000, rng);
  EXPECT_NEAR(e.lhs, 0.0, 1e-12);
  EXPECT_NEAR(e.rhs, 0.0, 1e-12);
  EXPECT_NEAR(e.gap, 0.0, 1e-12);
}

TEST(ExcessRisk, ConstantShiftGivesSquaredNorm) {
  Rng rng(9);
  Mat atoms(2, 3);
  atoms << 1, -1, 0, 0, 0, 1;
  const SmoothedMixture mu(atoms, Vec::Constant(3, 1.0 / 3), 0.5);
  const FieldPtr star = oracle_mixture_score(atoms, mu.weights());
  const Vec c = v2(0.6, -0.8);
  const ExcessRisk e = excess_risk_check(*shifted(star, c), *star, mu, 100000, rng);
  EXPECT_NEAR(e.rhs, c.squaredNorm(), 1e-12);
  EXPECT_LE(e.rel_gap, 0.02);
  EXPECT_NEAR(e.lhs, c.squaredNorm(), 0.02 * c.squaredNorm());
}

TEST(ExcessRisk, RandomPerturbationWithinTwoPercent) {
  Rng rng(10);
  const Manifold m = Manifold::circle(1.0, 2);
  const Cloud atoms = m.sample(SurfaceDensity::uniform(), rng, 64);
  const SmoothedMixture mu = SmoothedMixture::uniform(atoms, 1.0);
  const FieldPtr star = oracle_mixture_score(atoms);
  const FieldPtr s = make_perturbed(star, m, 2.0, ErrorKind::RandomSmooth, rng);
  const ExcessRisk e = excess_risk_check(*s, *star, mu, 100000, rng);
  EXPECT_GT(e.rhs, 0.0);
  EXPECT_LE(e.rel_gap, 0.02);
}

TEST(Denoiser, ExactProjectionScoreProjects) {
  const Manifold m = Manifold::sphere(2, 1.0, 3);
  const FieldPtr f = projection_score(m, Domain::tube(m, m.reach()));
  Rng rng(11);
  for (const Vec& x : m.sample_tube(rng, 200, 0.5)) {
    const Vec d = denoiser(*f, x, 0.3);
    EXPECT_LT((d - m.project(x)).norm(), 1e-12);
    EXPECT_LT((denoiser(*f, d, 0.3) - d).norm(), 1e-9);
  }
}

TEST(Denoiser, SingleAtomOracleReturnsTheAtom) {
  Mat a(2, 1);
  a << 0.4, -0.3;
  const FieldPtr f = oracle_mixture_score(a, Vec::Ones(1));
  Rng rng(12);
  for (int i = 0; i < 20; ++i) EXPECT_LT((denoiser(*f, 3.0 * gaussian_vec(rng, 2), 0.7) - a.col(0)).norm(), 1e-12);
}

TEST(Denoiser, PerturbedStaysWithinEpsilon) {
  const Manifold m = Manifold::circle(1.0, 2);
  const FieldPtr exact = projection_score(m, Domain::tube(m, m.reach()));
  Rng rng(13);
  for (ErrorKind k : {ErrorKind::ConstantDirection, ErrorKind::Tangential, ErrorKind::RandomSmooth, ErrorKind::Normal}) {
    const FieldPtr f = make_perturbed(exact, m, 0.05, k, rng);
    for (const Vec& x : m.sample_tube(rng, 500, 0.25))
      ASSERT_LE((denoiser(*f, x, 0.1) - m.project(x)).norm(), 0.05 + 1e-12) << to_string(k);
  }
}

TEST(Alignment, Examples) {
  const Manifold m = Manifold::circle(1.0, 2);
  const FieldPtr exact = projection_score(m, Domain::tube(m, m.reach()));
  const FieldPtr anti =
      custom_score(2, [m](const Vec& x, double t) { return Vec((x - m.project(x)) / t); }, "anti");
  const Vec x = v2(1.3, 0.4);
  EXPECT_NEAR(alignment(*exact, m, x, 0.2), 1.0, 1e-14);
  EXPECT_NEAR(alignment(*anti, m, x, 0.2), -1.0, 1e-14);
  EXPECT_THROW(alignment(*exact, m, v2(1.0, 0.0), 0.2), DegenerateVector);
}

TEST(MakePerturbed, ZeroEpsilonIsIdentical) {
  const Manifold m = Manifold::circle(1.0, 2);
  const FieldPtr exact = projection_score(m, Domain::tube(m, m.reach()));
  Rng rng(14);
  for (ErrorKind k : {ErrorKind::ConstantDirection, ErrorKind::Tangential, ErrorKind::RandomSmooth}) {
    const FieldPtr f = make_perturbed(exact, m, 0.0, k, rng);
    for (const Vec& x : m.sample_tube(rng, 50, 0.5)) EXPECT_EQ((f->eval(x, 0.3) - exact->eval(x, 0.3)).norm(), 0.0);
  }
}

TEST(MakePerturbed, ConstantDirectionSupEqualsEpsilon) {
  const Manifold m = Manifold::circle(1.0, 2);
  const FieldPtr exact = projection_score(m, Domain::tube(m, m.reach()));
  Rng rng(15);
  const double eps = 0.037, t = 0.2;
  const FieldPtr f = make_perturbed(exact, m, eps, ErrorKind::ConstantDirection, rng);
  double sup = 0.0;
  for (const Vec& x : m.sample_tube(rng, 10000, 0.5)) sup = std::max(sup, (t * (f->eval(x, t) - exact->eval(x, t))).norm());
  EXPECT_NEAR(sup, eps, 1e-12);
}

TEST(MakePerturbed, TangentialIsOrthogonalToNormalOffset) {
  Rng rng(16);
  for (const Manifold& m : {Manifold::circle(1.0, 2), Manifold::sphere(2, 1.0, 3)}) {
    const FieldPtr exact = projection_score(m, Domain::tube(m, m.reach()));
    const FieldPtr f = make_perturbed(exact, m, 0.05, ErrorKind::Tangential, rng);
    for (const Vec& x : m.sample_tube(rng, 1000, 0.5)) {
      const Vec e = 0.1 * (f->eval(x, 0.1) - exact->eval(x, 0.1));
      ASSERT_LE(std::abs(e.dot(x - m.project(x))), 1e-9);
    }
  }
}

TEST(ScoreInvariants, ProjectionClassFormula) {
  const Manifold m = Manifold::clifford_torus(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 4);
  const FieldPtr f = projection_score(m, Domain::tube(m, m.reach()));
  Rng rng(17);
  for (const Vec& x : m.sample_tube(rng, 100, 0.5 * m.reach()))
    EXPECT_LT((f->eval(x, 0.3) + (x - m.project(x)) / 0.3).norm(), 1e-12);
  // Zero outside the domain.
  EXPECT_EQ(f->eval(Vec::Zero(4), 0.3).norm(), 0.0);
}

TEST(ScoreInvariants, SmallNoiseLeadingOrder) {
  // For the uniform circle, t s*(x, t) approaches proj(x) - x and |s*| grows
  // like 1/t at a fixed off-manifold point.
  const Manifold m = Manifold::circle(1.0, 2);
  Rng rng(18);
  const Cloud probes = m.sample_tube(rng, 200, 0.2);
  std::vector<double> lt, ln, sups;
  const Vec off = v2(1.1, 0.0);
  for (double t : {0.04, 0.02, 0.01, 0.005}) {
    const SmoothedMixture pop = circle_population(t);
    const FieldPtr s = oracle_mixture_score(pop.atoms(), pop.weights());
    double sup = 0.0;
    for (const Vec& x : probes) sup = std::max(sup, (t * s->eval(x, t) - (m.project(x) - x)).norm());
    sups.push_back(sup);
    lt.push_back(std::log(t));
    ln.push_back(std::log(s->eval(off, t).norm()));
  }
  for (double s : sups) EXPECT_LT(s, 0.1);
  EXPECT_LE(sups.back(), sups.front() + 1e-12);
  const double slope = -fit_slope(lt, ln).first;
  EXPECT_GE(slope, 0.9);
  EXPECT_LE(slope, 1.1);
}

TEST(ScoreField, BatchMatchesPointwise) {
  Rng rng(19);
  const Manifold m = Manifold::circle(1.0, 2);
  const Cloud atoms = m.sample(SurfaceDensity::uniform(), rng, 17);
  const FieldPtr f = oracle_mixture_score(atoms);
  const FieldPtr p = make_perturbed(f, m, 0.1, ErrorKind::RandomSmooth, rng);
  const Mat x = 1.5 * Mat::Random(2, 40);
  for (const FieldPtr& g : {f, p}) {
    const Mat b = g->eval_batch(x, 0.05);
    for (Eigen::Index j = 0; j < x.cols(); ++j) EXPECT_LT((b.col(j) - g->eval(x.col(j), 0.05)).norm(), 1e-10);
  }
}
