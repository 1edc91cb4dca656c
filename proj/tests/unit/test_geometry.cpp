#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>

#include "mfd/errors.hpp"
#include "mfd/geometry.hpp"

using namespace mfd;
using std::numbers::pi;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

Mat rot_z(double th) {
  Mat r = Mat::Identity(3, 3);
  r(0, 0) = std::cos(th);
  r(0, 1) = -std::sin(th);
  r(1, 0) = std::sin(th);
  r(1, 1) = std::cos(th);
  return r;
}

std::vector<Manifold> exact_reach_manifolds() {
  return {Manifold::circle(1.0, 2), Manifold::circle(2.0, 3), Manifold::sphere(2, 1.0, 3),
          Manifold::clifford_torus(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 4)};
}

}  // namespace

TEST(Project, CircleRadial) {
  const Manifold m = Manifold::circle(1.0, 2);
  EXPECT_LT((m.project(v2(2, 0)) - v2(1, 0)).norm(), 1e-15);
}

TEST(Project, CircleAxisIsMedial) {
  const Manifold m = Manifold::circle(1.0, 3);
  EXPECT_THROW(m.project(v3(0, 0, 0.5)), OutsideTube);
}

TEST(Project, ScaledIdentityOnSO3) {
  const Manifold m = Manifold::special_orthogonal(3);
  const Mat a = 1.1 * Mat::Identity(3, 3);
  // Oracle: polar factor U V^T from an independent SVD.
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat polar = svd.matrixU() * svd.matrixV().transpose();
  const Mat got = m.unflatten(m.project(m.flatten(a)));
  EXPECT_LT((got - polar).norm(), 1e-12);
  EXPECT_LT((got - Mat::Identity(3, 3)).norm(), 1e-12);
}

TEST(Project, SO3MatchesPolarFactorOnRandomInput) {
  const Manifold m = Manifold::special_orthogonal(3);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Mat a = haar_rotation(3, rng) + 0.1 * Mat::Random(3, 3);
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat u = svd.matrixU();
    if ((u * svd.matrixV().transpose()).determinant() < 0) u.col(2) *= -1.0;
    const Mat polar = u * svd.matrixV().transpose();
    EXPECT_LT((m.unflatten(m.project(m.flatten(a))) - polar).norm(), 1e-10);
  }
}

TEST(Distance, Examples) {
  const Manifold c = Manifold::circle(1.0, 2);
  EXPECT_NEAR(c.distance(v2(2, 0)), 1.0, 1e-15);
  EXPECT_NEAR(c.eta_star(v2(2, 0)), 0.5, 1e-15);
  EXPECT_NEAR(Manifold::sphere(2, 1.0, 3).distance(Vec::Zero(3)), 1.0, 1e-15);

  const Manifold so2 = Manifold::special_orthogonal(2);
  const double th = 0.7;
  Mat r(2, 2);
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  // Frobenius distance from 2R to R is |2 - 1| * sqrt(2).
  EXPECT_NEAR(so2.distance(so2.flatten(2.0 * r)), std::sqrt(2.0), 1e-12);
}

TEST(GeodesicDistance, Examples) {
  const Manifold c2 = Manifold::circle(2.0, 2);
  EXPECT_NEAR(c2.geodesic_distance(v2(2, 0), v2(-2, 0)), 2.0 * pi, 1e-12);
  const Manifold s = Manifold::sphere(2, 1.0, 3);
  EXPECT_NEAR(s.geodesic_distance(v3(1, 0, 0), v3(0, 1, 0)), pi / 2.0, 1e-12);
  const Manifold so3 = Manifold::special_orthogonal(3);
  for (double th : {0.1, 1.0, 2.5}) {
    EXPECT_NEAR(so3.geodesic_distance(so3.flatten(Mat::Identity(3, 3)), so3.flatten(rot_z(th))), std::sqrt(2.0) * th,
                1e-10);
  }
}

TEST(TangentBasis, Examples) {
  const Manifold c = Manifold::circle(1.0, 2);
  const Mat t = c.tangent_basis(v2(1, 0));
  ASSERT_EQ(t.cols(), 1);
  EXPECT_NEAR(std::abs(t(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(t(0, 0), 0.0, 1e-14);

  const Manifold s = Manifold::sphere(2, 1.0, 3);
  const Mat ts = s.tangent_basis(v3(0, 0, 1));
  Mat expected = Mat::Zero(3, 3);
  expected(0, 0) = expected(1, 1) = 1.0;
  EXPECT_LT((ts * ts.transpose() - expected).norm(), 1e-12);

  const Manifold so2 = Manifold::special_orthogonal(2);
  const Mat tso = so2.tangent_basis(so2.flatten(Mat::Identity(2, 2)));
  Vec gen(4);
  gen << 0, -1, 1, 0;
  gen /= std::sqrt(2.0);
  EXPECT_NEAR(std::abs(tso.col(0).dot(gen)), 1.0, 1e-12);
}

TEST(TangentBasis, OrthonormalAndOrthogonalToNormal) {
  Rng rng(1);
  for (const Manifold& m : exact_reach_manifolds()) {
    for (const Vec& y : m.sample(SurfaceDensity::uniform(), rng, 20)) {
      const Mat t = m.tangent_basis(y);
      const Mat n = m.normal_basis(y);
      EXPECT_EQ(t.cols(), m.intrinsic_dim());
      EXPECT_LT((t.transpose() * t - Mat::Identity(t.cols(), t.cols())).norm(), 1e-12) << m.name();
      EXPECT_LT((t.transpose() * n).norm(), 1e-12) << m.name();
    }
  }
}

TEST(Sample, UniformCircleUnitNorm) {
  const Manifold m = Manifold::circle(1.0, 2);
  Rng rng(42);
  const Cloud pts = m.sample(SurfaceDensity::uniform(), rng, 4);
  ASSERT_EQ(pts.size(), 4u);
  for (const Vec& p : pts) EXPECT_NEAR(p.norm(), 1.0, 1e-15);
}

TEST(Sample, HaarSO3IsOrthogonal) {
  const Manifold m = Manifold::special_orthogonal(3);
  Rng rng(7);
  for (const Vec& p : m.sample(SurfaceDensity::uniform(), rng, 100)) {
    const Mat r = m.unflatten(p);
    EXPECT_LT((r.transpose() * r - Mat::Identity(3, 3)).norm(), 1e-10);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-10);
  }
}

TEST(Sample, VonMisesGoodnessOfFit) {
  const double kappa = 2.0, mu = 0.3;
  const Manifold m = Manifold::circle(1.0, 2);
  Rng rng(11);
  const int n = 20000, bins = 24;
  std::vector<int> counts(bins, 0);
  for (const Vec& p : m.sample(SurfaceDensity::von_mises(kappa, mu), rng, n)) {
    double a = std::atan2(p[1], p[0]);
    if (a < 0) a += 2 * pi;
    counts[std::min(bins - 1, static_cast<int>(a / (2 * pi) * bins))]++;
  }
  // Oracle: Simpson integration of the von Mises density per bin.
  const double norm = 2 * pi * std::cyl_bessel_i(0.0, kappa);
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double lo = 2 * pi * b / bins, hi = 2 * pi * (b + 1) / bins;
    const int s = 200;
    double acc = 0.0;
    for (int i = 0; i <= s; ++i) {
      const double w = (i == 0 || i == s) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * std::exp(kappa * std::cos(lo + (hi - lo) * i / s - mu));
    }
    const double expected = n * acc * (hi - lo) / (3.0 * s) / norm;
    chi2 += (counts[b] - expected) * (counts[b] - expected) / expected;
  }
  const boost::math::chi_squared dist(bins - 1);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.01) << "chi2 = " << chi2;
}

TEST(GeodesicBallVolume, Examples) {
  EXPECT_NEAR(Manifold::circle(1.0, 2).geodesic_ball_volume(0.1), 0.2, 1e-15);
  EXPECT_NEAR(Manifold::sphere(2, 1.0, 3).geodesic_ball_volume(pi), 4 * pi, 1e-12);
}

TEST(GeodesicBallVolume, FlatTorusMatchesMonteCarlo) {
  const Manifold m = Manifold::clifford_torus(1.0, 1.0, 4);
  const double delta = 0.3;
  Rng rng(5);
  const Vec c = m.sample(SurfaceDensity::uniform(), rng, 1).front();
  const int n = 200000;
  int hits = 0;
  for (const Vec& p : m.sample(SurfaceDensity::uniform(), rng, n)) hits += m.geodesic_distance(c, p) <= delta;
  const double mc = m.volume() * hits / n;
  EXPECT_NEAR(m.geodesic_ball_volume(delta), pi * delta * delta, 0.02 * pi * delta * delta);
  EXPECT_NEAR(mc, pi * delta * delta, 0.02 * pi * delta * delta);
}

TEST(GeometryInvariants, Idempotence) {
  Rng rng(2);
  auto all = exact_reach_manifolds();
  all.push_back(Manifold::special_orthogonal(3));
  for (const Manifold& m : all) {
    for (const Vec& x : m.sample_tube(rng, 10000, 0.5 * m.reach())) {
      const Vec p = m.project(x);
      ASSERT_LT((m.project(p) - p).norm(), 1e-9) << m.name();
    }
  }
}

TEST(GeometryInvariants, PythagorasAndReachInequality) {
  Rng rng(3);
  for (const Manifold& m : exact_reach_manifolds()) {
    const Cloud ys = m.sample(SurfaceDensity::uniform(), rng, 200);
    for (const Vec& x : m.sample_tube(rng, 200, 0.9 * m.reach())) {
      const Vec p = m.project(x);
      const double d = m.distance(x);
      EXPECT_NEAR((x - p).norm(), d, 1e-12);
      for (const Vec& y : ys) {
        ASSERT_GE((x - y).squaredNorm(), d * d - 1e-9) << m.name();
        const double lhs = (x - p).dot(y - p);
        const double rhs = d / (2.0 * m.reach()) * (y - p).squaredNorm();
        ASSERT_LE(lhs, rhs + 1e-9) << m.name();
      }
    }
  }
}

TEST(GeometryInvariants, ChordArcAndProjectionDisplacement) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const Manifold& m : exact_reach_manifolds()) {
    const double z = m.reach();
    const Cloud ys = m.sample(SurfaceDensity::uniform(), rng, 500);
    for (const Vec& y : ys) {
      Vec dir = gaussian_vec(rng, m.ambient_dim());
      const Vec v = dir.normalized() * (0.499 * z * u(rng));
      ASSERT_LE((m.project(y + v) - y).norm(), 2.0 * v.norm() + 1e-12) << m.name();
      // Chord-arc on nearby pairs.
      const Vec w = m.project(y + m.tangent_basis(y) * gaussian_vec(rng, m.intrinsic_dim()).normalized() *
                                      (0.3 * z * u(rng)));
      if ((y - w).norm() <= z / 2.0) ASSERT_LE(m.geodesic_distance(y, w), 2.0 * (y - w).norm() + 1e-12) << m.name();
    }
  }
}

TEST(GeometryInvariants, OnManifoldToleranceReprojectsSilently) {
  const Manifold m = Manifold::circle(1.0, 2);
  const Vec y = v2(1.0 + 1e-11, 0.0);
  EXPECT_NO_THROW(m.tangent_basis(y));
  EXPECT_THROW(m.tangent_basis(v2(1.1, 0.0)), NotOnManifold);
}

TEST(GeometryInvariants, SOReachIsAPositiveLowerBound) {
  const Manifold m = Manifold::special_orthogonal(3);
  EXPECT_TRUE(m.reach_is_numeric());
  EXPECT_GT(m.reach(), 0.0);
  // Medial point: a rank-deficient matrix sits at distance 1 from SO(3) along
  // the flattening of diag(1, 1, 0); the reach cannot exceed it.
  Mat a = Mat::Identity(3, 3);
  a(2, 2) = 0.0;
  EXPECT_LE(m.reach(), m.distance(m.flatten(a)) + 1e-9);
}
