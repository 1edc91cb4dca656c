#include "mfd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace mfd {

namespace {

constexpr double kPi = std::numbers::pi;

// Angle between two vectors of equal norm r, accurate near 0 and pi.
double arc_angle(const Eigen::Ref<const Vec>& u, const Eigen::Ref<const Vec>& v, double r) {
  double c = (u - v).norm() / (2.0 * r);
  return 2.0 * std::asin(std::min(1.0, c));
}

double unit_sphere_area(int m) {  // area of S^m in R^{m+1}
  return 2.0 * std::pow(kPi, 0.5 * (m + 1)) / std::tgamma(0.5 * (m + 1));
}

// Composite Simpson rule on [a, b] with n (even) intervals.
template <class F>
double simpson(F f, double a, double b, int n) {
  if (n % 2) ++n;
  double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

std::string SurfaceDensity::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Uniform: os << "uniform"; break;
    case Kind::VonMises: os << "von_mises(kappa=" << kappa << ",mean=" << mean_angle << ")"; break;
    case Kind::ProjectedNormal: os << "projected_normal(sigma=" << sigma_pn << ")"; break;
  }
  return os.str();
}

Mat nearest_rotation(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 1e-12 * std::max(1.0, s(0)))
    throw SingularInput("matrix is rank deficient");
  Mat u = svd.matrixU();
  if ((u * svd.matrixV().transpose()).determinant() < 0.0) u.col(u.cols() - 1) *= -1.0;
  return u * svd.matrixV().transpose();
}

double rotation_log_norm(const Mat& r) {
  const auto d = r.rows();
  if (d == 2) return std::sqrt(2.0) * std::abs(std::atan2(r(1, 0) - r(0, 1), r(0, 0) + r(1, 1)));
  if (d == 3) {
    Mat skew = 0.5 * (r - r.transpose());
    double s = skew.norm() / std::sqrt(2.0);
    double c = 0.5 * (r.trace() - 1.0);
    return std::sqrt(2.0) * std::atan2(s, c);
  }
  Mat l = r.log();
  return (0.5 * (l - l.transpose())).norm();
}

Mat haar_rotation(int d, Rng& rng) {
  Mat g(d, d);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = n01(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (rr(j, j) < 0.0) q.col(j) *= -1.0;
  if (q.determinant() < 0.0) q.col(0) *= -1.0;
  return q;
}

Manifold Manifold::circle(double radius, int ambient_dim) {
  if (radius <= 0.0 || ambient_dim < 2) throw InvalidArgument("circle needs radius > 0 and D >= 2");
  Manifold m;
  m.kind_ = ManifoldKind::Circle;
  m.k_ = 1;
  m.D_ = ambient_dim;
  m.r1_ = radius;
  m.reach_ = radius;
  return m;
}

Manifold Manifold::sphere(int k, double radius, int ambient_dim) {
  if (k < 1 || radius <= 0.0 || ambient_dim < k + 1)
    throw InvalidArgument("sphere needs k >= 1, radius > 0, D >= k+1");
  Manifold m;
  m.kind_ = ManifoldKind::Sphere;
  m.k_ = k;
  m.D_ = ambient_dim;
  m.r1_ = radius;
  m.reach_ = radius;
  return m;
}

Manifold Manifold::clifford_torus(double r1, double r2, int ambient_dim) {
  if (r1 <= 0.0 || r2 <= 0.0 || ambient_dim < 4) throw InvalidArgument("torus needs radii > 0 and D >= 4");
  Manifold m;
  m.kind_ = ManifoldKind::CliffordTorus;
  m.k_ = 2;
  m.D_ = ambient_dim;
  m.r1_ = r1;
  m.r2_ = r2;
  m.reach_ = std::min(r1, r2);
  return m;
}

Manifold Manifold::special_orthogonal(int d) {
  if (d < 2) throw InvalidArgument("SO(d) needs d >= 2");
  Manifold m;
  m.kind_ = ManifoldKind::SpecialOrthogonal;
  m.d_ = d;
  m.k_ = d * (d - 1) / 2;
  m.D_ = d * d;
  m.reach_ = m.probe_so_reach();
  return m;
}

std::string Manifold::name() const {
  std::ostringstream os;
  switch (kind_) {
    case ManifoldKind::Circle: os << "circle(r=" << r1_ << ",D=" << D_ << ")"; break;
    case ManifoldKind::Sphere: os << "sphere(k=" << k_ << ",r=" << r1_ << ",D=" << D_ << ")"; break;
    case ManifoldKind::CliffordTorus:
      os << "torus(r1=" << r1_ << ",r2=" << r2_ << ",D=" << D_ << ")";
      break;
    case ManifoldKind::SpecialOrthogonal: os << "so(" << d_ << ")"; break;
  }
  return os.str();
}

Mat Manifold::unflatten(const Vec& x) const {
  Mat m(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) m(i, j) = x[i * d_ + j];
  return m;
}

Vec Manifold::flatten(const Mat& m) const {
  Vec x(d_ * d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) x[i * d_ + j] = m(i, j);
  return x;
}

double Manifold::probe_so_reach() const {
  // Walk along random normal rays R(I + sN) and record where the nearest
  // rotation stops being R; halve the smallest hit as a safety margin.
  Rng rng(0x5eedULL + static_cast<unsigned>(d_));
  double best = 4.0;
  for (int probe = 0; probe < 64; ++probe) {
    Mat r = haar_rotation(d_, rng);
    Mat n(d_, d_);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j) n(i, j) = n01(rng);
    n = 0.5 * (n + n.transpose()).eval();
    n /= n.norm();
    auto moved = [&](double s) {
      try {
        return (nearest_rotation(r * (Mat::Identity(d_, d_) + s * n)) - r).norm() > 1e-6;
      } catch (const SingularInput&) {
        return true;
      }
    };
    double lo = 0.0, hi = -1.0;
    for (double s = 0.05; s <= best + 1e-12; s += 0.05) {
      if (moved(s)) { hi = s; break; }
      lo = s;
    }
    if (hi < 0.0) continue;
    for (int it = 0; it < 40; ++it) {
      double mid = 0.5 * (lo + hi);
      (moved(mid) ? hi : lo) = mid;
    }
    best = std::min(best, hi);
  }
  return 0.5 * best;
}

Vec Manifold::project_impl(const Vec& x, bool check) const {
  if (x.size() != D_) throw InvalidArgument("point has wrong ambient dimension");
  if (check) {
    double d = distance(x);
    if (!(d < reach_) && !on_outer_side(x))
      throw OutsideTube("distance " + std::to_string(d) + " >= reach " + std::to_string(reach_));
  }
  Vec y = Vec::Zero(D_);
  switch (kind_) {
    case ManifoldKind::Circle: {
      double rho = x.head<2>().norm();
      if (rho < 1e-300) throw OutsideTube("point on the medial axis");
      y.head<2>() = r1_ * x.head<2>() / rho;
      break;
    }
    case ManifoldKind::Sphere: {
      double rho = x.head(k_ + 1).norm();
      if (rho < 1e-300) throw OutsideTube("point on the medial axis");
      y.head(k_ + 1) = r1_ * x.head(k_ + 1) / rho;
      break;
    }
    case ManifoldKind::CliffordTorus: {
      double a = x.head<2>().norm(), b = x.segment<2>(2).norm();
      if (a < 1e-300 || b < 1e-300) throw OutsideTube("point on the medial axis");
      y.head<2>() = r1_ * x.head<2>() / a;
      y.segment<2>(2) = r2_ * x.segment<2>(2) / b;
      break;
    }
    case ManifoldKind::SpecialOrthogonal:
      y = flatten(nearest_rotation(unflatten(x)));
      break;
  }
  return y;
}

// Radially outside every curvature circle: the nearest point stays unique at
// any distance, so the reach bound does not apply.
bool Manifold::on_outer_side(const Vec& x) const {
  switch (kind_) {
    case ManifoldKind::Circle:
      return x.head<2>().norm() >= r1_;
    case ManifoldKind::Sphere:
      return x.head(k_ + 1).norm() >= r1_;
    case ManifoldKind::CliffordTorus:
      return x.head<2>().norm() >= r1_ && x.segment<2>(2).norm() >= r2_;
    case ManifoldKind::SpecialOrthogonal:
      return false;
  }
  return false;
}

Vec Manifold::project(const Vec& x) const { return project_impl(x, true); }
Vec Manifold::project_any(const Vec& x) const { return project_impl(x, false); }

double Manifold::distance(const Vec& x) const {
  if (x.size() != D_) throw InvalidArgument("point has wrong ambient dimension");
  switch (kind_) {
    case ManifoldKind::Circle: {
      double rho = x.head<2>().norm();
      return std::hypot(rho - r1_, x.tail(D_ - 2).norm());
    }
    case ManifoldKind::Sphere: {
      double rho = x.head(k_ + 1).norm();
      return std::hypot(rho - r1_, x.tail(D_ - k_ - 1).norm());
    }
    case ManifoldKind::CliffordTorus: {
      double a = x.head<2>().norm() - r1_, b = x.segment<2>(2).norm() - r2_;
      return std::sqrt(a * a + b * b + x.tail(D_ - 4).squaredNorm());
    }
    case ManifoldKind::SpecialOrthogonal: {
      Mat a = unflatten(x);
      Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Vec s = svd.singularValues();
      if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) s[d_ - 1] = -s[d_ - 1];
      return (s - Vec::Ones(d_)).norm();
    }
  }
  return 0.0;
}

Vec Manifold::checked_on_manifold(const Vec& y) const {
  double d = distance(y);
  if (d > kOnManifoldTol) throw NotOnManifold("point is " + std::to_string(d) + " from the manifold");
  return d == 0.0 ? y : project_any(y);
}

double Manifold::geodesic_distance(const Vec& y1in, const Vec& y2in) const {
  Vec y1 = checked_on_manifold(y1in), y2 = checked_on_manifold(y2in);
  switch (kind_) {
    case ManifoldKind::Circle:
      return r1_ * arc_angle(y1.head<2>(), y2.head<2>(), r1_);
    case ManifoldKind::Sphere:
      return r1_ * arc_angle(y1.head(k_ + 1), y2.head(k_ + 1), r1_);
    case ManifoldKind::CliffordTorus: {
      double a = r1_ * arc_angle(y1.head<2>(), y2.head<2>(), r1_);
      double b = r2_ * arc_angle(y1.segment<2>(2), y2.segment<2>(2), r2_);
      return std::hypot(a, b);
    }
    case ManifoldKind::SpecialOrthogonal:
      return rotation_log_norm(unflatten(y1).transpose() * unflatten(y2));
  }
  return 0.0;
}

Mat Manifold::tangent_basis(const Vec& yin) const {
  Vec y = checked_on_manifold(yin);
  Mat t = Mat::Zero(D_, k_);
  switch (kind_) {
    case ManifoldKind::Circle:
      t(0, 0) = -y[1] / r1_;
      t(1, 0) = y[0] / r1_;
      break;
    case ManifoldKind::Sphere: {
      Vec u = y.head(k_ + 1) / r1_;
      Eigen::HouseholderQR<Mat> qr{Mat(u)};
      Mat q = qr.householderQ();
      t.topRows(k_ + 1) = q.rightCols(k_);
      break;
    }
    case ManifoldKind::CliffordTorus:
      t(0, 0) = -y[1] / r1_;
      t(1, 0) = y[0] / r1_;
      t(2, 1) = -y[3] / r2_;
      t(3, 1) = y[2] / r2_;
      break;
    case ManifoldKind::SpecialOrthogonal: {
      Mat r = unflatten(y);
      int c = 0;
      for (int i = 0; i < d_; ++i)
        for (int j = i + 1; j < d_; ++j) {
          Mat e = Mat::Zero(d_, d_);
          e(i, j) = 1.0 / std::sqrt(2.0);
          e(j, i) = -1.0 / std::sqrt(2.0);
          t.col(c++) = flatten(r * e);
        }
      break;
    }
  }
  return t;
}

Mat Manifold::normal_basis(const Vec& yin) const {
  Vec y = checked_on_manifold(yin);
  Mat n = Mat::Zero(D_, D_ - k_);
  int c = 0;
  auto pad = [&](int from) {
    for (int i = from; i < D_; ++i) n(i, c++) = 1.0;
  };
  switch (kind_) {
    case ManifoldKind::Circle:
      n.col(c++).head<2>() = y.head<2>() / r1_;
      pad(2);
      break;
    case ManifoldKind::Sphere:
      n.col(c++).head(k_ + 1) = y.head(k_ + 1) / r1_;
      pad(k_ + 1);
      break;
    case ManifoldKind::CliffordTorus:
      n.col(c++).head<2>() = y.head<2>() / r1_;
      n.col(c++).segment<2>(2) = y.segment<2>(2) / r2_;
      pad(4);
      break;
    case ManifoldKind::SpecialOrthogonal: {
      Mat r = unflatten(y);
      for (int i = 0; i < d_; ++i)
        for (int j = i; j < d_; ++j) {
          Mat e = Mat::Zero(d_, d_);
          if (i == j) {
            e(i, i) = 1.0;
          } else {
            e(i, j) = e(j, i) = 1.0 / std::sqrt(2.0);
          }
          n.col(c++) = flatten(r * e);
        }
      break;
    }
  }
  return n;
}

double Manifold::angle_of(const Vec& y) const { return std::atan2(y[1], y[0]); }

Vec Manifold::circle_point(double angle) const {
  Vec y = Vec::Zero(D_);
  y[0] = r1_ * std::cos(angle);
  y[1] = r1_ * std::sin(angle);
  return y;
}

Cloud Manifold::sample(const SurfaceDensity& density, Rng& rng, std::size_t n) const {
  Cloud out;
  out.reserve(n);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  using K = SurfaceDensity::Kind;
  if (density.kind == K::VonMises && kind_ != ManifoldKind::Circle)
    throw Unsupported("von Mises density is defined on the circle only");
  if (density.kind == K::ProjectedNormal && kind_ != ManifoldKind::SpecialOrthogonal)
    throw Unsupported("projected normal density is defined on SO(d) only");
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind_) {
      case ManifoldKind::Circle: {
        double th = ang(rng);
        if (density.kind == K::VonMises) {
          while (uniform01(rng) > std::exp(density.kappa * (std::cos(th - density.mean_angle) - 1.0)))
            th = ang(rng);
        }
        out.push_back(circle_point(th));
        break;
      }
      case ManifoldKind::Sphere: {
        Vec y = Vec::Zero(D_);
        Vec g = gaussian_vec(rng, k_ + 1);
        y.head(k_ + 1) = r1_ * g / g.norm();
        out.push_back(y);
        break;
      }
      case ManifoldKind::CliffordTorus: {
        double a = ang(rng), b = ang(rng);
        Vec y = Vec::Zero(D_);
        y << r1_ * std::cos(a), r1_ * std::sin(a), r2_ * std::cos(b), r2_ * std::sin(b),
            Vec::Zero(D_ - 4);
        out.push_back(y);
        break;
      }
      case ManifoldKind::SpecialOrthogonal: {
        if (density.kind == K::ProjectedNormal) {
          Vec g = gaussian_vec(rng, D_);
          Mat a = Mat::Identity(d_, d_) + density.sigma_pn * unflatten(g);
          out.push_back(flatten(nearest_rotation(a)));
        } else {
          out.push_back(flatten(haar_rotation(d_, rng)));
        }
        break;
      }
    }
  }
  return out;
}

Cloud Manifold::sample_tube(Rng& rng, std::size_t n, double max_dist) const {
  Cloud base = sample(SurfaceDensity::uniform(), rng, n);
  const int codim = D_ - k_;
  for (auto& y : base) {
    Mat nb = normal_basis(y);
    Vec g = gaussian_vec(rng, codim);
    double r = max_dist * std::pow(uniform01(rng), 1.0 / codim);
    y += nb * (r * g / g.norm());
  }
  return base;
}

double Manifold::volume() const {
  switch (kind_) {
    case ManifoldKind::Circle: return 2.0 * kPi * r1_;
    case ManifoldKind::Sphere: return unit_sphere_area(k_) * std::pow(r1_, k_);
    case ManifoldKind::CliffordTorus: return 4.0 * kPi * kPi * r1_ * r2_;
    case ManifoldKind::SpecialOrthogonal:
      if (d_ == 2) return 2.0 * kPi * std::sqrt(2.0);
      if (d_ == 3) return 16.0 * std::sqrt(2.0) * kPi * kPi;
      break;
  }
  throw Unsupported("volume of " + name());
}

double Manifold::injectivity_radius() const {
  switch (kind_) {
    case ManifoldKind::Circle:
    case ManifoldKind::Sphere: return kPi * r1_;
    case ManifoldKind::CliffordTorus: return kPi * std::min(r1_, r2_);
    case ManifoldKind::SpecialOrthogonal:
      if (d_ <= 3) return kPi * std::sqrt(2.0);
      break;
  }
  throw Unsupported("injectivity radius of " + name());
}

double Manifold::geodesic_ball_volume(double delta) const {
  if (delta < 0.0) throw InvalidArgument("negative radius");
  if (delta > injectivity_radius() * (1.0 + 1e-12))
    throw BallTooLarge("radius exceeds the injectivity radius of " + name());
  switch (kind_) {
    case ManifoldKind::Circle: return 2.0 * delta;
    case ManifoldKind::Sphere: {
      if (k_ == 2) return 2.0 * kPi * r1_ * r1_ * (1.0 - std::cos(delta / r1_));
      double rk = std::pow(r1_, k_);
      return unit_sphere_area(k_ - 1) * rk *
             simpson([&](double th) { return std::pow(std::sin(th), k_ - 1); }, 0.0, delta / r1_, 4000);
    }
    case ManifoldKind::CliffordTorus:
      // Flat metric: integrate the chord length of the disc.
      return simpson([&](double u) { return 2.0 * std::sqrt(std::max(0.0, delta * delta - u * u)); },
                     -delta, delta, 20000);
    case ManifoldKind::SpecialOrthogonal: {
      if (d_ == 2) return 2.0 * delta;
      double th = delta / std::sqrt(2.0);
      return volume() * (th - std::sin(th)) / kPi;
    }
  }
  return 0.0;
}

Cloud Manifold::geodesic_net(double spacing) const {
  if (spacing <= 0.0) throw InvalidArgument("net spacing must be positive");
  Cloud out;
  switch (kind_) {
    case ManifoldKind::Circle: {
      int n = static_cast<int>(std::ceil(2.0 * kPi * r1_ / spacing));
      for (int i = 0; i < n; ++i) out.push_back(circle_point(2.0 * kPi * i / n));
      return out;
    }
    case ManifoldKind::CliffordTorus: {
      int n1 = static_cast<int>(std::ceil(2.0 * kPi * r1_ / spacing));
      int n2 = static_cast<int>(std::ceil(2.0 * kPi * r2_ / spacing));
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
          double a = 2.0 * kPi * i / n1, b = 2.0 * kPi * j / n2;
          Vec y = Vec::Zero(D_);
          y << r1_ * std::cos(a), r1_ * std::sin(a), r2_ * std::cos(b), r2_ * std::sin(b),
              Vec::Zero(D_ - 4);
          out.push_back(y);
        }
      return out;
    }
    case ManifoldKind::Sphere: {
      if (k_ != 2) break;
      // Fibonacci lattice; cell area area/n, oversampled so gaps stay below spacing.
      int n = static_cast<int>(std::ceil(2.0 * 4.0 * kPi * r1_ * r1_ / (spacing * spacing)));
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < n; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / n;
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec y = Vec::Zero(D_);
        y[0] = r1_ * rho * std::cos(golden * i);
        y[1] = r1_ * rho * std::sin(golden * i);
        y[2] = r1_ * z;
        out.push_back(y);
      }
      return out;
    }
    case ManifoldKind::SpecialOrthogonal: break;
  }
  throw Unsupported("geodesic net on " + name());
}

QuadratureNet Manifold::quadrature_net(int resolution) const {
  if (resolution < 1) throw InvalidArgument("resolution must be positive");
  QuadratureNet q;
  switch (kind_) {
    case ManifoldKind::Circle: {
      for (int i = 0; i < resolution; ++i) q.points.push_back(circle_point(2.0 * kPi * i / resolution));
      q.spacing = 2.0 * kPi * r1_ / resolution;
      break;
    }
    case ManifoldKind::CliffordTorus: {
      int n = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(resolution))));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double a = 2.0 * kPi * i / n, b = 2.0 * kPi * j / n;
          Vec y = Vec::Zero(D_);
          y << r1_ * std::cos(a), r1_ * std::sin(a), r2_ * std::cos(b), r2_ * std::sin(b),
              Vec::Zero(D_ - 4);
          q.points.push_back(y);
        }
      q.spacing = 2.0 * kPi * std::max(r1_, r2_) / n;
      break;
    }
    case ManifoldKind::Sphere: {
      if (k_ != 2) throw Unsupported("quadrature net on " + name());
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < resolution; ++i) {
        double z = 1.0 - (2.0 * i + 1.0) / resolution;
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec y = Vec::Zero(D_);
        y[0] = r1_ * rho * std::cos(golden * i);
        y[1] = r1_ * rho * std::sin(golden * i);
        y[2] = r1_ * z;
        q.points.push_back(y);
      }
      q.spacing = 2.0 * r1_ * std::sqrt(4.0 * kPi / resolution);
      break;
    }
    case ManifoldKind::SpecialOrthogonal: throw Unsupported("quadrature net on " + name());
  }
  q.volumes.assign(q.points.size(), volume() / static_cast<double>(q.points.size()));
  return q;
}

double Manifold::density_at(const SurfaceDensity& density, const Vec& y) const {
  using K = SurfaceDensity::Kind;
  switch (density.kind) {
    case K::Uniform: return 1.0 / volume();
    case K::VonMises: {
      if (kind_ != ManifoldKind::Circle) throw Unsupported("von Mises density off the circle");
      double th = angle_of(y);
      return std::exp(density.kappa * std::cos(th - density.mean_angle)) /
             (2.0 * kPi * std::cyl_bessel_i(0.0, density.kappa) * r1_);
    }
    case K::ProjectedNormal: break;
  }
  throw Unsupported("closed-form density for " + density.name());
}

std::pair<double, double> Manifold::density_bounds(const SurfaceDensity& density, Rng& rng) const {
  using K = SurfaceDensity::Kind;
  switch (density.kind) {
    case K::Uniform: return {1.0 / volume(), 1.0 / volume()};
    case K::VonMises: {
      double z = 2.0 * kPi * std::cyl_bessel_i(0.0, density.kappa) * r1_;
      return {std::exp(-density.kappa) / z, std::exp(density.kappa) / z};
    }
    case K::ProjectedNormal: {
      // Ball-count density estimates at Haar probes and at typical points.
      const double delta = 0.5;
      const std::size_t m = 20000;
      Cloud draws = sample(density, rng, m);
      Cloud probes = sample(SurfaceDensity::uniform(), rng, 32);
      Cloud typical = sample(density, rng, 32);
      probes.insert(probes.end(), typical.begin(), typical.end());
      double vol = geodesic_ball_volume(delta);
      double lo = 1e300, hi = 0.0;
      for (const auto& p : probes) {
        std::size_t cnt = 0;
        for (const auto& x : draws)
          if (geodesic_distance(p, x) <= delta) ++cnt;
        double est = static_cast<double>(cnt) / m / vol;
        lo = std::min(lo, est);
        hi = std::max(hi, est);
      }
      return {std::max(lo, 1.0 / (m * vol)), hi};
    }
  }
  return {0.0, 0.0};
}

}  // namespace mfd
