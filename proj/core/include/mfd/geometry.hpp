#pragma once

#include <string>
#include <utility>

#include "mfd/errors.hpp"
#include "mfd/types.hpp"

namespace mfd {

enum class ManifoldKind { Circle, Sphere, CliffordTorus, SpecialOrthogonal };

struct SurfaceDensity {
  enum class Kind { Uniform, VonMises, ProjectedNormal };
  Kind kind = Kind::Uniform;
  double kappa = 0.0;       // von Mises concentration
  double mean_angle = 0.0;  // von Mises mean direction
  double sigma_pn = 0.0;    // projected-normal spread on SO(d)

  static SurfaceDensity uniform() { return {}; }
  static SurfaceDensity von_mises(double kappa, double mean_angle) {
    return {Kind::VonMises, kappa, mean_angle, 0.0};
  }
  static SurfaceDensity projected_normal(double sigma) {
    return {Kind::ProjectedNormal, 0.0, 0.0, sigma};
  }
  std::string name() const;
};

// Points and volume weights covering a manifold; `spacing` bounds the
// distance between neighbouring nodes.
struct QuadratureNet {
  Cloud points;
  std::vector<double> volumes;
  double spacing = 0.0;
};

class Manifold {
 public:
  static constexpr double kOnManifoldTol = 1e-9;

  static Manifold circle(double radius, int ambient_dim = 2);
  static Manifold sphere(int k, double radius, int ambient_dim);
  static Manifold clifford_torus(double r1, double r2, int ambient_dim = 4);
  static Manifold special_orthogonal(int d);

  ManifoldKind kind() const { return kind_; }
  int intrinsic_dim() const { return k_; }
  int ambient_dim() const { return D_; }
  double reach() const { return reach_; }
  // True when reach() is a probed lower bound rather than an exact value.
  bool reach_is_numeric() const { return kind_ == ManifoldKind::SpecialOrthogonal; }
  double radius() const { return r1_; }
  double radius2() const { return r2_; }
  int so_dim() const { return d_; }
  std::string name() const;

  // Nearest point. Throws OutsideTube when dist >= reach on the concave side
  // (outer-side points keep a unique nearest point) and SingularInput
  // for rank-deficient SO(d) input.
  Vec project(const Vec& x) const;
  // Nearest point without the tube check; throws only where the nearest
  // point is undefined.
  Vec project_any(const Vec& x) const;
  double distance(const Vec& x) const;
  double eta_star(const Vec& x) const { double d = distance(x); return 0.5 * d * d; }
  bool in_tube(const Vec& x, double radius) const { return distance(x) < radius; }

  double geodesic_distance(const Vec& y1, const Vec& y2) const;
  Mat tangent_basis(const Vec& y) const;
  Mat normal_basis(const Vec& y) const;

  Cloud sample(const SurfaceDensity& density, Rng& rng, std::size_t n) const;
  // Uniform base point plus a normal offset of length below max_dist.
  Cloud sample_tube(Rng& rng, std::size_t n, double max_dist) const;

  double volume() const;
  double injectivity_radius() const;
  double geodesic_ball_volume(double delta) const;
  // Deterministic net whose neighbouring nodes are at most `spacing` apart.
  Cloud geodesic_net(double spacing) const;
  QuadratureNet quadrature_net(int resolution) const;

  // Density of `density` with respect to the volume measure at y.
  double density_at(const SurfaceDensity& density, const Vec& y) const;
  // (p_min, p_max); Monte Carlo bracket when no closed form exists.
  std::pair<double, double> density_bounds(const SurfaceDensity& density, Rng& rng) const;

  // Angle of a point's first coordinate pair (circle parametrisation).
  double angle_of(const Vec& y) const;
  Vec circle_point(double angle) const;

  // Flattening helpers for SO(d) (row-major).
  Mat unflatten(const Vec& x) const;
  Vec flatten(const Mat& m) const;

 private:
  Manifold() = default;
  Vec checked_on_manifold(const Vec& y) const;
  Vec project_impl(const Vec& x, bool check) const;
  bool on_outer_side(const Vec& x) const;
  double probe_so_reach() const;

  ManifoldKind kind_ = ManifoldKind::Circle;
  int k_ = 1;
  int D_ = 2;
  int d_ = 0;
  double r1_ = 1.0;
  double r2_ = 1.0;
  double reach_ = 1.0;
};

// Haar-distributed rotation via QR of a Gaussian matrix with sign fix.
Mat haar_rotation(int d, Rng& rng);
// Polar factor of a d x d matrix with determinant correction.
Mat nearest_rotation(const Mat& a);
// Frobenius norm of the principal logarithm of a rotation.
double rotation_log_norm(const Mat& r);

}  // namespace mfd
