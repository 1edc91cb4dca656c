#pragma once

#include <memory>
#include <optional>
#include <string>

#include "mfd/geometry.hpp"
#include "mfd/nn.hpp"

namespace mfd {

// Region on which a potential-class score is active: a tube around a known
// manifold, a union of balls around anchors, or all of R^D.
class Domain {
 public:
  static Domain everywhere() { return Domain(); }
  static Domain tube(const Manifold& m, double radius);
  static Domain balls(Cloud anchors, double radius);

  bool contains(const Vec& x) const;
  bool is_balls() const { return !anchors_.empty(); }
  const Cloud& anchors() const { return anchors_; }
  double radius() const { return radius_; }

 private:
  std::optional<Manifold> manifold_;
  Cloud anchors_;
  Mat anchor_mat_;
  double radius_ = 0.0;
};

// Scalar potential eta: R^D -> R with derivative access.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual int dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  // Central differences of the gradient by default.
  virtual Mat hessian(const Vec& x) const;
  virtual std::string describe() const = 0;
};

using PotentialPtr = std::shared_ptr<const Potential>;

// eta*(x) = dist(x, M)^2 / 2 with gradient x - proj(x).
PotentialPtr squared_distance_potential(const Manifold& m);
PotentialPtr zero_potential(int dim);
// |x - c|^2 / 2.
PotentialPtr quadratic_potential(const Vec& center);

// eta(x) = base(x) + g(x) for an MLP g with zero-initialised head.
class NetworkPotential : public Potential {
 public:
  NetworkPotential(PotentialPtr base, int dim, const std::vector<int>& hidden, Rng& rng);
  int dim() const override { return dim_; }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  std::string describe() const override;

  Vec values(const Mat& x) const;
  // Accumulates d(sum_j dvalue_j * eta(x_j))/dtheta.
  void backward(const Mat& x, const Vec& dvalue, Grads& grads) const;
  Mlp& mlp() { return mlp_; }
  const Mlp& mlp() const { return mlp_; }
  const PotentialPtr& base() const { return base_; }

 private:
  PotentialPtr base_;
  int dim_;
  Mlp mlp_;
};

}  // namespace mfd
