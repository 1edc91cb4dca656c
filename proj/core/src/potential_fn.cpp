#include "mfd/potential_fn.hpp"

#include <sstream>

namespace mfd {

Domain Domain::tube(const Manifold& m, double radius) {
  Domain d;
  d.manifold_ = m;
  d.radius_ = radius;
  return d;
}

Domain Domain::balls(Cloud anchors, double radius) {
  if (anchors.empty()) throw InvalidArgument("ball domain needs anchors");
  Domain d;
  d.anchor_mat_ = to_matrix(anchors);
  d.anchors_ = std::move(anchors);
  d.radius_ = radius;
  return d;
}

bool Domain::contains(const Vec& x) const {
  if (manifold_) return manifold_->distance(x) < radius_;
  if (!anchors_.empty()) return (anchor_mat_.colwise() - x).colwise().squaredNorm().minCoeff() < radius_ * radius_;
  return true;
}

Mat Potential::hessian(const Vec& x) const {
  const int d = dim();
  const double h = 1e-5;
  Mat hs(d, d);
  for (int i = 0; i < d; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    hs.col(i) = (gradient(xp) - gradient(xm)) / (2.0 * h);
  }
  return 0.5 * (hs + hs.transpose());
}

namespace {

class SquaredDistance : public Potential {
 public:
  explicit SquaredDistance(Manifold m) : m_(std::move(m)) {}
  int dim() const override { return m_.ambient_dim(); }
  double value(const Vec& x) const override { return m_.eta_star(x); }
  Vec gradient(const Vec& x) const override { return x - m_.project_any(x); }
  std::string describe() const override { return "eta_star[" + m_.name() + "]"; }

 private:
  Manifold m_;
};

class Zero : public Potential {
 public:
  explicit Zero(int d) : d_(d) {}
  int dim() const override { return d_; }
  double value(const Vec&) const override { return 0.0; }
  Vec gradient(const Vec&) const override { return Vec::Zero(d_); }
  Mat hessian(const Vec&) const override { return Mat::Zero(d_, d_); }
  std::string describe() const override { return "zero"; }

 private:
  int d_;
};

class Quadratic : public Potential {
 public:
  explicit Quadratic(Vec c) : c_(std::move(c)) {}
  int dim() const override { return static_cast<int>(c_.size()); }
  double value(const Vec& x) const override { return 0.5 * (x - c_).squaredNorm(); }
  Vec gradient(const Vec& x) const override { return x - c_; }
  Mat hessian(const Vec&) const override { return Mat::Identity(dim(), dim()); }
  std::string describe() const override { return "quadratic"; }

 private:
  Vec c_;
};

}  // namespace

PotentialPtr squared_distance_potential(const Manifold& m) { return std::make_shared<SquaredDistance>(m); }
PotentialPtr zero_potential(int dim) { return std::make_shared<Zero>(dim); }
PotentialPtr quadratic_potential(const Vec& center) { return std::make_shared<Quadratic>(center); }

NetworkPotential::NetworkPotential(PotentialPtr base, int dim, const std::vector<int>& hidden, Rng& rng)
    : base_(base ? std::move(base) : zero_potential(dim)), dim_(dim), mlp_(dim, hidden, 1, rng) {}

Vec NetworkPotential::values(const Mat& x) const {
  Vec v = mlp_.forward(x).row(0).transpose();
  for (Eigen::Index j = 0; j < x.cols(); ++j) v[j] += base_->value(x.col(j));
  return v;
}

double NetworkPotential::value(const Vec& x) const { return values(Mat(x))[0]; }

Vec NetworkPotential::gradient(const Vec& x) const {
  Grads scratch = mlp_.zero_grads();
  Mat dx = mlp_.backward(Mat(x), Mat::Ones(1, 1), scratch);
  return base_->gradient(x) + dx.col(0);
}

void NetworkPotential::backward(const Mat& x, const Vec& dvalue, Grads& grads) const {
  mlp_.backward(x, dvalue.transpose(), grads);
}

std::string NetworkPotential::describe() const {
  std::ostringstream os;
  os << "network(base=" << base_->describe() << ")";
  return os.str();
}

}  // namespace mfd
