#include "mfd/score.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace mfd {

Mat ScoreField::eval_batch(const Mat& x, double t) const {
  Mat out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = eval(x.col(j), t);
  return out;
}

namespace {

class OracleMixture : public ScoreField {
 public:
  OracleMixture(Mat atoms, Vec weights, NoiseSchedule sch)
      : atoms_(std::move(atoms)), log_w_(weights.array().log()), sch_(sch) {
    if (atoms_.cols() == 0 || atoms_.cols() != weights.size()) throw InvalidArgument("oracle needs weighted atoms");
  }
  int dim() const override { return static_cast<int>(atoms_.rows()); }
  Vec eval(const Vec& x, double t) const override {
    ScheduleValues v = sch_.eval(t);
    Mat diff = (v.alpha * atoms_).colwise() - x;
    Vec l = log_w_ - diff.colwise().squaredNorm().transpose() / (2.0 * v.var);
    Vec w = (l.array() - l.maxCoeff()).exp();
    w /= w.sum();
    return (v.alpha * (atoms_ * w) - x) / v.var;
  }
  Mat eval_batch(const Mat& x, double t) const override {
    ScheduleValues v = sch_.eval(t);
    // |alpha a_i - x_j|^2 up to the per-column constant |x_j|^2, which cancels in the softmax.
    Mat l = (2.0 * v.alpha) * (atoms_.transpose() * x);
    l.colwise() -= (v.alpha * v.alpha) * atoms_.colwise().squaredNorm().transpose();
    l /= 2.0 * v.var;
    l.colwise() += log_w_;
    for (Eigen::Index j = 0; j < l.cols(); ++j) {
      auto c = l.col(j);
      c = (c.array() - c.maxCoeff()).exp();
      c /= c.sum();
    }
    return (v.alpha * (atoms_ * l) - x) / v.var;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "oracle_mixture(n=" << atoms_.cols() << "," << sch_.describe() << ")";
    return os.str();
  }

 private:
  Mat atoms_;
  Vec log_w_;
  NoiseSchedule sch_;
};

class Projection : public ScoreField {
 public:
  Projection(Manifold m, Domain dom) : m_(std::move(m)), dom_(std::move(dom)) {}
  int dim() const override { return m_.ambient_dim(); }
  Vec eval(const Vec& x, double t) const override {
    if (!dom_.contains(x)) return Vec::Zero(x.size());
    try {
      return -(x - m_.project_any(x)) / t;
    } catch (const Error&) {
      return Vec::Zero(x.size());
    }
  }
  std::string describe() const override { return "projection[" + m_.name() + "]"; }

 private:
  Manifold m_;
  Domain dom_;
};

class PotentialField : public ScoreField {
 public:
  PotentialField(PotentialPtr eta, Domain dom) : eta_(std::move(eta)), dom_(std::move(dom)) {}
  int dim() const override { return eta_->dim(); }
  Vec eval(const Vec& x, double t) const override {
    if (!dom_.contains(x)) return Vec::Zero(x.size());
    return -eta_->gradient(x) / t;
  }
  std::string describe() const override { return "potential[" + eta_->describe() + "]"; }

 private:
  PotentialPtr eta_;
  Domain dom_;
};

class Learned : public ScoreField {
 public:
  explicit Learned(std::shared_ptr<const ScoreNet> net) : net_(std::move(net)) {}
  int dim() const override { return net_->config().input_dim; }
  Vec eval(const Vec& x, double t) const override { return net_->forward(x, t); }
  Mat eval_batch(const Mat& x, double t) const override {
    return net_->forward(x, Vec::Constant(x.cols(), t));
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "learned(hidden=" << net_->config().hidden << ",blocks=" << net_->config().n_blocks << ")";
    return os.str();
  }

 private:
  std::shared_ptr<const ScoreNet> net_;
};

class Zero : public ScoreField {
 public:
  explicit Zero(int d) : d_(d) {}
  int dim() const override { return d_; }
  Vec eval(const Vec& x, double) const override { return Vec::Zero(x.size()); }
  std::string describe() const override { return "zero"; }

 private:
  int d_;
};

class Switched : public ScoreField {
 public:
  Switched(FieldPtr large, FieldPtr small, double ts) : large_(std::move(large)), small_(std::move(small)), ts_(ts) {}
  int dim() const override { return large_->dim(); }
  Vec eval(const Vec& x, double t) const override { return t > ts_ ? large_->eval(x, t) : small_->eval(x, t); }
  Mat eval_batch(const Mat& x, double t) const override {
    return t > ts_ ? large_->eval_batch(x, t) : small_->eval_batch(x, t);
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "switched(" << large_->describe() << " | t<=" << ts_ << ": " << small_->describe() << ")";
    return os.str();
  }

 private:
  FieldPtr large_, small_;
  double ts_;
};

class Custom : public ScoreField {
 public:
  Custom(int d, std::function<Vec(const Vec&, double)> fn, std::string name)
      : d_(d), fn_(std::move(fn)), name_(std::move(name)) {}
  int dim() const override { return d_; }
  Vec eval(const Vec& x, double t) const override { return fn_(x, t); }
  std::string describe() const override { return name_; }

 private:
  int d_;
  std::function<Vec(const Vec&, double)> fn_;
  std::string name_;
};

// Sum of J random sinusoids, normalised so its sup-norm is at most 1.
struct SmoothField {
  Mat dirs;   // out x J (unit columns)
  Mat freqs;  // D x J
  Vec phase;
  Vec amp;

  SmoothField(int in_dim, int out_dim, int terms, double scale, Rng& rng)
      : dirs(out_dim, terms), freqs(in_dim, terms), phase(terms), amp(terms) {
    std::uniform_real_distribution<double> u(0.5, 1.0), ph(0.0, 2.0 * std::numbers::pi);
    for (int j = 0; j < terms; ++j) {
      Vec d = gaussian_vec(rng, out_dim);
      dirs.col(j) = d / d.norm();
      freqs.col(j) = scale * gaussian_vec(rng, in_dim);
      phase[j] = ph(rng);
      amp[j] = u(rng);
    }
    amp /= amp.sum();
  }
  Vec operator()(const Vec& x) const {
    Vec s = ((freqs.transpose() * x) + phase).array().sin();
    return dirs * amp.cwiseProduct(s);
  }
};

class Perturbed : public ScoreField {
 public:
  Perturbed(FieldPtr base, Manifold m, double eps, ErrorKind kind, Rng& rng)
      : base_(std::move(base)), m_(std::move(m)), eps_(eps), kind_(kind),
        smooth_(m_.ambient_dim(), kind == ErrorKind::Normal ? 1 : m_.ambient_dim(), 8, 1.5, rng) {
    Vec v = gaussian_vec(rng, m_.ambient_dim());
    dir_ = v / v.norm();
    Vec c = gaussian_vec(rng, m_.intrinsic_dim());
    coef_ = c / c.norm();
  }
  int dim() const override { return base_->dim(); }

  Vec error(const Vec& x) const {
    const int d = m_.ambient_dim();
    switch (kind_) {
      case ErrorKind::ConstantDirection: return eps_ * dir_;
      case ErrorKind::RandomSmooth: return eps_ * smooth_(x);
      case ErrorKind::Tangential:
      case ErrorKind::Normal: {
        Vec y;
        try {
          y = m_.project_any(x);
        } catch (const Error&) {
          return Vec::Zero(d);
        }
        if (kind_ == ErrorKind::Tangential) return eps_ * (m_.tangent_basis(y) * coef_);
        return eps_ * smooth_(y)[0] * m_.normal_basis(y).col(0);
      }
    }
    return Vec::Zero(d);
  }

  Vec eval(const Vec& x, double t) const override {
    Vec s = base_->eval(x, t);
    if (eps_ == 0.0) return s;
    return s + error(x) / t;
  }
  Mat eval_batch(const Mat& x, double t) const override {
    Mat s = base_->eval_batch(x, t);
    if (eps_ == 0.0) return s;
    for (Eigen::Index j = 0; j < x.cols(); ++j) s.col(j) += error(x.col(j)) / t;
    return s;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "perturbed(" << base_->describe() << ",eps=" << eps_ << "," << to_string(kind_) << ")";
    return os.str();
  }

 private:
  FieldPtr base_;
  Manifold m_;
  double eps_;
  ErrorKind kind_;
  SmoothField smooth_;
  Vec dir_;
  Vec coef_;
};

double mean_of(const Vec& v) { return v.mean(); }

double se_of(const Vec& v) {
  const double n = static_cast<double>(v.size());
  if (v.size() < 2) return 0.0;
  return std::sqrt((v.array() - v.mean()).square().sum() / (n - 1.0) / n);
}

}  // namespace

FieldPtr oracle_mixture_score(Mat atoms, Vec weights, NoiseSchedule schedule) {
  return std::make_shared<OracleMixture>(std::move(atoms), std::move(weights), schedule);
}

FieldPtr oracle_mixture_score(const Cloud& atoms, NoiseSchedule schedule) {
  const auto n = static_cast<Eigen::Index>(atoms.size());
  if (n == 0) throw InvalidArgument("oracle needs atoms");
  return oracle_mixture_score(to_matrix(atoms), Vec::Constant(n, 1.0 / static_cast<double>(n)), schedule);
}

FieldPtr projection_score(const Manifold& m, Domain domain) { return std::make_shared<Projection>(m, std::move(domain)); }
FieldPtr potential_score(PotentialPtr eta, Domain domain) {
  return std::make_shared<PotentialField>(std::move(eta), std::move(domain));
}
FieldPtr learned_score(std::shared_ptr<const ScoreNet> net) { return std::make_shared<Learned>(std::move(net)); }
FieldPtr zero_score(int dim) { return std::make_shared<Zero>(dim); }
FieldPtr switched_score(FieldPtr large, FieldPtr small, double t_switch) {
  return std::make_shared<Switched>(std::move(large), std::move(small), t_switch);
}
FieldPtr custom_score(int dim, std::function<Vec(const Vec&, double)> fn, std::string name) {
  return std::make_shared<Custom>(dim, std::move(fn), std::move(name));
}

std::string to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConstantDirection: return "constant-direction";
    case ErrorKind::Tangential: return "tangential";
    case ErrorKind::RandomSmooth: return "random-smooth";
    case ErrorKind::Normal: return "normal";
  }
  return "?";
}

ErrorKind error_kind_from_string(const std::string& s) {
  for (ErrorKind k : {ErrorKind::ConstantDirection, ErrorKind::Tangential, ErrorKind::RandomSmooth, ErrorKind::Normal})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown error kind '" + s + "'");
}

FieldPtr make_perturbed(FieldPtr base, const Manifold& m, double epsilon, ErrorKind kind, Rng& rng) {
  if (epsilon < 0.0) throw InvalidArgument("epsilon must be nonnegative");
  return std::make_shared<Perturbed>(std::move(base), m, epsilon, kind, rng);
}

Vec conditional_score(const Vec& x, const Vec& x0, double t) { return -(x - x0) / t; }

DsmDraws draw_dsm_pairs(const SmoothedMixture& data, std::size_t n, Rng& rng) {
  DsmDraws d{Mat(data.dim(), static_cast<Eigen::Index>(n)), Mat(data.dim(), static_cast<Eigen::Index>(n)), data.t()};
  const double s = std::sqrt(data.t());
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
    d.x0.col(j) = data.atoms().col(data.sample_atom(rng));
    d.x.col(j) = d.x0.col(j) + s * gaussian_vec(rng, data.dim());
  }
  return d;
}

Vec dsm_terms(const ScoreField& field, const DsmDraws& draws) {
  Mat s = field.eval_batch(draws.x, draws.t);
  return (s + (draws.x - draws.x0) / draws.t).colwise().squaredNorm().transpose();
}

DsmEstimate dsm(const ScoreField& field, const SmoothedMixture& data, std::size_t n_mc, Rng& rng) {
  DsmDraws d = draw_dsm_pairs(data, n_mc, rng);
  Vec v = dsm_terms(field, d);
  return {mean_of(v), se_of(v), n_mc, data.t()};
}

DsmEstimate dsm_difference(const ScoreField& a, const ScoreField& b, const SmoothedMixture& data,
                           std::size_t n_mc, Rng& rng) {
  DsmDraws d = draw_dsm_pairs(data, n_mc, rng);
  Vec v = dsm_terms(a, d) - dsm_terms(b, d);
  return {mean_of(v), se_of(v), n_mc, data.t()};
}

DsmEstimate ldsm(const ScoreField& field, const Vec& x_ref, double h, const SmoothedMixture& data,
                 std::size_t n_mc, Rng& rng) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < data.size(); ++i)
    if ((data.atoms().col(i) - x_ref).norm() <= h && data.weights()[i] > 0.0) idx.push_back(i);
  if (idx.empty()) throw EmptyNeighborhood("no data within h of the reference point");
  Mat atoms(data.dim(), static_cast<Eigen::Index>(idx.size()));
  Vec w(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    atoms.col(static_cast<Eigen::Index>(j)) = data.atoms().col(idx[j]);
    w[static_cast<Eigen::Index>(j)] = data.weights()[idx[j]];
  }
  const double mass = w.sum();
  SmoothedMixture local(atoms, w / mass, data.t());
  DsmEstimate e = dsm(field, local, n_mc, rng);
  e.value *= mass;
  e.std_error *= mass;
  return e;
}

ExcessRisk excess_risk_check(const ScoreField& s, const ScoreField& s_star, const SmoothedMixture& mu_t,
                             std::size_t n_mc, Rng& rng) {
  DsmDraws d = draw_dsm_pairs(mu_t, n_mc, rng);
  Mat a = s.eval_batch(d.x, d.t);
  Mat b = s_star.eval_batch(d.x, d.t);
  Mat r = (d.x - d.x0) / d.t;
  Vec lhs = (a + r).colwise().squaredNorm().transpose() - (b + r).colwise().squaredNorm().transpose();
  Vec rhs = (a - b).colwise().squaredNorm().transpose();
  ExcessRisk e;
  e.lhs = mean_of(lhs);
  e.rhs = mean_of(rhs);
  e.lhs_se = se_of(lhs);
  e.rhs_se = se_of(rhs);
  e.gap = e.lhs - e.rhs;
  e.rel_gap = e.rhs > 0.0 ? std::abs(e.gap) / e.rhs : std::abs(e.gap);
  return e;
}

Vec denoiser(const ScoreField& field, const Vec& x, double t) { return x + t * field.eval(x, t); }

double alignment(const ScoreField& field, const Manifold& m, const Vec& x, double t) {
  Vec v = m.project(x) - x;
  Vec s = field.eval(x, t);
  const double nv = v.norm(), ns = s.norm();
  if (nv < 1e-12 || ns < 1e-12) throw DegenerateVector("alignment needs two nonzero vectors");
  return std::clamp(v.dot(s) / (nv * ns), -1.0, 1.0);
}

}  // namespace mfd
