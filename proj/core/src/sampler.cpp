#include "mfd/sampler.hpp"

#include <cmath>

namespace mfd {

namespace {

void require_finite(const Mat& x, const char* where) {
  if (!x.allFinite()) throw NonFiniteState(std::string("non-finite state in ") + where);
}

Mat gaussian_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

// dx/du for u = log t: t * (f x - g^2 s / 2).
Mat flow_velocity(const ScoreField& field, const NoiseSchedule& sch, const Mat& x, double u) {
  const double t = std::exp(u);
  Mat v = -0.5 * sch.diffusion_sq(t) * field.eval_batch(x, t);
  const double f = sch.drift_coef(t);
  if (f != 0.0) v += f * x;
  return t * v;
}

}  // namespace

void SamplerConfig::validate() const {
  if (!(T > t0 && t0 > tau && tau > 0.0)) throw ConfigError("sampler needs T > t0 > tau > 0");
  if (n_sde_steps < 1 || n_ode_steps < 1) throw ConfigError("sampler step counts must be >= 1");
}

Mat reverse_sde_run(const ScoreField& field, const NoiseSchedule& sch, Mat x, double T, double t0, int n_steps,
                    Rng& rng) {
  if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
  const double h = (T - t0) / n_steps;
  for (int i = 0; i < n_steps; ++i) {
    const double t = T - i * h;
    const double g2 = sch.diffusion_sq(t);
    Mat drift = g2 * field.eval_batch(x, t);
    const double f = sch.drift_coef(t);
    if (f != 0.0) drift -= f * x;
    x += h * drift + std::sqrt(g2 * h) * gaussian_mat(rng, x.rows(), x.cols());
    require_finite(x, "reverse_sde_run");
  }
  return x;
}

Mat pf_ode_run(const ScoreField& field, const NoiseSchedule& sch, Mat x, double t0, double tau, int n_steps,
               OdeMethod method) {
  if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
  if (!(t0 > tau && tau > 0.0)) throw InvalidArgument("pf_ode_run needs t0 > tau > 0");
  const double u0 = std::log(t0);
  const double h = (std::log(tau) - u0) / n_steps;
  for (int i = 0; i < n_steps; ++i) {
    const double u = u0 + i * h;
    if (method == OdeMethod::Heun) {
      Mat k1 = flow_velocity(field, sch, x, u);
      Mat k2 = flow_velocity(field, sch, x + h * k1, u + h);
      x += 0.5 * h * (k1 + k2);
    } else {
      Mat k1 = flow_velocity(field, sch, x, u);
      Mat k2 = flow_velocity(field, sch, x + 0.5 * h * k1, u + 0.5 * h);
      Mat k3 = flow_velocity(field, sch, x + 0.5 * h * k2, u + 0.5 * h);
      Mat k4 = flow_velocity(field, sch, x + h * k3, u + h);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    require_finite(x, "pf_ode_run");
  }
  return x;
}

Vec pf_ode_run(const ScoreField& field, const NoiseSchedule& sch, const Vec& x, double t0, double tau, int n_steps,
               OdeMethod method) {
  return pf_ode_run(field, sch, Mat(x), t0, tau, n_steps, method).col(0);
}

Mat hybrid_sample(const ScoreField& field, const NoiseSchedule& sch, std::size_t n, const SamplerConfig& cfg,
                  Rng& rng) {
  cfg.validate();
  const auto cols = static_cast<Eigen::Index>(n);
  if (n == 0) return Mat(field.dim(), 0);
  const double scale = sch.kind() == NoiseSchedule::Kind::VE ? std::sqrt(cfg.T) : 1.0;
  Mat x = scale * gaussian_mat(rng, field.dim(), cols);
  x = reverse_sde_run(field, sch, std::move(x), cfg.T, cfg.t0, cfg.n_sde_steps, rng);
  return pf_ode_run(field, sch, std::move(x), cfg.t0, cfg.tau, cfg.n_ode_steps, cfg.method);
}

Mat annealed_langevin(const ScoreField& field, const NoiseSchedule& sch, std::size_t n, const LangevinConfig& cfg,
                      Rng& rng, const Manifold* project_to) {
  if (cfg.levels < 1 || cfg.steps_per_level < 0) throw ConfigError("invalid Langevin configuration");
  const auto cols = static_cast<Eigen::Index>(n);
  Mat x = sch.sigma(cfg.t_max) * gaussian_mat(rng, field.dim(), cols);
  for (int l = 0; l < cfg.levels && cfg.steps_per_level > 0; ++l) {
    const double t = (cfg.levels == 1 || l == cfg.levels - 1)
                         ? cfg.t_min
                         : cfg.t_max + (cfg.t_min - cfg.t_max) * l / static_cast<double>(cfg.levels - 1);
    const double eta = cfg.c_l * sch.var(t);
    const double noise = std::sqrt(2.0 * eta);
    for (int s = 0; s < cfg.steps_per_level; ++s) {
      x += eta * field.eval_batch(x, t) + noise * gaussian_mat(rng, x.rows(), x.cols());
      require_finite(x, "annealed_langevin");
    }
  }
  if (project_to)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = project_to->project_any(x.col(j));
  return x;
}

}  // namespace mfd
