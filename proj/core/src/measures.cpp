#include "mfd/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

namespace mfd {

namespace {

struct Moments {
  double mean;
  double se;
};

Moments moments(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  double var = v.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SmoothedMixture::SmoothedMixture(Mat atoms, Vec weights, double t)
    : atoms_(std::move(atoms)), weights_(std::move(weights)), t_(t) {
  if (!(t_ > 0.0)) throw InvalidArgument("mixture variance must be positive");
  if (atoms_.cols() == 0 || atoms_.cols() != weights_.size())
    throw InvalidArgument("mixture needs one weight per atom");
  if ((weights_.array() < 0.0).any()) throw InvalidArgument("negative mixture weight");
  double s = weights_.sum();
  if (std::abs(s - 1.0) > 1e-9) throw InvalidArgument("mixture weights must sum to 1");
  weights_ /= s;
  log_weights_ = weights_.array().log();
  cumulative_.resize(weights_.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) cumulative_[i] = (acc += weights_[i]);
}

SmoothedMixture SmoothedMixture::uniform(const Cloud& atoms, double t) {
  const auto n = static_cast<Eigen::Index>(atoms.size());
  if (n == 0) throw InvalidArgument("mixture needs at least one atom");
  return {to_matrix(atoms), Vec::Constant(n, 1.0 / static_cast<double>(n)), t};
}

Vec SmoothedMixture::log_terms(const Vec& x) const {
  Vec d2 = (atoms_.colwise() - x).colwise().squaredNorm().transpose();
  return log_weights_ - d2 / (2.0 * t_);
}

double SmoothedMixture::log_density(const Vec& x) const {
  Vec l = log_terms(x);
  double mx = l.maxCoeff();
  double s = (l.array() - mx).exp().sum();
  return mx + std::log(s) - 0.5 * dim() * std::log(2.0 * std::numbers::pi * t_);
}

double SmoothedMixture::density(const Vec& x) const { return std::exp(log_density(x)); }

Vec SmoothedMixture::posterior_mean(const Vec& x) const {
  Vec l = log_terms(x);
  Vec w = (l.array() - l.maxCoeff()).exp();
  w /= w.sum();
  return atoms_ * w;
}

Vec SmoothedMixture::score(const Vec& x) const { return (posterior_mean(x) - x) / t_; }

Eigen::Index SmoothedMixture::sample_atom(Rng& rng) const {
  double u = uniform01(rng) * cumulative_[cumulative_.size() - 1];
  auto it = std::upper_bound(cumulative_.data(), cumulative_.data() + cumulative_.size(), u);
  auto idx = static_cast<Eigen::Index>(it - cumulative_.data());
  return std::min(idx, size() - 1);
}

Vec SmoothedMixture::sample(Rng& rng) const {
  Eigen::Index i = sample_atom(rng);
  return atoms_.col(i) + std::sqrt(t_) * gaussian_vec(rng, dim());
}

DivergenceEstimate kl_estimate(const SmoothedMixture& p, const SmoothedMixture& q, std::size_t n_mc,
                               Rng& rng, KlEstimator estimator) {
  std::vector<double> v(n_mc);
  for (auto& term : v) {
    Vec x = p.sample(rng);
    double lr = p.log_density(x) - q.log_density(x);
    term = estimator == KlEstimator::Plain ? lr : lr + std::expm1(-lr);
  }
  auto m = moments(v);
  return {m.mean, m.se, n_mc};
}

DivergenceEstimate chi2_upper_estimate(const SmoothedMixture& p, const SmoothedMixture& q,
                                       std::size_t n_mc, Rng& rng) {
  std::vector<double> v(n_mc);
  for (auto& term : v) {
    Vec x = q.sample(rng);
    double r = std::expm1(p.log_density(x) - q.log_density(x));
    term = r * r;
  }
  auto m = moments(v);
  return {m.mean, m.se, n_mc};
}

DivergenceEstimate hellinger_sq_estimate(const SmoothedMixture& p, const SmoothedMixture& q,
                                         std::size_t n_mc, Rng& rng) {
  std::vector<double> v(n_mc);
  for (auto& term : v) {
    Vec x = p.sample(rng);
    term = 2.0 - 2.0 * std::exp(0.5 * (q.log_density(x) - p.log_density(x)));
  }
  auto m = moments(v);
  return {m.mean, m.se, n_mc};
}

SmoothedMixture population_smoothed(const Manifold& m, const SurfaceDensity& density, double t,
                                    int resolution) {
  QuadratureNet net = m.quadrature_net(resolution);
  if (net.spacing > std::sqrt(t) / 10.0)
    throw ResolutionTooCoarse("net spacing " + std::to_string(net.spacing) + " exceeds sqrt(t)/10");
  Vec w(static_cast<Eigen::Index>(net.points.size()));
  for (std::size_t i = 0; i < net.points.size(); ++i)
    w[static_cast<Eigen::Index>(i)] = m.density_at(density, net.points[i]) * net.volumes[i];
  w /= w.sum();
  return {to_matrix(net.points), w, t};
}

std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - my - slope * (x[i] - mx);
    rss += r * r;
  }
  double se = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return {slope, se};
}

RateExperiment smoothing_rate_experiment(const Manifold& m, const SurfaceDensity& density,
                                         const RateExperimentConfig& cfg) {
  RateExperiment out;
  out.n_grid = cfg.n_grid;
  const SmoothedMixture pop = population_smoothed(m, density, cfg.t0, cfg.resolution);
  std::vector<double> lx, ly;
  for (int n : cfg.n_grid) {
    std::vector<double> kls;
    for (unsigned seed : cfg.seeds) {
      Rng rng(seed * 1000003ULL + static_cast<unsigned long long>(n));
      Cloud data = m.sample(density, rng, static_cast<std::size_t>(n));
      SmoothedMixture emp = SmoothedMixture::uniform(data, cfg.t0);
      DivergenceEstimate kl = kl_estimate(pop, emp, cfg.n_mc, rng, cfg.estimator);
      out.rows.push_back({n, seed, kl.value, kl.std_error});
      kls.push_back(kl.value);
    }
    double med = median(kls);
    out.median_kl.push_back(med);
    if (med > 0.0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(med));
    }
  }
  if (lx.size() < 2 || lx.size() != cfg.n_grid.size()) {
    out.slope = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  auto [slope, se] = fit_slope(lx, ly);
  out.slope = slope;
  out.slope_se = se;
  double q = lx.size() > 2
                 ? boost::math::quantile(boost::math::students_t(static_cast<double>(lx.size() - 2)), 0.975)
                 : 0.0;
  out.ci_low = slope - q * se;
  out.ci_high = slope + q * se;
  return out;
}

}  // namespace mfd
