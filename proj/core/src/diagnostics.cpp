#include "mfd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "mfd/errors.hpp"

namespace mfd {

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

double directed_hausdorff(const Cloud& a, const Cloud& b) {
  if (a.empty() || b.empty()) throw EmptyCloud("hausdorff distance needs nonempty clouds");
  const Mat bm = to_matrix(b);
  double worst = 0.0;
  for (const auto& p : a) {
    const double best = (bm.colwise() - p).colwise().squaredNorm().minCoeff();
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

double hausdorff(const Cloud& a, const Cloud& b) {
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

ProjectionErrorReport projection_error(const ScoreField& field, const Manifold& m, double t, std::size_t n_probe,
                                       Rng& rng, double tube_radius) {
  const double r = tube_radius > 0.0 ? tube_radius : 0.25 * m.reach();
  ProjectionErrorReport rep;
  rep.errors.reserve(n_probe);
  const Cloud probes = m.sample_tube(rng, n_probe, r);
  Mat x = to_matrix(probes);
  if (x.cols() == 0) return rep;
  const Mat s = field.eval_batch(x, t);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Vec den = x.col(j) + t * s.col(j);
    rep.errors.push_back((den - m.project(x.col(j))).norm());
  }
  std::vector<double> sorted = rep.errors;
  std::sort(sorted.begin(), sorted.end());
  rep.max = sorted.back();
  rep.median = quantile_sorted(sorted, 0.5);
  rep.q90 = quantile_sorted(sorted, 0.9);
  rep.q99 = quantile_sorted(sorted, 0.99);
  return rep;
}

double tangential_drift(const Manifold& m, const ScoreField& field, const NoiseSchedule& schedule,
                        const SamplerConfig& cfg, const Vec& x) {
  const Vec y = pf_ode_run(field, schedule, x, cfg.t0, cfg.tau, cfg.n_ode_steps, cfg.method);
  return m.geodesic_distance(m.project(x), m.project(y));
}

CoverageReport coverage_report(const Cloud& samples, const Manifold& m, const SurfaceDensity& density, double delta,
                               double alpha, std::size_t n_centers, Rng& rng, std::size_t n_mc) {
  if (!(delta > 0.0) || !(alpha >= 0.0)) throw InvalidArgument("coverage needs delta > 0 and alpha >= 0");
  if (delta > 0.5 * m.injectivity_radius())
    throw BallTooLarge("delta exceeds half the injectivity radius");
  if (n_centers == 0) throw InvalidArgument("coverage needs at least one center");
  CoverageReport rep;
  rep.delta = delta;
  rep.alpha = alpha;
  rep.n_samples = samples.size();

  const double k = static_cast<double>(m.intrinsic_dim());
  const double spacing = std::pow(m.volume() / static_cast<double>(n_centers), 1.0 / k);
  const Cloud centers = m.geodesic_net(spacing);

  // Footprints of the samples that lie in the alpha-tube.
  Cloud feet;
  feet.reserve(samples.size());
  for (const auto& x : samples) {
    if (!x.allFinite()) continue;
    const Vec p = m.project_any(x);
    if ((x - p).norm() <= alpha) feet.push_back(p);
  }
  Cloud data_draws;
  const bool analytic = density.kind == SurfaceDensity::Kind::Uniform;
  if (!analytic) data_draws = m.sample(density, rng, n_mc);
  const double vol = m.volume();
  const double n = static_cast<double>(samples.size());

  double c_hat = std::numeric_limits<double>::infinity();
  for (const auto& y : centers) {
    CoverageCenter c;
    c.y = y;
    std::size_t hits = 0;
    for (const auto& p : feet)
      if (m.geodesic_distance(p, y) <= delta) ++hits;
    c.mass_mu = n > 0 ? static_cast<double>(hits) / n : 0.0;
    if (analytic) {
      c.mass_data = m.geodesic_ball_volume(delta) / vol;
    } else {
      std::size_t in = 0;
      for (const auto& p : data_draws)
        if (m.geodesic_distance(p, y) <= delta) ++in;
      c.mass_data = static_cast<double>(in) / static_cast<double>(data_draws.size());
    }
    if (c.mass_data >= kMassDataFloor) c_hat = std::min(c_hat, c.mass_mu / c.mass_data);
    rep.centers.push_back(std::move(c));
  }
  rep.c_hat = std::isfinite(c_hat) ? c_hat : 0.0;
  return rep;
}

double gaussian_ball_lower_bound(int m, double t0, double r) {
  if (m < 1 || !(t0 > 0.0) || !(r > 0.0)) throw InvalidArgument("gaussian bound needs m >= 1, t0 > 0, r > 0");
  const double md = static_cast<double>(m);
  const double log_omega = 0.5 * md * std::log(M_PI) - std::lgamma(0.5 * md + 1.0);
  return std::exp(-0.5 * md * std::log(2.0 * M_PI * t0) - r * r / (2.0 * t0) + log_omega + md * std::log(r));
}

double gaussian_ball_probability(int m, double t0, double r) {
  if (m < 1 || !(t0 > 0.0) || r < 0.0) throw InvalidArgument("gaussian probability needs m >= 1, t0 > 0, r >= 0");
  return boost::math::gamma_p(0.5 * m, r * r / (2.0 * t0));
}

double cmin_lower_bound(const CminParams& p) {
  if (!(p.p_min > 0.0) || !(p.p_max > 0.0) || !(p.c_vol > 0.0) || !(p.C_vol > 0.0) || !(p.t0 > 0.0) ||
      !(p.rho > 0.0) || !(p.a > 0.0) || p.k < 1 || p.D <= p.k)
    throw InvalidArgument("cmin bound needs positive parameters and 1 <= k < D");
  const double vol_ratio = p.c_vol / p.C_vol / std::pow(6.0, p.k);
  return (p.p_min / p.p_max) * vol_ratio * gaussian_ball_lower_bound(p.k, p.t0, p.a) *
         gaussian_ball_lower_bound(p.D - p.k, p.t0, 0.5 * p.rho);
}

MemorizationReport memorization_fraction(const Cloud& generated, const Cloud& train, double threshold) {
  Cloud uniq;
  for (const auto& x : train) {
    bool dup = false;
    for (const auto& u : uniq)
      if ((u - x).squaredNorm() == 0.0) {
        dup = true;
        break;
      }
    if (!dup) uniq.push_back(x);
  }
  if (uniq.size() < 2) throw TrainTooSmall("memorization needs at least two distinct training points");
  const Mat tm = to_matrix(uniq);
  MemorizationReport rep;
  rep.threshold = threshold;
  std::size_t memo = 0;
  for (const auto& g : generated) {
    const Vec d2 = (tm.colwise() - g).colwise().squaredNorm().transpose();
    double a = std::numeric_limits<double>::infinity(), b = a;
    for (Eigen::Index j = 0; j < d2.size(); ++j) {
      if (d2[j] < a) {
        b = a;
        a = d2[j];
      } else if (d2[j] < b) {
        b = d2[j];
      }
    }
    const double ratio = b > 0.0 ? a / b : 1.0;
    rep.ratios.push_back(ratio);
    if (ratio < threshold) ++memo;
  }
  rep.fraction = generated.empty() ? 0.0 : static_cast<double>(memo) / static_cast<double>(generated.size());
  return rep;
}

}  // namespace mfd
