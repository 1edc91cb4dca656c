#pragma once

#include <string>
#include <vector>

#include "mfd/geometry.hpp"

namespace mfd {

// Equal-variance Gaussian mixture sum_i w_i N(a_i, t I).
class SmoothedMixture {
 public:
  SmoothedMixture(Mat atoms, Vec weights, double t);
  static SmoothedMixture uniform(const Cloud& atoms, double t);

  int dim() const { return static_cast<int>(atoms_.rows()); }
  Eigen::Index size() const { return atoms_.cols(); }
  double t() const { return t_; }
  const Mat& atoms() const { return atoms_; }
  const Vec& weights() const { return weights_; }
  SmoothedMixture with_variance(double t) const { return {atoms_, weights_, t}; }

  double log_density(const Vec& x) const;
  double density(const Vec& x) const;
  Vec score(const Vec& x) const;
  // Posterior mean of the atom given x, i.e. x + t * score(x).
  Vec posterior_mean(const Vec& x) const;

  Eigen::Index sample_atom(Rng& rng) const;
  Vec sample(Rng& rng) const;

 private:
  // log(w_i) - |x - a_i|^2 / 2t for every atom.
  Vec log_terms(const Vec& x) const;

  Mat atoms_;
  Vec weights_;
  Vec log_weights_;
  Vec cumulative_;
  double t_;
};

struct DivergenceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_mc = 0;
};

enum class KlEstimator {
  Plain,          // mean of log(p/q), X ~ p
  ControlVariate  // mean of log(p/q) + q/p - 1, same expectation, lower variance
};

DivergenceEstimate kl_estimate(const SmoothedMixture& p, const SmoothedMixture& q, std::size_t n_mc,
                               Rng& rng, KlEstimator estimator = KlEstimator::Plain);
DivergenceEstimate chi2_upper_estimate(const SmoothedMixture& p, const SmoothedMixture& q,
                                       std::size_t n_mc, Rng& rng);
DivergenceEstimate hellinger_sq_estimate(const SmoothedMixture& p, const SmoothedMixture& q,
                                         std::size_t n_mc, Rng& rng);

// Quadrature-net proxy for the smoothed population law on m.
SmoothedMixture population_smoothed(const Manifold& m, const SurfaceDensity& density, double t,
                                    int resolution);

struct RateRow {
  int n;
  unsigned seed;
  double kl;
  double se;
};

struct RateExperiment {
  std::vector<RateRow> rows;
  std::vector<int> n_grid;
  std::vector<double> median_kl;
  double slope = 0.0;
  double slope_se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct RateExperimentConfig {
  double t0 = 0.5;
  std::vector<int> n_grid{32, 64, 128, 256, 512, 1024};
  std::vector<unsigned> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t n_mc = 20000;
  int resolution = 512;
  KlEstimator estimator = KlEstimator::Plain;
};

RateExperiment smoothing_rate_experiment(const Manifold& m, const SurfaceDensity& density,
                                         const RateExperimentConfig& cfg);

// Least-squares slope of y on x with its standard error.
std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mfd
