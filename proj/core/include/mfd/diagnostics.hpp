#pragma once

#include <vector>

#include "mfd/geometry.hpp"
#include "mfd/sampler.hpp"
#include "mfd/score.hpp"

namespace mfd {

// sup_{a in A} min_{b in B} |a - b|
double directed_hausdorff(const Cloud& a, const Cloud& b);
double hausdorff(const Cloud& a, const Cloud& b);

struct ProjectionErrorReport {
  double max = 0.0;
  double median = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
  std::vector<double> errors;
};

// |denoiser(x, t) - proj(x)| over probes in the tube; tube_radius <= 0 means reach / 4.
ProjectionErrorReport projection_error(const ScoreField& field, const Manifold& m, double t, std::size_t n_probe,
                                       Rng& rng, double tube_radius = -1.0);

// Geodesic distance between proj(x) and proj(Phi(x)) for the ODE stage t0 -> tau of cfg.
double tangential_drift(const Manifold& m, const ScoreField& field, const NoiseSchedule& schedule,
                        const SamplerConfig& cfg, const Vec& x);

struct CoverageCenter {
  Vec y;
  double mass_mu = 0.0;
  double mass_data = 0.0;
};

struct CoverageReport {
  double delta = 0.0;
  double alpha = 0.0;
  std::vector<CoverageCenter> centers;
  double c_hat = 0.0;
  double c_min_analytic = 0.0;  // filled in by the caller
  std::size_t n_samples = 0;
};

inline constexpr double kMassDataFloor = 1e-6;

// Centers form a geodesic net with about n_centers points. Data masses are exact
// for the uniform density and Monte Carlo (n_mc draws) otherwise.
CoverageReport coverage_report(const Cloud& samples, const Manifold& m, const SurfaceDensity& density, double delta,
                               double alpha, std::size_t n_centers, Rng& rng, std::size_t n_mc = 20000);

// (2 pi t0)^{-m/2} exp(-r^2 / (2 t0)) omega_m r^m
double gaussian_ball_lower_bound(int m, double t0, double r);
// P(|G| <= r) for G ~ N(0, t0 I_m).
double gaussian_ball_probability(int m, double t0, double r);

struct CminParams {
  double p_min = 1.0;
  double p_max = 1.0;
  int k = 1;
  int D = 2;
  double t0 = 0.25;
  double rho = 0.5;
  double c_vol = 1.0;
  double C_vol = 1.0;
  double a = 0.25;
};

double cmin_lower_bound(const CminParams& p);

struct MemorizationReport {
  double fraction = 0.0;
  std::vector<double> ratios;
  double threshold = 0.5;
};

// Nearest / second-nearest squared-distance ratio against the deduplicated training set.
MemorizationReport memorization_fraction(const Cloud& generated, const Cloud& train, double threshold = 0.5);

}  // namespace mfd
