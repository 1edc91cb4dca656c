#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "mfd/measures.hpp"
#include "mfd/potential_fn.hpp"
#include "mfd/score.hpp"

namespace mfd {

// |grad eta(x)|^2 - 2 eta(x); throws OutsideDomain when x is not in the domain.
double eikonal_residual(const Potential& eta, const Vec& x, const Domain& domain);

struct MembershipConfig {
  int k = 1;
  double zeta_min = 1.0;  // domain is the union of balls of radius zeta_min / 2
  double eikonal_tol = 1e-8;
  double anchor_tol = 1e-10;
  double rank_ratio = 0.1;
  double angle_max = 0.1 * 3.14159265358979323846;
  std::array<double, 3> derivative_bounds{10.0, 10.0, 100.0};
  std::size_t n_domain = 2000;
  std::size_t n_boundary = 2000;
  std::size_t n_smooth = 200;
};

struct CheckResult {
  bool pass = false;
  double worst = 0.0;
};

struct MembershipReport {
  CheckResult eikonal;      // worst = sup |residual|
  CheckResult non_escape;   // worst = min <grad eta, outward normal> on the boundary
  CheckResult anchoring;    // worst = max |eta(y_i)|
  CheckResult rank;         // worst = number of anchors with rank != D - k
  CheckResult angle;        // worst = largest principal angle (radians)
  CheckResult smoothness;   // worst = max ratio of derivative norm to its bound
  std::array<double, 3> derivative_norms{0.0, 0.0, 0.0};
  std::size_t n_domain_points = 0;
  std::size_t n_boundary_points = 0;
  bool all_pass() const {
    return eikonal.pass && non_escape.pass && anchoring.pass && rank.pass && angle.pass && smoothness.pass;
  }
};

MembershipReport check_membership(const Potential& eta, const Cloud& anchors, const std::vector<Mat>& tangents,
                                  const MembershipConfig& cfg, Rng& rng);

// Largest principal angle between the column spans of two orthonormal bases.
double max_principal_angle(const Mat& a, const Mat& b);

// Top-k principal directions of the neighbours of x_ref within h.
Mat local_pca_tangent(const Cloud& points, const Vec& x_ref, double h, int k);

struct SeedOutcome {
  bool converged = false;
  int iterations = 0;
  Vec point;
};

struct ZeroSet {
  Cloud points;  // converged and deduplicated
  std::vector<SeedOutcome> seeds;
  std::size_t n_not_converged = 0;
};

// Denoiser fixed-point iteration x <- x + t s(x, t) from each seed.
ZeroSet extract_zero_set(const ScoreField& field, double t, const Cloud& seeds, double tol, int max_iter);

// Truncated-Gaussian PME loss of a candidate cloud around x_ref.
DivergenceEstimate pme_loss(const Cloud& m_hat, const Cloud& data, const Vec& x_ref, double h, double t,
                            std::size_t n_mc, Rng& rng);

struct PotentialTrainConfig {
  std::vector<int> hidden{64, 64};
  int steps = 1500;
  int batch_size = 128;
  int anchor_batch = 64;
  double lr = 2e-3;
  double t = 0.01;  // noise variance of the regression pairs
  double lambda_eik = 1.0;
  double lambda_anc = 1.0;
  double fd_h = 1e-4;
  double zeta_min = 1.0;
  unsigned seed = 0;
  PotentialPtr base;  // null means a zero base potential
};

struct TrainedPotential {
  std::shared_ptr<NetworkPotential> eta;
  FieldPtr field;
  Domain domain;
  std::vector<double> losses;
};

// Loss terms of the potential objective at one batch; exposed for tests.
struct PotentialLoss {
  double dsm = 0.0;
  double eikonal = 0.0;
  double anchor = 0.0;
  double total = 0.0;
};
PotentialLoss potential_loss(const NetworkPotential& eta, const Mat& x0, const Mat& x, const Mat& anchors,
                             const PotentialTrainConfig& cfg, Grads* grads);

TrainedPotential train_potential_score(const Cloud& data, const Cloud& anchors, const PotentialTrainConfig& cfg);

}  // namespace mfd
