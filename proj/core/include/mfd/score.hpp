#pragma once

#include <functional>
#include <memory>
#include <string>

#include "mfd/measures.hpp"
#include "mfd/nn.hpp"
#include "mfd/potential_fn.hpp"
#include "mfd/schedule.hpp"

namespace mfd {

// Time-indexed vector field s(x, t).
class ScoreField {
 public:
  virtual ~ScoreField() = default;
  virtual int dim() const = 0;
  virtual Vec eval(const Vec& x, double t) const = 0;
  // Columnwise evaluation; learned fields override this to batch.
  virtual Mat eval_batch(const Mat& x, double t) const;
  virtual std::string describe() const = 0;
};

using FieldPtr = std::shared_ptr<const ScoreField>;

// Score of sum_i w_i N(alpha(t) a_i, sigma(t)^2 I); VE by default.
FieldPtr oracle_mixture_score(Mat atoms, Vec weights, NoiseSchedule schedule = NoiseSchedule::ve());
FieldPtr oracle_mixture_score(const Cloud& atoms, NoiseSchedule schedule = NoiseSchedule::ve());
// -(x - proj(x)) / t on the domain, zero outside.
FieldPtr projection_score(const Manifold& m, Domain domain);
// -grad eta(x) / t on the domain, zero outside.
FieldPtr potential_score(PotentialPtr eta, Domain domain);
FieldPtr learned_score(std::shared_ptr<const ScoreNet> net);
FieldPtr zero_score(int dim);
// Uses `large` for t > t_switch and `small` for t <= t_switch.
FieldPtr switched_score(FieldPtr large, FieldPtr small, double t_switch);
FieldPtr custom_score(int dim, std::function<Vec(const Vec&, double)> fn, std::string name);

enum class ErrorKind {
  ConstantDirection,  // e = eps * v for a fixed unit v
  Tangential,         // e = eps * T(proj x) c for a fixed unit c in R^k
  RandomSmooth,       // smooth random Fourier field with sup-norm bounded by eps
  Normal              // e = eps * g(proj x) * n1(proj x), g smooth in [-1, 1]
};

std::string to_string(ErrorKind k);
ErrorKind error_kind_from_string(const std::string& s);

// s(x, t) = base(x, t) + e(x) / t.
FieldPtr make_perturbed(FieldPtr base, const Manifold& m, double epsilon, ErrorKind kind, Rng& rng);

Vec conditional_score(const Vec& x, const Vec& x0, double t);

struct DsmEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_mc = 0;
  double t = 0.0;
};

// Draws (x0, x) pairs with x0 ~ data and x = x0 + sqrt(t) z.
struct DsmDraws {
  Mat x0;
  Mat x;
  double t;
};
DsmDraws draw_dsm_pairs(const SmoothedMixture& data, std::size_t n, Rng& rng);
// Per-draw squared residual |s(x, t) + (x - x0)/t|^2.
Vec dsm_terms(const ScoreField& field, const DsmDraws& draws);

DsmEstimate dsm(const ScoreField& field, const SmoothedMixture& data, std::size_t n_mc, Rng& rng);
// Paired estimate of DSM(a) - DSM(b) on shared draws.
DsmEstimate dsm_difference(const ScoreField& a, const ScoreField& b, const SmoothedMixture& data,
                           std::size_t n_mc, Rng& rng);
// DSM against the data measure restricted (not renormalised) to B(x_ref, h).
DsmEstimate ldsm(const ScoreField& field, const Vec& x_ref, double h, const SmoothedMixture& data,
                 std::size_t n_mc, Rng& rng);

struct ExcessRisk {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  double rel_gap = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
};
// lhs = DSM(s) - DSM(s_star), rhs = E|s - s_star|^2 on the same draws from mu_t.
ExcessRisk excess_risk_check(const ScoreField& s, const ScoreField& s_star, const SmoothedMixture& mu_t,
                             std::size_t n_mc, Rng& rng);

Vec denoiser(const ScoreField& field, const Vec& x, double t);
// Cosine between proj(x) - x and s(x, t).
double alignment(const ScoreField& field, const Manifold& m, const Vec& x, double t);

}  // namespace mfd
