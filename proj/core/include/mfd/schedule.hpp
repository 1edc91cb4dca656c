#pragma once

#include <string>

#include "mfd/errors.hpp"

namespace mfd {

struct ScheduleValues {
  double alpha;
  double sigma;
  double alpha_bar;
  double var;  // sigma^2 (equals 1 - alpha_bar under VP)
  double log_snr;
};

// VE: x_t = x_0 + sqrt(t) z.  VP: linear beta(t) on [t_min, 1].
class NoiseSchedule {
 public:
  enum class Kind { VE, VP };

  static NoiseSchedule ve(double t_min = 1e-8, double t_max = 1e4);
  static NoiseSchedule vp(double beta_min, double beta_max, double t_min = 1e-5);

  Kind kind() const { return kind_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }

  ScheduleValues eval(double t) const;
  double sigma(double t) const { return eval(t).sigma; }
  double var(double t) const { return eval(t).var; }
  double log_snr(double t) const { return eval(t).log_snr; }
  double beta(double t) const;
  // Forward SDE dx = f(t) x dt + g(t) dW.
  double drift_coef(double t) const;
  double diffusion_sq(double t) const;

  std::string describe() const;

 private:
  void check(double t) const;
  Kind kind_ = Kind::VE;
  double t_min_ = 1e-8;
  double t_max_ = 1e4;
  double beta_min_ = 0.0;
  double beta_max_ = 0.0;
};

inline ScheduleValues schedule_eval(const NoiseSchedule& s, double t) { return s.eval(t); }

}  // namespace mfd
