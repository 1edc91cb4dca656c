#include "mfd/schedule.hpp"

#include <cmath>
#include <sstream>

namespace mfd {

NoiseSchedule NoiseSchedule::ve(double t_min, double t_max) {
  if (!(t_min > 0.0 && t_max > t_min)) throw InvalidArgument("VE schedule needs 0 < t_min < t_max");
  NoiseSchedule s;
  s.kind_ = Kind::VE;
  s.t_min_ = t_min;
  s.t_max_ = t_max;
  return s;
}

NoiseSchedule NoiseSchedule::vp(double beta_min, double beta_max, double t_min) {
  if (!(beta_min >= 0.0 && beta_max > beta_min && t_min > 0.0 && t_min < 1.0))
    throw InvalidArgument("VP schedule needs 0 <= beta_min < beta_max and 0 < t_min < 1");
  NoiseSchedule s;
  s.kind_ = Kind::VP;
  s.t_min_ = t_min;
  s.t_max_ = 1.0;
  s.beta_min_ = beta_min;
  s.beta_max_ = beta_max;
  return s;
}

void NoiseSchedule::check(double t) const {
  const double slack = 1e-12 * t_max_;
  if (!(t >= t_min_ * (1.0 - 1e-12) && t <= t_max_ + slack))
    throw OutOfRange("t=" + std::to_string(t) + " outside [" + std::to_string(t_min_) + ", " +
                     std::to_string(t_max_) + "]");
}

ScheduleValues NoiseSchedule::eval(double t) const {
  check(t);
  ScheduleValues v{};
  if (kind_ == Kind::VE) {
    v.alpha = 1.0;
    v.alpha_bar = 1.0;
    v.var = t;
    v.sigma = std::sqrt(t);
    v.log_snr = -std::log(t);
    return v;
  }
  const double integral = beta_min_ * t + 0.5 * (beta_max_ - beta_min_) * t * t;
  v.alpha_bar = std::exp(-integral);
  v.alpha = std::exp(-0.5 * integral);
  v.var = -std::expm1(-integral);
  v.sigma = std::sqrt(v.var);
  v.log_snr = -integral - std::log(v.var);
  return v;
}

double NoiseSchedule::beta(double t) const {
  if (kind_ == Kind::VE) return 0.0;
  return beta_min_ + t * (beta_max_ - beta_min_);
}

double NoiseSchedule::drift_coef(double t) const { return kind_ == Kind::VE ? 0.0 : -0.5 * beta(t); }

double NoiseSchedule::diffusion_sq(double t) const { return kind_ == Kind::VE ? 1.0 : beta(t); }

std::string NoiseSchedule::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::VE)
    os << "ve(t_min=" << t_min_ << ",t_max=" << t_max_ << ")";
  else
    os << "vp(beta_min=" << beta_min_ << ",beta_max=" << beta_max_ << ",t_min=" << t_min_ << ")";
  return os.str();
}

}  // namespace mfd
