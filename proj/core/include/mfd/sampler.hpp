#pragma once

#include <optional>

#include "mfd/schedule.hpp"
#include "mfd/score.hpp"

namespace mfd {

enum class OdeMethod { Heun, RK4 };

struct SamplerConfig {
  double T = 10.0;
  double t0 = 0.25;
  double tau = 1e-4;
  int n_sde_steps = 1000;
  int n_ode_steps = 512;
  OdeMethod method = OdeMethod::Heun;
  void validate() const;
};

struct LangevinConfig {
  int levels = 16;
  int steps_per_level = 60;
  double c_l = 0.05;  // step = c_l * Var(t_level)
  double t_max = 1.0;
  double t_min = 1e-4;
};

// Euler-Maruyama for the reverse SDE from T down to t0 on a uniform grid.
// Columns of x are independent chains.
Mat reverse_sde_run(const ScoreField& field, const NoiseSchedule& schedule, Mat x, double T, double t0,
                    int n_steps, Rng& rng);
// Probability-flow ODE from t0 down to tau on a grid uniform in log t.
Mat pf_ode_run(const ScoreField& field, const NoiseSchedule& schedule, Mat x, double t0, double tau,
               int n_steps, OdeMethod method = OdeMethod::Heun);
Vec pf_ode_run(const ScoreField& field, const NoiseSchedule& schedule, const Vec& x, double t0, double tau,
               int n_steps, OdeMethod method = OdeMethod::Heun);

// Prior draw at T, SDE stage to t0, ODE stage to tau. Returns D x n.
Mat hybrid_sample(const ScoreField& field, const NoiseSchedule& schedule, std::size_t n, const SamplerConfig& cfg,
                  Rng& rng);

// Annealed Langevin over levels linearly spaced from t_max to t_min.
// Projects the outputs onto `project_to` when given.
Mat annealed_langevin(const ScoreField& field, const NoiseSchedule& schedule, std::size_t n,
                      const LangevinConfig& cfg, Rng& rng, const Manifold* project_to = nullptr);

}  // namespace mfd
