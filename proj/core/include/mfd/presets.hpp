#pragma once

#include <string>
#include <vector>

#include "mfd/config.hpp"

namespace mfd {

struct Preset {
  std::string name;
  int n_train = 0;
  int hidden = 0;
  int layers = 0;
  double weight_decay = 0.0;
  int steps = 0;
  double lr = 0.0;
  double beta_max = 0.0;
  double t_min = 0.0;
  double beta_min = 0.1;
  // Data on SO(so_dim): "haar" or "projected_normal" with spread pn_sigma.
  int so_dim = 3;
  std::string distribution = "haar";
  double pn_sigma = 0.2;
  int batch_size = 512;
  unsigned seed = 0;
  double scale = 1.0;
  int eval_interval = 50;  // 0 evaluates only at the end
  bool eval_initial = true;  // evaluate the untrained net as the step-0 row
  int n_eval_samples = 256;
  int langevin_levels = 16;
  int langevin_steps = 60;
  double langevin_c = 0.05;

  KeyValueConfig to_config() const;
  static Preset from_config(const KeyValueConfig& c);
  void validate() const;
  bool operator==(const Preset&) const = default;
};

const std::vector<std::string>& preset_names();
// Unscaled table values; throws ConfigError listing valid names.
Preset preset_by_name(const std::string& name);
// Multiplies steps, hidden width and n_train by `factor` (rounded, floored at 2).
Preset scaled(const Preset& p, double factor);

}  // namespace mfd
