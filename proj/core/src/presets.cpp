#include "mfd/presets.hpp"

#include <algorithm>
#include <cmath>

#include "mfd/errors.hpp"

namespace mfd {

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"deep_memo", "fast_memo", "std_small", "std_med", "rob_med", "gen"};
  return names;
}

Preset preset_by_name(const std::string& name) {
  auto make = [&](int n, int h, int l, double wd, int steps, double lr, double bmax, double tmin) {
    Preset p;
    p.name = name;
    p.n_train = n;
    p.hidden = h;
    p.layers = l;
    p.weight_decay = wd;
    p.steps = steps;
    p.lr = lr;
    p.beta_max = bmax;
    p.t_min = tmin;
    return p;
  };
  if (name == "deep_memo") return make(50, 2048, 8, 1e-8, 20000, 1e-3, 20.0, 1e-5);
  if (name == "fast_memo") return make(100, 1024, 6, 1e-8, 20000, 1e-3, 20.0, 1e-4);
  if (name == "std_small") return make(100, 512, 4, 1e-6, 10000, 5e-4, 10.0, 1e-4);
  if (name == "std_med") return make(200, 512, 4, 1e-6, 10000, 2e-4, 10.0, 1e-3);
  if (name == "rob_med") return make(200, 512, 3, 1e-2, 10000, 2e-4, 5.0, 1e-3);
  if (name == "gen") return make(1000, 512, 3, 1e-6, 5000, 2e-4, 5.0, 1e-3);
  std::string valid;
  for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "'; valid presets: " + valid);
}

Preset scaled(const Preset& p, double factor) {
  if (!(factor > 0.0)) throw ConfigError("scale factor must be positive");
  Preset q = p;
  auto sc = [&](int v, int floor) { return std::max(floor, static_cast<int>(std::lround(v * factor))); };
  q.steps = p.steps == 0 ? 0 : sc(p.steps, 1);
  q.hidden = sc(p.hidden, 2);
  q.n_train = sc(p.n_train, 2);
  q.scale = p.scale * factor;
  return q;
}

void Preset::validate() const {
  auto fail = [&](const std::string& why) { throw ConfigError("preset '" + name + "': " + why); };
  if (n_train < 2) fail("n_train must be at least 2");
  if (hidden < 1 || layers < 1) fail("hidden and layers must be positive");
  if (steps < 0) fail("steps must be nonnegative");
  if (!(lr > 0.0) || weight_decay < 0.0) fail("lr must be positive and weight_decay nonnegative");
  if (!(beta_max > beta_min) || !(beta_min > 0.0)) fail("need 0 < beta_min < beta_max");
  if (!(t_min > 0.0) || !(t_min < 1.0)) fail("t_min must lie in (0, 1)");
  if (so_dim < 2) fail("so_dim must be at least 2");
  if (distribution != "haar" && distribution != "projected_normal") fail("distribution must be haar or projected_normal");
  if (distribution == "projected_normal" && !(pn_sigma > 0.0)) fail("pn_sigma must be positive");
  if (batch_size < 1 || n_eval_samples < 1 || eval_interval < 0) fail("invalid batch/eval settings");
  if (langevin_levels < 1 || langevin_steps < 0 || !(langevin_c > 0.0)) fail("invalid Langevin settings");
}

KeyValueConfig Preset::to_config() const {
  KeyValueConfig c;
  c.set("preset", name);
  c.set("n_train", n_train);
  c.set("hidden", hidden);
  c.set("layers", layers);
  c.set("weight_decay", weight_decay);
  c.set("steps", steps);
  c.set("lr", lr);
  c.set("beta_max", beta_max);
  c.set("beta_min", beta_min);
  c.set("t_min", t_min);
  c.set("so_dim", so_dim);
  c.set("distribution", distribution);
  c.set("pn_sigma", pn_sigma);
  c.set("batch_size", batch_size);
  c.set("seed", seed);
  c.set("scale", scale);
  c.set("eval_interval", eval_interval);
  c.set("eval_initial", std::string(eval_initial ? "true" : "false"));
  c.set("n_eval_samples", n_eval_samples);
  c.set("langevin_levels", langevin_levels);
  c.set("langevin_steps", langevin_steps);
  c.set("langevin_c", langevin_c);
  return c;
}

Preset Preset::from_config(const KeyValueConfig& c) {
  // Start from the named table row so partial configs inherit its values.
  Preset p = preset_by_name(c.get_string("preset"));
  auto geti = [&](const char* k, int fb) { return static_cast<int>(c.get_int(k, fb)); };
  p.n_train = geti("n_train", p.n_train);
  p.hidden = geti("hidden", p.hidden);
  p.layers = geti("layers", p.layers);
  p.weight_decay = c.get_double("weight_decay", p.weight_decay);
  p.steps = geti("steps", p.steps);
  p.lr = c.get_double("lr", p.lr);
  p.beta_max = c.get_double("beta_max", p.beta_max);
  p.beta_min = c.get_double("beta_min", p.beta_min);
  p.t_min = c.get_double("t_min", p.t_min);
  p.so_dim = geti("so_dim", p.so_dim);
  p.distribution = c.get_string("distribution", p.distribution);
  p.pn_sigma = c.get_double("pn_sigma", p.pn_sigma);
  p.batch_size = geti("batch_size", p.batch_size);
  p.seed = static_cast<unsigned>(c.get_int("seed", p.seed));
  p.scale = c.get_double("scale", p.scale);
  p.eval_interval = geti("eval_interval", p.eval_interval);
  const std::string ei = c.get_string("eval_initial", p.eval_initial ? "true" : "false");
  if (ei != "true" && ei != "false") throw ConfigError("eval_initial must be true or false");
  p.eval_initial = ei == "true";
  p.n_eval_samples = geti("n_eval_samples", p.n_eval_samples);
  p.langevin_levels = geti("langevin_levels", p.langevin_levels);
  p.langevin_steps = geti("langevin_steps", p.langevin_steps);
  p.langevin_c = c.get_double("langevin_c", p.langevin_c);
  return p;
}

}  // namespace mfd
