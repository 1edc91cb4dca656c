#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mfd/io.hpp"
#include "mfd/measures.hpp"
#include "mfd/presets.hpp"

namespace mfd {

struct SuiteResult {
  std::string name;
  bool pass = false;
  bool hard = true;  // soft results are reported but do not gate the exit code
  std::string summary;
  Record report;
  double seconds = 0.0;
};

struct KlRateOptions {
  RateExperimentConfig rate;
  double slope_lo = -1.35;
  double slope_hi = -0.65;
};
SuiteResult suite_kl_rate(const KlRateOptions& o = {});

struct KlChi2Options {
  std::size_t n_mc = 5000;
  unsigned seed = 0;
  double se_mult = 3.0;
};
SuiteResult suite_kl_chi2(const KlChi2Options& o = {});

struct ExcessRiskOptions {
  std::size_t n_mc = 100000;
  double t = 1.0;
  int n_atoms = 64;
  unsigned seed = 0;
  double max_rel_gap = 0.02;
};
SuiteResult suite_excess_risk(const ExcessRiskOptions& o = {});

struct ContractionOptions {
  std::vector<double> eps{0.01, 0.05};
  std::size_t n_starts = 1000;
  int n_ode_steps = 512;
  double integrator_tol = 1e-6;
  double path_c = 3.0;
  unsigned seed = 0;
};
SuiteResult suite_contraction(const ContractionOptions& o = {});

struct DriftOptions {
  std::vector<double> eps{0.003, 0.01, 0.03, 0.1};
  std::size_t n_starts = 200;
  int n_ode_steps = 512;
  double exponent_lo = 0.4;
  double exponent_hi = 0.65;
  unsigned seed = 0;
};
SuiteResult suite_drift(const DriftOptions& o = {});

struct CoverageOptions {
  std::vector<unsigned> seeds{0, 1, 2, 3, 4};
  int n_train = 200;
  std::size_t n_samples = 10000;
  double eps = 0.01;
  double rho = 0.5;
  double T = 10.0;
  int n_sde_steps = 1000;
  int n_ode_steps = 512;
};
SuiteResult suite_coverage(const CoverageOptions& o = {});

struct GaussianBallOptions {
  std::size_t n_mc = 100000;
  unsigned seed = 0;
};
SuiteResult suite_gaussian_ball(const GaussianBallOptions& o = {});

struct EikonalOptions {
  std::size_t n_points = 10000;
  double eik_tol = 1e-8;
  double spectrum_tol = 1e-5;
  unsigned seed = 0;
};
SuiteResult suite_eikonal(const EikonalOptions& o = {});

struct ZeroSetOptions {
  std::vector<double> eps{0.0, 0.005, 0.01, 0.05};
  int n_seeds = 10;
  int n_points = 200;
  double max_offset = 0.2;
  double tol = 1e-9;
  int max_iter = 200;
};
SuiteResult suite_zero_set(const ZeroSetOptions& o = {});

struct LargeNoiseOptions {
  std::size_t n = 10000;
  double T = 10.0;
  double t0 = 0.1;
  double tau = 1e-3;
  int n_sde_steps = 2000;
  int n_ode_steps = 512;
  int bins = 20;
  double max_tv = 0.05;
  unsigned seed = 0;
};
SuiteResult suite_large_noise(const LargeNoiseOptions& o = {});

struct GradCheckOptions {
  int hidden = 8;
  int n_blocks = 2;
  int batch = 5;
  double h = 1e-4;
  double rel_tol = 1e-4;
  unsigned seed = 0;
};
SuiteResult suite_grad_check(const GradCheckOptions& o = {});

struct MemorizationOptions {
  double scale = 0.25;
  std::vector<unsigned> seeds{0, 1, 2};
  int batch_size = 512;
  int n_eval_samples = 256;
  double gen_max = 0.2;
  std::string out_dir;  // per-run artifacts when nonempty
};
SuiteResult suite_memorization(const MemorizationOptions& o = {});

const std::vector<std::string>& suite_names();
// Runs a suite with default options; writes report.json into out_dir when nonempty.
SuiteResult run_theorem_suite(const std::string& name, const std::string& out_dir = "");
Record suite_record(const SuiteResult& r);

struct PresetRun {
  Preset preset;
  MetricTrace trace;
  double final_memorization = 0.0;
  double final_manifold_error = 0.0;
  double final_alignment = 0.0;
  double seconds = 0.0;
};

// Trains a ScoreNet on SO(d) data and records a metric row every eval_interval
// steps, at step 0 (when eval_initial) and at the end. Writes trace.csv, summary.json,
// config.txt, checkpoint.bin, samples.csv and plots when out_dir is nonempty.
PresetRun run_preset(const Preset& preset, const std::string& out_dir = "",
                     const std::function<void(const TraceRow&)>& on_row = {});

}  // namespace mfd
