// mfd: command-line runner for presets, theorem suites, sampling and plots.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfd/diagnostics.hpp"
#include "mfd/errors.hpp"
#include "mfd/experiments.hpp"
#include "mfd/geometry.hpp"
#include "mfd/io.hpp"
#include "mfd/plot.hpp"
#include "mfd/presets.hpp"
#include "mfd/sampler.hpp"
#include "mfd/score.hpp"

namespace {

using namespace mfd;

Manifold parse_manifold(const std::string& s) {
  if (s == "circle") return Manifold::circle(1.0, 2);
  if (s == "circle3") return Manifold::circle(1.0, 3);
  if (s == "sphere") return Manifold::sphere(2, 1.0, 3);
  if (s == "torus") return Manifold::clifford_torus(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 4);
  if (s.size() == 3 && s.rfind("so", 0) == 0 && s[2] >= '2' && s[2] <= '9')
    return Manifold::special_orthogonal(s[2] - '0');
  throw ConfigError("unknown manifold '" + s + "' (valid: circle, circle3, sphere, torus, so2..so9)");
}

void print_result(const SuiteResult& r) {
  const char* tag = r.pass ? "PASS" : (r.hard ? "FAIL" : "SOFT-FAIL");
  std::printf("[%s] %s: %s (%.1fs)\n", tag, r.name.c_str(), r.summary.c_str(), r.seconds);
}

int cmd_run_preset(const std::string& name, double scale, long seed, const std::string& config_path,
                   const std::string& out) {
  Preset p = scaled(preset_by_name(name), scale);
  if (!config_path.empty()) {
    KeyValueConfig c = p.to_config();
    c.merge(KeyValueConfig::load(config_path));
    p = Preset::from_config(c);
  }
  if (seed >= 0) p.seed = static_cast<unsigned>(seed);
  p.validate();
  std::printf("preset %s scale %g: n_train %d hidden %d layers %d steps %d\n", p.name.c_str(), p.scale,
              p.n_train, p.hidden, p.layers, p.steps);
  const PresetRun run = run_preset(p, out, [](const TraceRow& row) {
    std::printf("step %6d  loss %.5g  align %.4f  manifold_err %.4g  memo %.3f\n", row.step, row.loss,
                row.alignment, row.manifold_error, row.memorization);
    std::fflush(stdout);
  });
  std::printf("done in %.1fs: memorization %.3f, manifold error %.4g\n", run.seconds, run.final_memorization,
              run.final_manifold_error);
  return 0;
}

int cmd_theorem_suite(const std::string& which, const std::string& out) {
  std::vector<std::string> names = which == "all" ? suite_names() : std::vector<std::string>{which};
  bool ok = true;
  for (const auto& n : names) {
    const SuiteResult r = run_theorem_suite(n, out.empty() ? "" : out + "/" + n);
    print_result(r);
    if (r.hard && !r.pass) ok = false;
  }
  return ok ? 0 : 1;
}

// Empirical-oracle score on n_train points pushed through the hybrid sampler.
int cmd_sample(const std::string& manifold, int n_train, std::size_t n, long seed, double t0,
               const std::string& out) {
  const Manifold m = parse_manifold(manifold);
  Rng rng(static_cast<std::uint64_t>(seed < 0 ? 0 : seed));
  const Cloud train = m.sample(SurfaceDensity::uniform(), rng, static_cast<std::size_t>(n_train));
  SamplerConfig sc;
  sc.t0 = t0 > 0.0 ? t0 : 0.25 * m.reach();
  sc.tau = 1e-4 * sc.t0;
  const FieldPtr exact = projection_score(m, Domain::tube(m, m.reach()));
  const FieldPtr field = switched_score(oracle_mixture_score(train), exact, sc.t0);
  const Mat x = hybrid_sample(*field, NoiseSchedule::ve(), n, sc, rng);
  const Cloud pts = to_cloud(x);
  std::vector<double> dist;
  for (const auto& p : pts) dist.push_back(m.distance(p));
  const double mean = std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(dist.size());
  // Chains still outside the tube at t0 see a zero score below t0 and stay put.
  const auto off = std::count_if(dist.begin(), dist.end(), [&](double d) { return d >= 0.5 * m.reach(); });
  std::nth_element(dist.begin(), dist.begin() + dist.size() / 2, dist.end());
  const double median = dist[dist.size() / 2];
  const MemorizationReport memo = memorization_fraction(pts, train);
  std::printf("%zu samples on %s: median distance %.3g, mean %.3g, %ld off-tube, memorization %.3f\n", n,
              m.name().c_str(), median, mean, static_cast<long>(off), memo.fraction);
  if (!out.empty()) {
    ensure_dir(out);
    write_cloud_csv(out + "/samples.csv", pts);
    write_cloud_csv(out + "/train.csv", train);
    write_json(out + "/summary.json", Record()
                                          .add("manifold", m.name())
                                          .add("n_train", n_train)
                                          .add("n_samples", n)
                                          .add("t0", sc.t0)
                                          .add("tau", sc.tau)
                                          .add("mean_distance", mean)
                                          .add("median_distance", median)
                                          .add("n_off_tube", static_cast<long>(off))
                                          .add("memorization", memo.fraction));
  }
  return 0;
}

int cmd_coverage(const std::string& manifold, int n_train, std::size_t n, long seed, const std::string& out) {
  if (manifold != "circle") throw ConfigError("coverage is implemented for the unit circle only");
  CoverageOptions o;
  if (seed >= 0) o.seeds = {static_cast<unsigned>(seed)};
  o.n_train = n_train;
  o.n_samples = n;
  SuiteResult r = suite_coverage(o);
  print_result(r);
  if (!out.empty()) {
    ensure_dir(out);
    write_json(out + "/report.json", suite_record(r));
  }
  return r.pass ? 0 : 1;
}

int cmd_kl_rate(const std::string& manifold, int n_seeds, std::size_t n_mc, double t0, const std::string& out) {
  const Manifold m = parse_manifold(manifold);
  RateExperimentConfig cfg;
  cfg.t0 = t0;
  cfg.n_mc = n_mc;
  cfg.seeds.clear();
  for (int s = 0; s < n_seeds; ++s) cfg.seeds.push_back(static_cast<unsigned>(s));
  const RateExperiment e = smoothing_rate_experiment(m, SurfaceDensity::uniform(), cfg);
  for (std::size_t i = 0; i < e.n_grid.size(); ++i) std::printf("N %5d  median KL %.4g\n", e.n_grid[i], e.median_kl[i]);
  const bool pass = e.slope >= -1.35 && e.slope <= -0.65;
  std::printf("[%s] slope %.3f +- %.3f on %s\n", pass ? "PASS" : "FAIL", e.slope, e.slope_se, m.name().c_str());
  if (!out.empty()) {
    ensure_dir(out);
    std::vector<std::vector<double>> rows;
    for (const auto& r : e.rows) rows.push_back({double(r.n), double(r.seed), r.kl, r.se});
    write_table_csv(out + "/kl_rows.csv", {"n", "seed", "kl", "se"}, rows);
    write_json(out + "/report.json", Record()
                                         .add("manifold", m.name())
                                         .add("t0", t0)
                                         .add("slope", e.slope)
                                         .add("slope_se", e.slope_se)
                                         .add("median_kl", e.median_kl)
                                         .add("pass", pass));
  }
  return pass ? 0 : 1;
}

int cmd_plot(const std::string& trace_path, const std::string& out) {
  const MetricTrace trace = read_trace_csv(trace_path);
  for (const auto& f : emit_plots(trace, out.empty() ? "." : out)) std::printf("wrote %s\n", f.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-on-manifolds laboratory"};
  app.require_subcommand(1);

  std::string out, config_path, manifold = "circle", preset_name, suite = "all", trace_path;
  long seed = -1;
  double scale = 0.25, t0 = -1.0, kl_t0 = 0.5;
  int n_train = 200, n_seeds = 10;
  std::size_t n = 10000, n_mc = 20000;

  auto* run = app.add_subcommand("run-preset", "Train a preset on SO(d) and record a metric trace");
  run->add_option("--preset", preset_name, "Preset name")->required();
  run->add_option("--scale", scale, "Scale factor for steps, width and n_train")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Seed override");
  run->add_option("--config", config_path, "key = value overrides");
  run->add_option("--out", out, "Run directory");

  auto* ts = app.add_subcommand("theorem-suite", "Run an invariant battery");
  ts->add_option("suite", suite, "Suite name or 'all'");
  ts->add_option("--out", out, "Report directory");

  auto* smp = app.add_subcommand("sample", "Hybrid-sampler draws from the empirical-oracle score");
  smp->add_option("--manifold", manifold);
  smp->add_option("--n-train", n_train)->check(CLI::PositiveNumber);
  smp->add_option("--n", n)->check(CLI::PositiveNumber);
  smp->add_option("--t0", t0, "Switch time (default reach/4)");
  smp->add_option("--seed", seed);
  smp->add_option("--out", out);

  auto* cov = app.add_subcommand("coverage", "Coverage separation for one seed");
  cov->add_option("--manifold", manifold);
  cov->add_option("--n-train", n_train)->check(CLI::PositiveNumber);
  cov->add_option("--n", n)->check(CLI::PositiveNumber);
  cov->add_option("--seed", seed);
  cov->add_option("--out", out);

  auto* kl = app.add_subcommand("kl-rate", "KL smoothing rate in N");
  kl->add_option("--manifold", manifold);
  kl->add_option("--seeds", n_seeds)->check(CLI::PositiveNumber);
  kl->add_option("--n-mc", n_mc)->check(CLI::PositiveNumber);
  kl->add_option("--t0", kl_t0)->check(CLI::PositiveNumber);
  kl->add_option("--out", out);

  auto* plt = app.add_subcommand("plot", "Render SVG panels from a trace CSV");
  plt->add_option("trace", trace_path)->required();
  plt->add_option("--out", out);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run_preset(preset_name, scale, seed, config_path, out);
    if (*ts) return cmd_theorem_suite(suite, out);
    if (*smp) return cmd_sample(manifold, n_train, n, seed, t0, out);
    if (*cov) return cmd_coverage(manifold, n_train, n, seed, out);
    if (*kl) return cmd_kl_rate(manifold, n_seeds, n_mc, kl_t0, out);
    if (*plt) return cmd_plot(trace_path, out);
  } catch (const mfd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
