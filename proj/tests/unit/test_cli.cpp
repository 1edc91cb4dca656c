#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "mfd/config.hpp"
#include "mfd/errors.hpp"
#include "mfd/experiments.hpp"
#include "mfd/io.hpp"
#include "mfd/plot.hpp"
#include "mfd/presets.hpp"

using namespace mfd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mfd_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

MetricTrace two_rows() {
  return {{0, 1.5, 0.1, 0.4, 0.0}, {50, 0.7, 0.85, 0.05, 0.3}};
}

Preset tiny_preset() {
  Preset p = scaled(preset_by_name("gen"), 0.01);
  p.hidden = 8;
  p.layers = 1;
  p.batch_size = 8;
  p.n_eval_samples = 16;
  p.langevin_levels = 2;
  p.langevin_steps = 2;
  p.eval_interval = 5;
  return p;
}

}  // namespace

TEST(Config, ParseSerializeRoundTrip) {
  KeyValueConfig c;
  c.set("name", std::string("deep_memo"));
  c.set("lr", 2e-4);
  c.set("third", 1.0 / 3.0);
  c.set("steps", 5000);
  c.set("neg", -7L);
  const KeyValueConfig back = KeyValueConfig::parse(c.serialize());
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.get_double("third"), 1.0 / 3.0);
  EXPECT_EQ(back.get_int("steps"), 5000);
  EXPECT_EQ(back.get_string("name"), "deep_memo");
}

TEST(Config, CommentsWhitespaceAndErrors) {
  const KeyValueConfig c = KeyValueConfig::parse("# header\n  a = 1   # trailing\n\nb=two\n");
  EXPECT_EQ(c.get_int("a"), 1);
  EXPECT_EQ(c.get_string("b"), "two");
  EXPECT_EQ(c.get_double("missing", 2.5), 2.5);
  EXPECT_THROW(c.get_string("missing"), ConfigError);
  EXPECT_THROW(c.get_int("b"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse("no equals sign\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/mfd.cfg"), ConfigError);
}

TEST(Config, MergeOverrides) {
  KeyValueConfig base = KeyValueConfig::parse("a = 1\nb = 2\n");
  base.merge(KeyValueConfig::parse("b = 3\nc = 4\n"));
  EXPECT_EQ(base.get_int("a"), 1);
  EXPECT_EQ(base.get_int("b"), 3);
  EXPECT_EQ(base.get_int("c"), 4);
}

TEST(Config, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1e-8, 2e-4, 1.0 / 3.0, 12345.678, -0.0, 5e-324, 1.7976931348623157e308})
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v) << format_double(v);
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(Presets, TableValues) {
  struct Row {
    const char* name;
    int n, h, l;
    double wd;
    int steps;
    double lr, bmax, tmin;
  };
  const Row rows[] = {{"deep_memo", 50, 2048, 8, 1e-8, 20000, 1e-3, 20.0, 1e-5},
                      {"fast_memo", 100, 1024, 6, 1e-8, 20000, 1e-3, 20.0, 1e-4},
                      {"std_small", 100, 512, 4, 1e-6, 10000, 5e-4, 10.0, 1e-4},
                      {"std_med", 200, 512, 4, 1e-6, 10000, 2e-4, 10.0, 1e-3},
                      {"rob_med", 200, 512, 3, 1e-2, 10000, 2e-4, 5.0, 1e-3},
                      {"gen", 1000, 512, 3, 1e-6, 5000, 2e-4, 5.0, 1e-3}};
  ASSERT_EQ(preset_names().size(), 6u);
  for (const Row& r : rows) {
    const Preset p = preset_by_name(r.name);
    EXPECT_EQ(p.n_train, r.n) << r.name;
    EXPECT_EQ(p.hidden, r.h) << r.name;
    EXPECT_EQ(p.layers, r.l) << r.name;
    EXPECT_EQ(p.weight_decay, r.wd) << r.name;
    EXPECT_EQ(p.steps, r.steps) << r.name;
    EXPECT_EQ(p.lr, r.lr) << r.name;
    EXPECT_EQ(p.beta_max, r.bmax) << r.name;
    EXPECT_EQ(p.t_min, r.tmin) << r.name;
    EXPECT_NO_THROW(p.validate());
  }
}

TEST(Presets, UnknownNameListsValidNames) {
  try {
    preset_by_name("huge_memo");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const auto& n : preset_names()) EXPECT_NE(msg.find(n), std::string::npos) << n;
  }
}

TEST(Presets, ScalingIsUniform) {
  const Preset p = preset_by_name("deep_memo");
  const Preset q = scaled(p, 0.25);
  EXPECT_EQ(q.steps, 5000);
  EXPECT_EQ(q.hidden, 512);
  EXPECT_EQ(q.n_train, 13);  // round(12.5) away from zero
  EXPECT_EQ(q.layers, p.layers);
  EXPECT_EQ(q.lr, p.lr);
  EXPECT_EQ(q.scale, 0.25);
  EXPECT_EQ(scaled(p, 1.0), p);
  EXPECT_THROW(scaled(p, 0.0), ConfigError);
}

TEST(Presets, ConfigRoundTripAndValidation) {
  Preset p = scaled(preset_by_name("rob_med"), 0.5);
  p.seed = 17;
  p.distribution = "projected_normal";
  EXPECT_EQ(Preset::from_config(KeyValueConfig::parse(p.to_config().serialize())), p);
  Preset bad = p;
  bad.t_min = 2.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = p;
  bad.distribution = "gaussian";
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(RunPreset, ZeroStepsRecordsOnlyTheInitialRow) {
  Preset p = tiny_preset();
  p.steps = 0;
  const fs::path dir = scratch("zero_steps");
  const PresetRun run = run_preset(p, dir.string());
  ASSERT_EQ(run.trace.size(), 1u);
  EXPECT_EQ(run.trace[0].step, 0);
  for (const char* f : {"trace.csv", "summary.json", "config.txt", "checkpoint.bin"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_EQ(Preset::from_config(KeyValueConfig::load((dir / "config.txt").string())), p);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_TRUE(summary.contains("final_memorization"));
}

TEST(RunPreset, TraceIsFiniteWithIncreasingSteps) {
  Preset p = tiny_preset();
  p.steps = 20;
  const PresetRun run = run_preset(p);
  ASSERT_EQ(run.trace.size(), 5u);  // steps 0, 5, 10, 15, 20
  for (std::size_t i = 0; i < run.trace.size(); ++i) {
    const TraceRow& r = run.trace[i];
    if (i > 0) EXPECT_GT(r.step, run.trace[i - 1].step);
    EXPECT_TRUE(std::isfinite(r.loss) && std::isfinite(r.alignment) && std::isfinite(r.manifold_error) &&
                std::isfinite(r.memorization));
    EXPECT_GE(r.memorization, 0.0);
    EXPECT_LE(r.memorization, 1.0);
  }
  EXPECT_EQ(run.trace.back().step, 20);
}

TEST(RunPreset, DeterministicGivenSeed) {
  Preset p = tiny_preset();
  p.steps = 10;
  const PresetRun a = run_preset(p), b = run_preset(p);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].loss, b.trace[i].loss);
    EXPECT_EQ(a.trace[i].memorization, b.trace[i].memorization);
  }
}

TEST(TheoremSuite, UnknownSuiteListsValidNames) {
  try {
    run_theorem_suite("no_such_suite", "");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    for (const auto& n : suite_names()) EXPECT_NE(std::string(e.what()).find(n), std::string::npos) << n;
  }
}

TEST(TheoremSuite, EikonalWritesReport) {
  const fs::path dir = scratch("suite");
  const SuiteResult r = run_theorem_suite("eikonal", dir.string());
  EXPECT_TRUE(r.pass) << r.summary;
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(j.at("pass").get<bool>(), true);
}

TEST(Io, TraceCsvRoundTrip) {
  const fs::path dir = scratch("trace");
  MetricTrace t = two_rows();
  t[1].loss = 1.0 / 3.0;
  write_trace_csv((dir / "t.csv").string(), t);
  const MetricTrace back = read_trace_csv((dir / "t.csv").string());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].step, 50);
  EXPECT_EQ(back[1].loss, 1.0 / 3.0);
  EXPECT_EQ(back[1].alignment, 0.85);
}

TEST(Io, CloudCsvRoundTrip) {
  const fs::path dir = scratch("cloud");
  const Cloud c{(Vec(3) << 1, 2, 3).finished(), (Vec(3) << -0.1, 1e-9, 1.0 / 7.0).finished()};
  write_cloud_csv((dir / "c.csv").string(), c);
  const Cloud back = read_cloud_csv((dir / "c.csv").string());
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(back[i], c[i]);
}

TEST(Io, CheckpointRoundTrip) {
  const fs::path dir = scratch("ckpt");
  ScoreNetConfig cfg;
  cfg.input_dim = 3;
  cfg.hidden = 8;
  cfg.n_blocks = 2;
  cfg.time_embed_dim = 8;
  const NoiseSchedule s = NoiseSchedule::vp(0.1, 20.0, 1e-3);
  Rng r1(1), r2(2);
  ScoreNet a(cfg, s, r1), b(cfg, s, r2);
  for (Mat* p : a.parameters()) p->setRandom();
  save_checkpoint((dir / "n.bin").string(), a, Record().add("step", 7));
  load_checkpoint((dir / "n.bin").string(), b);
  const auto pa = std::as_const(a).parameters(), pb = std::as_const(b).parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i], *pb[i]);
  // Size: 8-byte magic + 8-byte length + header + payload.
  EXPECT_GE(fs::file_size(dir / "n.bin"), 16 + 8 * a.n_parameters());

  ScoreNetConfig other = cfg;
  other.hidden = 4;
  other.time_embed_dim = 4;
  ScoreNet c(other, s, r1);
  EXPECT_THROW(load_checkpoint((dir / "n.bin").string(), c), InvalidArgument);
  write_text((dir / "junk.bin").string(), "not a checkpoint at all");
  EXPECT_THROW(load_checkpoint((dir / "junk.bin").string(), c), InvalidArgument);
}

TEST(Io, JsonRecord) {
  Record r;
  r.add("name", "x").add("pass", true).add("n", 3).add("v", std::vector<double>{1.5, 2.0});
  r.child("sub", Record().add("a", 0.25));
  r.list("rows", {Record().add("i", 0), Record().add("i", 1)});
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_EQ(j.at("name"), "x");
  EXPECT_EQ(j.at("pass"), true);
  EXPECT_EQ(j.at("n"), 3);
  EXPECT_EQ(j.at("v").size(), 2u);
  EXPECT_EQ(j.at("sub").at("a"), 0.25);
  EXPECT_EQ(j.at("rows").at(1).at("i"), 1);
}

TEST(Plot, TwoRowTraceGivesTwoPolylinesPerPanel) {
  const auto panels = trace_svgs(two_rows());
  ASSERT_EQ(panels.size(), 2u);
  for (const auto& [name, svg] : panels) {
    EXPECT_EQ(svg.rfind("<svg", 0), 0u) << name;
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(count(svg, "<polyline"), 2u) << name;
  }
}

TEST(Plot, DeterministicBytes) {
  const fs::path a = scratch("plot_a"), b = scratch("plot_b");
  const auto fa = emit_plots(two_rows(), a.string());
  const auto fb = emit_plots(two_rows(), b.string());
  ASSERT_EQ(fa.size(), 2u);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    EXPECT_EQ(fs::path(fa[i]).filename(), fs::path(fb[i]).filename());
    EXPECT_EQ(slurp(fa[i]), slurp(fb[i]));
  }
}

TEST(Plot, EmptyAndNonFiniteTracesAreRejected) {
  EXPECT_THROW(trace_svgs({}), EmptyTrace);
  MetricTrace t = two_rows();
  t[1].loss = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(trace_svgs(t), InvalidArgument);
}
