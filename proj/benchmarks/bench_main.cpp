#include <benchmark/benchmark.h>

#include "mfd/geometry.hpp"
#include "mfd/measures.hpp"
#include "mfd/nn.hpp"
#include "mfd/sampler.hpp"
#include "mfd/score.hpp"

namespace {

using namespace mfd;

void BM_ProjectSO3(benchmark::State& state) {
  const Manifold m = Manifold::special_orthogonal(3);
  Rng rng(0);
  const Vec x = m.flatten(haar_rotation(3, rng)) + 0.1 * gaussian_vec(rng, 9);
  for (auto _ : state) benchmark::DoNotOptimize(m.project(x));
}
BENCHMARK(BM_ProjectSO3);

void BM_OracleScoreBatch(benchmark::State& state) {
  const Manifold m = Manifold::circle(1.0, 2);
  Rng rng(0);
  const FieldPtr f = oracle_mixture_score(m.sample(SurfaceDensity::uniform(), rng, state.range(0)));
  const Mat x = Mat::Random(2, 1024);
  for (auto _ : state) benchmark::DoNotOptimize(f->eval_batch(x, 0.1));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_OracleScoreBatch)->Arg(64)->Arg(1024);

void BM_ScoreNetForward(benchmark::State& state) {
  Rng rng(0);
  ScoreNetConfig c;
  c.input_dim = 9;
  c.hidden = static_cast<int>(state.range(0));
  c.n_blocks = 4;
  c.time_embed_dim = c.hidden;
  ScoreNet net(c, NoiseSchedule::vp(0.1, 20.0, 1e-5), rng);
  const Mat x = Mat::Random(9, 256);
  const Vec t = Vec::Constant(256, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, t));
}
BENCHMARK(BM_ScoreNetForward)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ScoreNetTrainStep(benchmark::State& state) {
  Rng rng(0);
  ScoreNetConfig c;
  c.input_dim = 9;
  c.hidden = static_cast<int>(state.range(0));
  c.n_blocks = 4;
  c.time_embed_dim = c.hidden;
  ScoreNet net(c, NoiseSchedule::vp(0.1, 20.0, 1e-5), rng);
  OptimState opt = make_optim_state(std::as_const(net).parameters(), AdamWConfig{});
  const Mat x0 = Mat::Random(9, 64), eps = Mat::Random(9, 64);
  const Vec t = Vec::LinSpaced(64, 0.01, 1.0);
  Grads g;
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.dsm_loss_and_grad(x0, eps, t, &g));
    adamw_step(net, g, opt);
  }
}
BENCHMARK(BM_ScoreNetTrainStep)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_KlEstimate(benchmark::State& state) {
  const Manifold m = Manifold::circle(1.0, 3);
  Rng rng(0);
  const SmoothedMixture pop = population_smoothed(m, SurfaceDensity::uniform(), 0.5, 512);
  const SmoothedMixture emp = SmoothedMixture::uniform(m.sample(SurfaceDensity::uniform(), rng, 256), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(kl_estimate(emp, pop, 2000, rng));
}
BENCHMARK(BM_KlEstimate)->Unit(benchmark::kMillisecond);

void BM_HybridSampleCircle(benchmark::State& state) {
  const Manifold m = Manifold::circle(1.0, 2);
  Rng rng(0);
  const FieldPtr field = switched_score(oracle_mixture_score(m.sample(SurfaceDensity::uniform(), rng, 200)),
                                       projection_score(m, Domain::tube(m, 1.0)), 0.25);
  SamplerConfig sc;
  sc.n_sde_steps = 200;
  sc.n_ode_steps = 64;
  for (auto _ : state) benchmark::DoNotOptimize(hybrid_sample(*field, NoiseSchedule::ve(), 256, sc, rng));
}
BENCHMARK(BM_HybridSampleCircle)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
