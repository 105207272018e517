#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "qsf/harness.hpp"
#include "qsf/optimizer.hpp"
#include "qsf/qgauss.hpp"
#include "qsf/queuesim.hpp"
#include "qsf/sfgrad.hpp"

namespace {

// q is passed as q * 10 so the argument stays integral.
double q_arg(const benchmark::State& state) { return static_cast<double>(state.range(0)) / 10.0; }

void BM_SampleScalar(benchmark::State& state) {
  qsf::RngStream rng(1, 0);
  const double q = q_arg(state);
  for (auto _ : state) benchmark::DoNotOptimize(qsf::sample_scalar(rng, q));
}
BENCHMARK(BM_SampleScalar)->Arg(0)->Arg(5)->Arg(9)->Arg(10)->Arg(15)->Arg(20)->Arg(25);

void BM_SamplePerturbation4(benchmark::State& state) {
  qsf::RngStream rng(1, 1);
  const double q = q_arg(state);
  std::vector<double> eta(4);
  for (auto _ : state) {
    qsf::sample_perturbation(rng, q, eta);
    benchmark::DoNotOptimize(eta.data());
  }
}
BENCHMARK(BM_SamplePerturbation4)->Arg(0)->Arg(9)->Arg(10)->Arg(15);

void BM_EstimateGradient(benchmark::State& state) {
  const qsf::Objective f = [](std::span<const double> x) { return std::cos(x[0]) + x[1] * x[1]; };
  qsf::GradEstimatorConfig cfg;
  cfg.q = q_arg(state);
  cfg.beta = 0.1;
  cfg.dim = 2;
  cfg.num_perturbations = 1000;
  cfg.samples_per_perturbation = 1;
  qsf::RngStream rng(1, 2);
  const std::vector<double> theta{0.3, -0.2};
  for (auto _ : state) benchmark::DoNotOptimize(qsf::estimate_gradient(f, theta, cfg, rng));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_EstimateGradient)->Arg(9)->Arg(15);

void BM_QueueStep(benchmark::State& state) {
  qsf::QueueNetworkConfig cfg;
  qsf::QueueNetwork net(cfg, qsf::RngStream(1, 3));
  const std::vector<double> theta{1.2, 0.8, 1.1, 0.9};
  net.set_parameter(theta);
  for (auto _ : state) benchmark::DoNotOptimize(net.step());
}
BENCHMARK(BM_QueueStep);

void BM_TrialSmall(benchmark::State& state) {
  qsf::ExperimentConfig cfg;
  cfg.q_values = {0.9};
  cfg.beta_values = {0.25};
  cfg.optimizer.M = 1000;
  cfg.optimizer.L = 100;
  for (auto _ : state) benchmark::DoNotOptimize(qsf::run_trial(cfg, 0, 0, 0, nullptr));
  state.SetItemsProcessed(state.iterations() * 1000 * 100);
}
BENCHMARK(BM_TrialSmall)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
