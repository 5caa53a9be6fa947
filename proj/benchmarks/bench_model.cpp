#include <benchmark/benchmark.h>

#include "arlab/model.hpp"
#include "arlab/tasks.hpp"

using namespace arlab;

namespace {

struct Fixture {
  Task task;
  Weights w;
  Context x;

  Fixture(int d, int k, int length) {
    MixtureTaskConfig cfg;
    cfg.d = d;
    cfg.k = k;
    cfg.length = length;
    cfg.teacher_seed = 1;
    task = make_mixture_task(cfg);
    Rng rng(2);
    w.resize(task.features->dim());
    for (double& v : w) v = 0.1 * standard_normal(rng);
    x = task.sample(rng);
  }
};

std::shared_ptr<DenseFeatureMap> dense_view(const FeatureMap& inner) {
  return std::make_shared<DenseFeatureMap>(
      inner.dim(), inner.vocab(), inner.length(), inner.norm_bound(),
      [&inner](const Context& x, std::span<const Token> prefix, Token y, std::span<double> out) {
        inner.feature(x, prefix, y, out);
      });
}

void BM_SampleRollout(benchmark::State& state) {
  const Fixture f(32, 32, static_cast<int>(state.range(0)));
  Rng rng(3);
  for (auto _ : state) {
    const auto bound = f.task.features->bind(f.w, f.x);
    benchmark::DoNotOptimize(sample_rollout(*bound, 32, f.task.features->length(), rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleRollout)->Arg(16)->Arg(128);

void BM_PolicyGradient(benchmark::State& state) {
  const Fixture f(32, 32, static_cast<int>(state.range(0)));
  Rng rng(4);
  const auto length = static_cast<std::size_t>(state.range(0));
  const std::vector<double> adv(length, 1.0);
  std::vector<double> g(f.task.features->dim(), 0.0);
  for (auto _ : state) {
    const auto bound = f.task.features->bind(f.w, f.x);
    const Rollout r = sample_rollout(*bound, 32, static_cast<int>(length), rng);
    accumulate_policy_gradient(*bound, r, adv, g);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolicyGradient)->Arg(16)->Arg(128);

void BM_SeqLogprobStructured(benchmark::State& state) {
  const Fixture f(16, 8, 16);
  const Sequence y = f.task.label(f.x);
  for (auto _ : state) benchmark::DoNotOptimize(seq_logprob(f.w, *f.task.features, f.x, y));
}
BENCHMARK(BM_SeqLogprobStructured);

void BM_SeqLogprobDense(benchmark::State& state) {
  const Fixture f(16, 8, 16);
  const auto dense = dense_view(*f.task.features);
  const Sequence y = f.task.label(f.x);
  for (auto _ : state) benchmark::DoNotOptimize(seq_logprob(f.w, *dense, f.x, y));
}
BENCHMARK(BM_SeqLogprobDense);

}  // namespace

BENCHMARK_MAIN();
