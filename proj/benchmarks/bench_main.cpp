#include <benchmark/benchmark.h>

#include <vector>

#include "datasel/analysis.hpp"
#include "datasel/classifier.hpp"
#include "datasel/rng.hpp"
#include "datasel/scoring.hpp"
#include "datasel/selection.hpp"
#include "datasel/synthetic.hpp"

using namespace datasel;

namespace {

const SyntheticCorpus& corpus() {
  static const SyntheticCorpus c = [] {
    SyntheticSpec spec;
    spec.pool_size = 5000;
    spec.train_size = 2000;
    spec.test_size = 200;
    return generate_synthetic(spec, 1);
  }();
  return c;
}

TrainConfig bench_cfg() {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.el2n_epoch = 1;
  return cfg;
}

const ClassifierModel& model() {
  static const ClassifierModel m = train(corpus().train, bench_cfg(), 7);
  return m;
}

const std::vector<ScoreRecord>& scores() {
  static const std::vector<ScoreRecord> s = [] {
    const std::vector<ClassifierModel> models = {model()};
    return score_pool(models, corpus().pool);
  }();
  return s;
}

void BM_Entropy(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> p(static_cast<std::size_t>(state.range(0)));
  double sum = 0.0;
  for (double& x : p) sum += x = rng.uniform();
  for (double& x : p) x /= sum;
  const DomainDistribution d{p};
  for (auto _ : state) benchmark::DoNotOptimize(entropy(d));
}
BENCHMARK(BM_Entropy)->Arg(7)->Arg(64);

void BM_TrainEpoch(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(train(corpus().train, bench_cfg(), 7));
  state.SetItemsProcessed(state.iterations() * corpus().train.total_multiplicity());
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_ScorePool(benchmark::State& state) {
  const std::vector<ClassifierModel> models(static_cast<std::size_t>(state.range(0)), model());
  for (auto _ : state) benchmark::DoNotOptimize(score_pool(models, corpus().pool));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().pool.size()));
}
BENCHMARK(BM_ScorePool)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_SelectFiltered(benchmark::State& state) {
  const EntropyFilterParams params{20, 0.005};
  for (auto _ : state) {
    benchmark::DoNotOptimize(select_entropy_filtered(scores(), corpus().pool, state.range(0), params));
  }
}
BENCHMARK(BM_SelectFiltered)->Arg(250)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_KendallTau(benchmark::State& state) {
  Rng rng(5);
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform();
  }
  for (auto _ : state) benchmark::DoNotOptimize(kendall_tau_a(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTau)->RangeMultiplier(4)->Range(256, 65536)->Complexity(benchmark::oNLogN);

}  // namespace
BENCHMARK_MAIN();
