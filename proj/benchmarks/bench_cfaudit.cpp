#include <benchmark/benchmark.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "cfaudit/audit/synthetic.hpp"
#include "cfaudit/cfgen/genetic.hpp"
#include "cfaudit/cfgen/kdtree.hpp"
#include "cfaudit/data/split.hpp"
#include "cfaudit/model/evaluation.hpp"
#include "cfaudit/model/learners.hpp"

using namespace cfaudit;

namespace {

struct Fixture {
  data::Dataset train;
  data::Encoder encoder;
  model::ClassifierHandle model;
  Matrix queries;
};

// Synthetic data with a fitted tree; queries are the rows it predicts 0.
const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  audit::SyntheticSpec spec;
  spec.n = n;
  spec.seed = 1;
  const auto ds = audit::generate_synthetic(spec);
  data::Encoder enc(ds.schema());
  const auto x = enc.encode(ds.features());
  auto h = model::fit({model::Family::decision_tree, {{"max_depth", 6}}}, x, ds.target(), 0);
  const auto pred = h.predict(x);
  Matrix q;
  for (std::size_t i = 0; i < ds.size() && q.rows() < 64; ++i) {
    if (pred.labels[i] == 0) q.append_row(ds.row(i));
  }
  return cache.emplace(n, Fixture{ds, enc, h, q}).first->second;
}

void BM_KdTreeNearest(benchmark::State& state) {
  const auto& fx = fixture(static_cast<std::size_t>(state.range(0)));
  cfgen::KdTreeGenerator gen(fx.train, cfgen::DecisionProbe(fx.model, fx.encoder),
                             cfgen::FeatureDistance(fx.train.schema(), fx.train.features()));
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gen.nearest(fx.queries.row(q++ % fx.queries.rows()), 1, 50));
  }
}
BENCHMARK(BM_KdTreeNearest)->Arg(2000)->Arg(20000);

void BM_LinearScanNearest(benchmark::State& state) {
  const auto& fx = fixture(static_cast<std::size_t>(state.range(0)));
  const cfgen::FeatureDistance dist(fx.train.schema(), fx.train.features());
  const auto pred = fx.model.predict(fx.encoder.encode(fx.train.features()));
  std::size_t q = 0;
  for (auto _ : state) {
    const auto x = fx.queries.row(q++ % fx.queries.rows());
    std::vector<cfgen::Neighbor> all;
    for (std::size_t i = 0; i < fx.train.size(); ++i) {
      if (pred.labels[i] == 1) all.push_back({i, dist(x, fx.train.row(i))});
    }
    std::partial_sort(all.begin(), all.begin() + std::min<std::ptrdiff_t>(50, std::ssize(all)), all.end());
    benchmark::DoNotOptimize(all.data());
  }
}
BENCHMARK(BM_LinearScanNearest)->Arg(2000)->Arg(20000);

void BM_GeneticGenerate(benchmark::State& state) {
  const auto& fx = fixture(2000);
  cfgen::GeneticConfig cfg;
  cfg.population = static_cast<std::size_t>(state.range(0));
  cfg.generations = 50;
  const cfgen::GeneticGenerator gen(fx.train.schema(), fx.train.features(),
                                    cfgen::DecisionProbe(fx.model, fx.encoder),
                                    cfgen::FeatureDistance(fx.train.schema(), fx.train.features()), cfg);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(gen.generate(fx.queries.row(0), 1, 10, 0, seed++));
  }
}
BENCHMARK(BM_GeneticGenerate)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_DecisionTreeFit(benchmark::State& state) {
  const auto& fx = fixture(static_cast<std::size_t>(state.range(0)));
  const auto x = fx.encoder.encode(fx.train.features());
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::DecisionTree::train({}, x.values, fx.train.target()));
  }
}
BENCHMARK(BM_DecisionTreeFit)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_RocAuc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = u(rng);
    labels[i] = u(rng) < scores[i] ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(model::roc_auc(scores, labels));
  state.SetComplexityN(static_cast<benchmark::IterationCount>(n));
}
BENCHMARK(BM_RocAuc)->RangeMultiplier(10)->Range(1000, 1000000)->Complexity(benchmark::oNLogN);

}  // namespace
BENCHMARK_MAIN();
