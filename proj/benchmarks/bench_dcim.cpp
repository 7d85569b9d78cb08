#include <benchmark/benchmark.h>

#include "dcim/data_io.hpp"
#include "dcim/network.hpp"
#include "dcim/objectives.hpp"
#include "dcim/oracle.hpp"
#include "dcim/train.hpp"

using namespace dcim;
using namespace dcim::oracle;

namespace {

Dataset mnist_like(std::size_t n, Rng& rng) {
  Dataset ds;
  ds.class_count = 10;
  for (std::size_t r = 0; r < n; ++r) {
    Vector x(784);
    for (double& v : x) v = rng.uniform() < 0.8 ? 0.0 : rng.uniform();
    ds.images.push_back(std::move(x));
    ds.labels.push_back(rng.below(10));
  }
  return ds;
}

void BM_Grad(benchmark::State& state) {
  const auto obj = static_cast<Objective>(state.range(0));
  const auto precision = state.range(1) ? Precision::Single : Precision::Double;
  const std::size_t rows = static_cast<std::size_t>(state.range(2));
  const Params p = init_params(parse_arch("784-512-512-10"), 1);
  Rng rng(2);
  const LabeledBatch b = make_batch(mnist_like(rows, rng));
  for (auto _ : state) {
    auto g = grad(p, b, {obj, 1.0}, rng, {1, precision});
    benchmark::DoNotOptimize(g.first.total);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * rows));
}
BENCHMARK(BM_Grad)
    ->ArgNames({"objective", "single", "rows"})
    ->Args({0, 1, 128})
    ->Args({1, 1, 128})
    ->Args({2, 1, 128})
    ->Args({1, 0, 128})
    ->Args({1, 1, 512})
    ->Unit(benchmark::kMillisecond);

void BM_ForwardMeans(benchmark::State& state) {
  const Params p = init_params(parse_arch("784-512-512-10"), 1);
  Rng rng(3);
  Vector x(784);
  for (double& v : x) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(forward_means(p, x).means.back()[0]);
}
BENCHMARK(BM_ForwardMeans)->Unit(benchmark::kMicrosecond);

void BM_SampleReverse(benchmark::State& state) {
  const Params p = init_params(parse_arch("784-512-512-10"), 1);
  Rng rng(4);
  const auto mode = state.range(0) ? SampleMode::SampleAll : SampleMode::SampleTopThenMeans;
  for (auto _ : state) benchmark::DoNotOptimize(sample_reverse(p, 3, rng, mode).image[0]);
}
BENCHMARK(BM_SampleReverse)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_EvaluateDataset(benchmark::State& state) {
  const Params p = init_params(parse_arch("784-512-512-10"), 1);
  Rng rng(5);
  const Dataset ds = mnist_like(2048, rng);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_dataset(p, ds, Objective::Bidirectional).total);
}
BENCHMARK(BM_EvaluateDataset)->Unit(benchmark::kMillisecond);

void BM_ExactConditional(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  const GeneralCim c = GeneralCim::random(std::vector<std::size_t>(m, 2), std::vector<std::size_t>(m, 2), rng, 1.0);
  const Config x(m, 1);
  for (auto _ : state) benchmark::DoNotOptimize(exact_conditional(c, x).identity_error);
}
BENCHMARK(BM_ExactConditional)->DenseRange(4, 12, 4)->Unit(benchmark::kMicrosecond);

void BM_ExactForwardPosterior(benchmark::State& state) {
  Rng rng(7);
  const std::size_t w = static_cast<std::size_t>(state.range(0));
  const TinyDcim m(random_params(make_spec({w, w, w, 3}, Encoding::ZeroOne), rng, 1.0));
  const Config x0(w, 1);
  for (auto _ : state) benchmark::DoNotOptimize(exact_forward_posterior(m, x0).top.probs[0]);
}
BENCHMARK(BM_ExactForwardPosterior)->DenseRange(4, 8, 2)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
