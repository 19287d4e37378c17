#include <benchmark/benchmark.h>

#include <random>

#include "rdfs/ad/ops.hpp"
#include "rdfs/attack/attacks.hpp"
#include "rdfs/defence/feature_subset.hpp"
#include "rdfs/det/detector.hpp"
#include "rdfs/img/manipulations.hpp"

using namespace rdfs;

namespace {

std::vector<float> uniform(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0, 1);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

det::CnnDetector desk_detector() {
  det::Network<float> net(det::bayar_style(det::Scale::desk));
  net.initialize(1);
  return det::CnnDetector(std::move(net), {"median", 1, 0, 0, 0});
}

}  // namespace

static void BM_Conv2dForwardBackward(benchmark::State& state) {
  const std::size_t side = static_cast<std::size_t>(state.range(0));
  ad::Tensor<float> x({8, 3, side, side}, uniform(8 * 3 * side * side, 1), true);
  ad::Tensor<float> k({16, 3, 3, 3}, uniform(16 * 27, 2), true);
  for (auto _ : state) {
    ad::Tape<float> tape;
    tape.backward(ad::sum(tape, ad::conv2d(tape, x, k, 1, 1)));
    benchmark::DoNotOptimize(k.grad().data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(16)->Arg(32);

static void BM_MedianFilter(benchmark::State& state) {
  const img::GrayImage im(256, 256, uniform(256 * 256, 3));
  for (auto _ : state) benchmark::DoNotOptimize(img::median_filter(im, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_MedianFilter)->Arg(3)->Arg(5);

static void BM_DeskCnnLogits(benchmark::State& state) {
  const auto det = desk_detector();
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  const auto in = uniform(batch * det.input_size(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(det.logits(in, batch));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch));
}
BENCHMARK(BM_DeskCnnLogits)->Arg(1)->Arg(64);

static void BM_DeskCnnInputGradient(benchmark::State& state) {
  const auto det = desk_detector();
  const auto in = uniform(det.input_size(), 5);
  std::vector<float> grad(det.input_size());
  for (auto _ : state) benchmark::DoNotOptimize(det.loss_and_gradient(in, img::Label::original, grad));
}
BENCHMARK(BM_DeskCnnInputGradient);

static void BM_SelectFeatures(benchmark::State& state) {
  std::uint64_t key = 1;
  for (auto _ : state) benchmark::DoNotOptimize(defence::select_features(key++, 3200, 600));
}
BENCHMARK(BM_SelectFeatures);

BENCHMARK_MAIN();
