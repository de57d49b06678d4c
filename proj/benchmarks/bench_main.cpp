// Micro-benchmarks for the hot paths. Sizes follow the acceptance scenes.
#include <benchmark/benchmark.h>

#include <random>

#include "fmgpan/adaptive_net.hpp"
#include "fmgpan/metrics.hpp"
#include "fmgpan/mtf.hpp"
#include "fmgpan/nnls.hpp"
#include "fmgpan/tensor.hpp"

namespace {

using namespace fmgpan;

ImageTensor noise(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  ImageTensor t(h, w, c);
  for (double& v : t.data()) v = d(gen);
  return t;
}

const SensorSpec& qb() {
  static const SensorSpec s = resolve_sensor_spec("qb", default_preset_dir());
  return s;
}

void BM_MtfBlur(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, n, 4, 1);
  for (auto _ : state) benchmark::DoNotOptimize(mtf_blur(x, qb(), BlurTarget::kMultispectral));
}
BENCHMARK(BM_MtfBlur)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Degrade(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, n, 4, 2);
  for (auto _ : state) benchmark::DoNotOptimize(degrade(x, qb(), BlurTarget::kMultispectral));
}
BENCHMARK(BM_Degrade)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Upsample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, n, 4, 3);
  for (auto _ : state) benchmark::DoNotOptimize(upsample_poly(x, 4));
}
BENCHMARK(BM_Upsample)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const auto variant = static_cast<Variant>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto params = init_params(variant, 4, 7);
  const auto delta = noise(n, n, 4, 4), yhat = noise(n, n, 4, 5);
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, delta, yhat));
}
BENCHMARK(BM_Forward)
    ->Args({128, static_cast<long>(Variant::kDefault)})
    ->Args({256, static_cast<long>(Variant::kDefault)})
    ->Args({256, static_cast<long>(Variant::kLightweight)})
    ->Unit(benchmark::kMillisecond);

void BM_Backward(benchmark::State& state) {
  const auto variant = static_cast<Variant>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto params = init_params(variant, 4, 7);
  const auto delta = noise(n, n, 4, 4), yhat = noise(n, n, 4, 5);
  const auto fr = forward(params, delta, yhat);
  const auto g = noise(n, n, 4, 6);
  for (auto _ : state) benchmark::DoNotOptimize(backward(params, fr.cache, g));
}
BENCHMARK(BM_Backward)
    ->Args({128, static_cast<long>(Variant::kDefault)})
    ->Args({256, static_cast<long>(Variant::kDefault)})
    ->Args({256, static_cast<long>(Variant::kLightweight)})
    ->Unit(benchmark::kMillisecond);

void BM_Q2n(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto a = noise(256, 256, c, 8), b = noise(256, 256, c, 9);
  for (auto _ : state) benchmark::DoNotOptimize(q2n(a, b, 32));
}
BENCHMARK(BM_Q2n)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Nnls(benchmark::State& state) {
  const auto cols = state.range(0);
  std::mt19937_64 gen(10);
  std::normal_distribution<double> d;
  Eigen::MatrixXd a(256, cols);
  Eigen::VectorXd b(256);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = d(gen);
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = d(gen);
  for (auto _ : state) benchmark::DoNotOptimize(solve_nnls(a, b));
}
BENCHMARK(BM_Nnls)->Arg(5)->Arg(9)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
