#include <random>

#include <benchmark/benchmark.h>

#include "probemb/adapter.hpp"
#include "probemb/objective.hpp"
#include "probemb/special.hpp"

namespace {

using namespace probemb;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

void BM_LogGamma(benchmark::State& state) {
  double x = 0.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_gamma(x));
    x = x < 1e5 ? x * 1.7 : 0.5;
  }
}
BENCHMARK(BM_LogGamma);

void BM_KernelForward(benchmark::State& state, Family family) {
  const int b = static_cast<int>(state.range(0));
  const int d = 512;
  const Matrix raw = random_matrix(b, family == Family::gauss ? 2 * d : d, 1);
  const Matrix points = normalize_rows(random_matrix(b, d, 2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel_forward(family, raw, points, 1e-6));
  }
  state.SetItemsProcessed(state.iterations() * b * b);
}
BENCHMARK_CAPTURE(BM_KernelForward, vmf, Family::vmf)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_KernelForward, ps, Family::ps)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_KernelForward, gauss, Family::gauss)->Arg(64)->Arg(256);

void BM_KernelBackward(benchmark::State& state, Family family) {
  const int b = static_cast<int>(state.range(0));
  const int d = 512;
  const Matrix raw = random_matrix(b, family == Family::gauss ? 2 * d : d, 1);
  const Matrix points = normalize_rows(random_matrix(b, d, 2));
  const Matrix dL = random_matrix(b, b, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backprop_kernel(family, raw, points, dL, 1e-6));
  }
}
BENCHMARK_CAPTURE(BM_KernelBackward, vmf, Family::vmf)->Arg(256);
BENCHMARK_CAPTURE(BM_KernelBackward, ps, Family::ps)->Arg(256);
BENCHMARK_CAPTURE(BM_KernelBackward, gauss, Family::gauss)->Arg(256);

void BM_InfoNce(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  const LikelihoodMatrix L{random_matrix(b, b, 4), Kernel::vmf};
  for (auto _ : state) {
    benchmark::DoNotOptimize(infonce(L, 0.0));
  }
}
BENCHMARK(BM_InfoNce)->Arg(256)->Arg(1024);

void BM_AdapterForwardBackward(benchmark::State& state) {
  const int b = static_cast<int>(state.range(0));
  const AdapterConfig cfg{.d_in = 512, .d_hidden = 512};
  AdapterParams params = init_adapter(cfg, 1);
  const Matrix x = random_matrix(b, cfg.d_in, 5);
  const Matrix g = random_matrix(b, cfg.d_out(), 6);
  for (auto _ : state) {
    const BatchOutput out = forward(params, x, Mode::train);
    benchmark::DoNotOptimize(backward(params, out, g));
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_AdapterForwardBackward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_AdapterEval(benchmark::State& state) {
  const AdapterConfig cfg{.d_in = 512, .d_hidden = 512};
  const AdapterParams params = init_adapter(cfg, 1);
  const Matrix x = random_matrix(state.range(0), cfg.d_in, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_eval(params, x));
  }
}
BENCHMARK(BM_AdapterEval)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
