#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "sketchreg/hashing.hpp"
#include "sketchreg/linalg.hpp"
#include "sketchreg/sketch.hpp"

namespace {

using namespace sketchreg;

void BM_Sign4(benchmark::State& state) {
  const hashing::SketchSeed seed(1);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(hashing::sign4(seed, i++));
}
BENCHMARK(BM_Sign4);

void BM_Bucket2(benchmark::State& state) {
  const hashing::SketchSeed seed(1);
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(hashing::bucket2(seed, i++, 16384));
}
BENCHMARK(BM_Bucket2);

DenseMatrix block(Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  DenseMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Rows per second for one method; range(0) is k, d_total fixed at 51.
void push_rows(benchmark::State& state, SketchMethod method, SrhtMode mode) {
  const auto k = static_cast<std::uint64_t>(state.range(0));
  constexpr Eigen::Index rows = 4096;
  const DenseMatrix data = block(rows, 51);
  for (auto _ : state) {
    SketchBuilder b(method, 51, k, rows, hashing::SketchSeed(2), {mode, 1024});
    b.push_rows(0, data);
    b.flush();
    benchmark::DoNotOptimize(b.accumulator().data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}

void BM_PushRad(benchmark::State& s) { push_rows(s, SketchMethod::Rad, SrhtMode::PerRow); }
void BM_PushSrhtPerRow(benchmark::State& s) { push_rows(s, SketchMethod::Srht, SrhtMode::PerRow); }
void BM_PushSrhtBlock(benchmark::State& s) { push_rows(s, SketchMethod::Srht, SrhtMode::Block); }
void BM_PushCw(benchmark::State& s) { push_rows(s, SketchMethod::Cw, SrhtMode::PerRow); }
void BM_PushGram(benchmark::State& s) { push_rows(s, SketchMethod::Gram, SrhtMode::PerRow); }
BENCHMARK(BM_PushRad)->Arg(256)->Arg(1024);
BENCHMARK(BM_PushSrhtPerRow)->Arg(256)->Arg(1024);
BENCHMARK(BM_PushSrhtBlock)->Arg(256)->Arg(1024);
BENCHMARK(BM_PushCw)->Arg(1024)->Arg(16384);
BENCHMARK(BM_PushGram)->Arg(50);

void BM_Fwht(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)), 1.0);
  for (auto _ : state) {
    linalg::fwht_inplace(v);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fwht)->RangeMultiplier(16)->Range(1 << 8, 1 << 20);

}  // namespace

BENCHMARK_MAIN();
