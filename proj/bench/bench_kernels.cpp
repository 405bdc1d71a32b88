// Serial reference vs OpenMP kernels at the pinned benchmark's sizes.
// The thread count of the omp variants is the benchmark argument.

#include "mudloc/csi.hpp"
#include "mudloc/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace mudloc;
namespace k = mudloc::kernels;

namespace {

// Stacked features of three views (270 + 270 + 180 rows) over 20 cells x 240 training packets.
constexpr int kDim = 720;
constexpr int kSamples = 4800;
constexpr int kRank = 60;
constexpr int kCells = 20;

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

const Matrix& features() {
  static const Matrix x = random_matrix(kDim, kSamples, 1);
  return x;
}

const Labels& labels() {
  static const Labels l = [] {
    Labels out(kSamples);
    for (int j = 0; j < kSamples; ++j) out[j] = 1 + j % kCells;
    return out;
  }();
  return l;
}

const std::vector<ComplexMatrix>& packets() {
  static const std::vector<ComplexMatrix> p = [] {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    std::vector<ComplexMatrix> out(300, ComplexMatrix(30, 9));
    for (auto& m : out) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = {n(rng), n(rng)};
    }
    return out;
  }();
  return p;
}

const std::vector<k::ColumnPair>& pairs() {
  static const auto p = adjacent_receiver_pairs(AntennaLayout::tx_major(3, 3));
  return p;
}

void set_threads(benchmark::State& state) { k::set_thread_count(static_cast<int>(state.range(0))); }

void BM_GramSerial(benchmark::State& state) {
  const Matrix x = features().topRows(270);
  for (auto _ : state) benchmark::DoNotOptimize(k::serial::gram(x, x));
}
void BM_GramOmp(benchmark::State& state) {
  set_threads(state);
  const Matrix x = features().topRows(270);
  for (auto _ : state) benchmark::DoNotOptimize(k::omp::gram(x, x));
}

void BM_ProjectSerial(benchmark::State& state) {
  const Matrix w = random_matrix(kDim, kRank, 3);
  for (auto _ : state) benchmark::DoNotOptimize(k::serial::project(w, features()));
}
void BM_ProjectOmp(benchmark::State& state) {
  set_threads(state);
  const Matrix w = random_matrix(kDim, kRank, 3);
  for (auto _ : state) benchmark::DoNotOptimize(k::omp::project(w, features()));
}

void BM_ClassSumsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(k::serial::class_sums(features(), labels(), kCells));
}
void BM_ClassSumsOmp(benchmark::State& state) {
  set_threads(state);
  for (auto _ : state) benchmark::DoNotOptimize(k::omp::class_sums(features(), labels(), kCells));
}

void BM_AmplitudeSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(k::serial::amplitude_features(packets()));
}
void BM_AmplitudeOmp(benchmark::State& state) {
  set_threads(state);
  for (auto _ : state) benchmark::DoNotOptimize(k::omp::amplitude_features(packets()));
}

void BM_PhaseDiffSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(k::serial::phase_difference_features(packets(), pairs()));
}
void BM_PhaseDiffOmp(benchmark::State& state) {
  set_threads(state);
  for (auto _ : state) benchmark::DoNotOptimize(k::omp::phase_difference_features(packets(), pairs()));
}

void BM_DistancesSerial(benchmark::State& state) {
  const Matrix t = random_matrix(114, kCells, 4);
  const Vector q = random_matrix(114, 1, 5);
  for (auto _ : state) benchmark::DoNotOptimize(k::serial::squared_distances(t, q));
}
void BM_DistancesOmp(benchmark::State& state) {
  set_threads(state);
  const Matrix t = random_matrix(114, kCells, 4);
  const Vector q = random_matrix(114, 1, 5);
  for (auto _ : state) benchmark::DoNotOptimize(k::omp::squared_distances(t, q));
}

}  // namespace

#define MUDLOC_PAIR(name)                                       \
  BENCHMARK(BM_##name##Serial)->Unit(benchmark::kMicrosecond); \
  BENCHMARK(BM_##name##Omp)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMicrosecond)

MUDLOC_PAIR(Gram);
MUDLOC_PAIR(Project);
MUDLOC_PAIR(ClassSums);
MUDLOC_PAIR(Amplitude);
MUDLOC_PAIR(PhaseDiff);
MUDLOC_PAIR(Distances);

BENCHMARK_MAIN();
