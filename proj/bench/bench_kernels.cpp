// Serial reference vs OpenMP kernels. Threads default to the OpenMP setting;
// pin with OMP_NUM_THREADS.

#include "dcpanel/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace dcp;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
  return m;
}

// Panel of m series over T periods, as in the pooled covariance of Stage 1.
void BM_CrossProductSerial(benchmark::State& state) {
  const Matrix x = random_matrix(state.range(0), 157, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::cross_product_serial(x));
}

void BM_CrossProductParallel(benchmark::State& state) {
  const Matrix x = random_matrix(state.range(0), 157, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::cross_product(x));
}

struct Candidates {
  Vector target;
  Matrix pool;
  std::vector<unsigned char> skip;
  std::vector<double> ref;

  explicit Candidates(Index n) : target(random_matrix(200, 1, 2).col(0)), pool(random_matrix(200, n, 3)) {
    skip.assign(static_cast<std::size_t>(n), 0);
    for (Index j = 0; j < n; ++j) ref.push_back(pool.col(j).squaredNorm());
  }
  kernels::CandidateInputs inputs() const { return {target, pool, skip, ref, 3}; }
};

// One MTB pass over n candidates.
void BM_CandidateTstatsSerial(benchmark::State& state) {
  const Candidates c(state.range(0));
  Vector out;
  for (auto _ : state) {
    kernels::candidate_tstats_serial(c.inputs(), out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_CandidateTstatsParallel(benchmark::State& state) {
  const Candidates c(state.range(0));
  Vector out;
  for (auto _ : state) {
    kernels::candidate_tstats(c.inputs(), out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_CrossProductSerial)->Arg(40)->Arg(200)->Arg(800);
BENCHMARK(BM_CrossProductParallel)->Arg(40)->Arg(200)->Arg(800);
BENCHMARK(BM_CandidateTstatsSerial)->Arg(100)->Arg(1000)->Arg(10000);
BENCHMARK(BM_CandidateTstatsParallel)->Arg(100)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
