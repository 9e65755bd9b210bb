#include "kronlik/kronlik.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/LU>

namespace {

using namespace kronlik;

struct Problem {
  KroneckerCovariance cov;
  MatrixDataset data;
  Matrix mean;
};

Problem make_problem(Eigen::Index p, Eigen::Index q, std::size_t n, std::uint64_t seed = 1) {
  auto eng = stream_engine(seed, 0);
  KroneckerCovariance cov{random_spd(p, eng), random_spd(q, eng), false};
  auto data = simulate(cov, n, eng);
  const auto stats = compute_stats(data);
  return {cov, std::move(data), stats.m_hat};
}

Matrix reference_gamma() {
  Matrix g(2, 2);
  g << 0.15, 0.24, 0.24, 1.0;
  return g;
}

Matrix reference_psi() {
  Matrix p(2, 2);
  p << 1.69, 0.26, 0.26, 0.15;
  return p;
}

// Structured evaluation against forming the pq x pq covariance explicitly.
void BM_LogLikelihood(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const auto pr = make_problem(d, d, 50);
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(pr.data, pr.mean, pr.cov));
}
BENCHMARK(BM_LogLikelihood)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_LogLikelihoodDense(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const auto pr = make_problem(d, d, 50);
  for (auto _ : state) {
    const Matrix sigma = kron(pr.cov.psi, pr.cov.gamma);
    const Eigen::LLT<Matrix> llt(sigma);
    double quad = 0.0;
    for (const auto& x : pr.data.observations()) {
      const Vector r = vec(x - pr.mean);
      quad += r.dot(llt.solve(r));
    }
    benchmark::DoNotOptimize(quad);
  }
}
BENCHMARK(BM_LogLikelihoodDense)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_FlipFlop(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const auto pr = make_problem(d, d, static_cast<std::size_t>(d * d + 5));
  for (auto _ : state) benchmark::DoNotOptimize(flip_flop(pr.data));
}
BENCHMARK(BM_FlipFlop)->Arg(2)->Arg(4)->Arg(8);

void BM_DiagonalMle(benchmark::State& state) {
  const auto d = static_cast<Eigen::Index>(state.range(0));
  const auto pr = make_problem(d, d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(diagonal_mle(pr.data));
}
BENCHMARK(BM_DiagonalMle)->Arg(2)->Arg(5)->Arg(10);

void BM_OneDiagP2(benchmark::State& state) {
  const auto q = static_cast<Eigen::Index>(state.range(0));
  const auto pr = make_problem(2, q, static_cast<std::size_t>(q + 3));
  for (auto _ : state) benchmark::DoNotOptimize(one_diag_mle_p2(pr.data));
}
BENCHMARK(BM_OneDiagP2)->Arg(2)->Arg(4)->Arg(8);

void BM_Diagnose(benchmark::State& state) {
  auto eng = stream_engine(3, 0);
  const auto data = simulate({reference_gamma(), reference_psi(), false}, 3, eng);
  for (auto _ : state) benchmark::DoNotOptimize(diagnose(data));
}
BENCHMARK(BM_Diagnose);

void BM_NonuniquenessProbability(benchmark::State& state) {
  const auto workers = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(nonuniqueness_probability(reference_gamma(), reference_psi(), 1000, 42, workers));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_NonuniquenessProbability)->Arg(1)->Arg(4)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
