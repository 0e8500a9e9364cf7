#include <benchmark/benchmark.h>

#include <random>

#include "dphase/flux.hpp"
#include "dphase/galerkin.hpp"

using namespace dphase;

namespace {

exponent::ExponentData unordered() {
  exponent::ExponentData d;
  d.horizon = 0.05;
  d.p = Field::affine(1.8, {0.4, 0.0});
  d.q = Field::affine(2.2, {-0.4, 0.0});
  d.a = Field::constant(0.4);
  d.b = Field::constant(0.4);
  d.alpha = 0.8;
  return d;
}

Eigen::VectorXd coefficients(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd c(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = u(rng) / (1.0 + j);
  return c;
}

void BM_FluxVector(benchmark::State& state) {
  const exponent::PointCoefficients c{1.9, 2.1, 0.5, 0.5};
  flux::GradVec xi(2);
  xi << 0.7, -1.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(flux::flux_vector(c, xi, 1e-2));
    xi(0) += 1e-12;
  }
}
BENCHMARK(BM_FluxVector);

void BM_RhsAssembly(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  auto basis = std::make_shared<const galerkin::EigenBasis>(galerkin::build_basis(2, m));
  const galerkin::GalerkinSystem sys(basis, unordered(), galerkin::zero_source(), 1e-2, 0);
  const auto c = coefficients(basis->size());
  for (auto _ : state) benchmark::DoNotOptimize(sys.rhs(c, 0.0));
}
BENCHMARK(BM_RhsAssembly)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMicrosecond);

void BM_ImplicitStep(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  auto basis = std::make_shared<const galerkin::EigenBasis>(galerkin::build_basis(2, m));
  const galerkin::GalerkinSystem sys(basis, unordered(), galerkin::zero_source(), 1e-2, 0);
  galerkin::SolverConfig cfg;
  cfg.m_per_dim = m;
  const galerkin::SpectralState s{0.0, coefficients(basis->size())};
  for (auto _ : state) benchmark::DoNotOptimize(sys.step_implicit(s, 1e-3, cfg));
}
BENCHMARK(BM_ImplicitStep)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
