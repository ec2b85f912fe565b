#include <benchmark/benchmark.h>

#include <random>

#include "rsmaplace/scenario.hpp"
#include "rsmaplace/solver.hpp"
#include "rsmaplace/surrogates.hpp"

using namespace rsmaplace;

namespace {

const Scenario& default_scenario() {
  static const Scenario sc = load_scenario(std::filesystem::path(RSMAPLACE_SCENARIO_DIR) / "default.json");
  return sc;
}

void BM_IsLos(benchmark::State& state) {
  const auto& sc = default_scenario();
  const Environment env(sc.buildings, sc.users);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> xy(0.0, 800.0), z(0.0, 500.0);
  std::vector<Point3> pts(1024);
  for (auto& p : pts) p = {xy(rng), xy(rng), z(rng)};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(env.is_los(i % sc.users.size(), pts[i % pts.size()]));
    ++i;
  }
}
BENCHMARK(BM_IsLos);

void BM_Raycast(benchmark::State& state) {
  const auto& sc = default_scenario();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> xy(0.0, 800.0), z(0.0, 500.0);
  std::vector<Point3> pts(1024);
  for (auto& p : pts) p = {xy(rng), xy(rng), z(rng)};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(raycast_blocked(sc.users[i % sc.users.size()], pts[i % pts.size()], sc.buildings));
    ++i;
  }
}
BENCHMARK(BM_Raycast);

void BM_ComputeRates(benchmark::State& state) {
  const auto& sc = default_scenario();
  const auto pr = sc.problem();
  const auto s = initialize(sc, 1);
  const auto links = evaluate_links(pr.env, s.positions, pr.propagation);
  for (auto _ : state) benchmark::DoNotOptimize(compute_rates(s, links.gains, pr.propagation.noisePower));
}
BENCHMARK(BM_ComputeRates);

void BM_Surrogates(benchmark::State& state) {
  const auto& sc = default_scenario();
  const auto pr = sc.problem();
  const auto s = initialize(sc, 1);
  const Eigen::MatrixXd lambda = Eigen::MatrixXd::Constant(s.user_count(), s.uav_count(), 0.05);
  for (auto _ : state) {
    const auto exp = build_expansion(s, pr.env, pr.propagation, lambda);
    benchmark::DoNotOptimize(position_surrogate(exp));
    benchmark::DoNotOptimize(power_assoc_surrogate(exp));
  }
}
BENCHMARK(BM_Surrogates);

void BM_PositionStep(benchmark::State& state) {
  const auto& sc = default_scenario();
  const auto pr = sc.problem();
  const auto s = initialize(sc, 1);
  const Eigen::MatrixXd lambda = Eigen::MatrixXd::Constant(s.user_count(), s.uav_count(), 0.05);
  const auto exp = build_expansion(s, pr.env, pr.propagation, lambda);
  const auto sur = position_surrogate(exp);
  for (auto _ : state) benchmark::DoNotOptimize(solve_position(exp, sur, pr, sc.solver, sc.solver.zeta0));
}
BENCHMARK(BM_PositionStep)->Unit(benchmark::kMillisecond);

void BM_PowerAssocStep(benchmark::State& state) {
  const auto& sc = default_scenario();
  const auto pr = sc.problem();
  const auto s = initialize(sc, 1);
  const Eigen::MatrixXd lambda = Eigen::MatrixXd::Constant(s.user_count(), s.uav_count(), 0.05);
  const auto exp = build_expansion(s, pr.env, pr.propagation, lambda);
  const auto sur = power_assoc_surrogate(exp);
  for (auto _ : state) benchmark::DoNotOptimize(solve_power_assoc(exp, sur, pr, sc.solver));
}
BENCHMARK(BM_PowerAssocStep)->Unit(benchmark::kMillisecond);

void BM_RunBcd(benchmark::State& state) {
  const auto& sc = default_scenario();
  const auto pr = sc.problem();
  const auto init = initialize(sc, 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_bcd(pr, init, sc.solver));
}
BENCHMARK(BM_RunBcd)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
