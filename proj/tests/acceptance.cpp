// Acceptance checks, one PASS/FAIL line per criterion. With a criterion
// number as argument only that one runs. Exit status is the failure count.

#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "rsmaplace/convex.hpp"
#include "rsmaplace/harness.hpp"
#include "rsmaplace/scenario.hpp"
#include "rsmaplace/solver.hpp"
#include "rsmaplace/surrogates.hpp"
#include "support.hpp"

using namespace rsmaplace;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

const char* kScenarioFiles[] = {"default.json", "users-9.json", "users-18.json"};

Outcome los_soundness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::size_t pairs = 0, unsound = 0, far = 0, farMismatch = 0, boundary = 0;
  for (const char* file : kScenarioFiles) {
    const auto sc = load_scenario(testsupport::scenario_dir() / file);
    const Environment env(sc.buildings, sc.users);
    std::uniform_int_distribution<std::size_t> pick(0, sc.users.size() - 1);
    std::uniform_real_distribution<double> ux(sc.area.xMin, sc.area.xMax);
    std::uniform_real_distribution<double> uy(sc.area.yMin, sc.area.yMax);
    std::uniform_real_distribution<double> uz(0.0, sc.solver.zMax);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    auto near_boundary = [&](std::size_t k, const Point3& p) {
      for (const auto& planes : env.blockage()[k].planesByBuilding)
        for (const auto& pl : planes)
          if (std::abs(directed_distance(pl, p)) < kBoundaryTolerance) return true;
      return false;
    };

    for (int i = 0; i < 40000; ++i) {
      const std::size_t k = pick(rng);
      const Point3 p{ux(rng), uy(rng), uz(rng)};
      ++pairs;
      if (raycast_blocked(sc.users[k], p, sc.buildings) && env.is_los(k, p)) ++unsound;
    }
    // Far field: beyond the farthest footprint vertex of every building.
    for (int i = 0; i < 20000; ++i) {
      const std::size_t k = pick(rng);
      const Point3& u = sc.users[k];
      double reach = 0.0;
      for (const auto& b : sc.buildings)
        for (const auto& v : b.footprint()) reach = std::max(reach, std::hypot(v.x - u.x, v.y - u.y));
      const double r = reach * (1.0 + 1e-6) + 1500.0 * u01(rng);
      const double a = angle(rng);
      const Point3 p{u.x + r * std::cos(a), u.y + r * std::sin(a), 250.0 * u01(rng) * u01(rng)};
      ++pairs;
      const bool blocked = raycast_blocked(u, p, sc.buildings);
      const bool los = env.is_los(k, p);
      if (blocked && los) ++unsound;
      if (near_boundary(k, p)) {
        ++boundary;
        continue;
      }
      ++far;
      if (los == blocked) ++farMismatch;
    }
  }
  const double secs = seconds_since(t0);
  return {pairs >= 100000 && unsound == 0 && farMismatch == 0 && far > 0 && secs < 10.0,
          fmt("%zu pairs, %zu unsound, %zu/%zu far-field mismatches (%zu boundary skipped), %.2f s", pairs, unsound,
              farMismatch, far, boundary, secs)};
}

Outcome rate_identities() {
  const auto sc = load_scenario(testsupport::scenario_dir() / "default.json");
  const auto pr = sc.problem();
  const double noise = pr.propagation.noisePower;
  std::mt19937_64 rng(202);
  double worstDecomp = 0.0, worstOracle = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t M = 3;
    const std::size_t K = sc.users.size();
    auto s = testsupport::random_state(rng, K, M, pr.pMax, i % 4 != 0);
    // Half the states use scenario geometry, half synthetic gains.
    const Eigen::MatrixXd g = i % 2 == 0 ? evaluate_links(pr.env, s.positions, pr.propagation).gains
                                         : testsupport::random_gains(rng, K, M);
    const auto rates = compute_rates(s, g, noise);
    const auto served = served_sets_and_order(s.assoc, g);
    const auto d = rate_decomposition(s, g, served, noise);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t k : served.order[m]) {
        const double direct = std::log2(1.0 + sinr_common(d.weakest[m], m, s, g, served, noise));
        worstDecomp = std::max(worstDecomp, std::abs(d.common_rate(k, m, 1.0) - direct));
        worstDecomp = std::max(worstDecomp, std::abs(d.private_rate(k, m) - rates.perUserPrivate(k)));
      }
    }
    const auto o = testsupport::oracle_rates(s, g, noise);
    worstOracle = std::max(worstOracle, (o.total - rates.perUserTotal).cwiseAbs().maxCoeff());
    worstOracle = std::max(worstOracle, (o.common - rates.perUserCommon).cwiseAbs().maxCoeff());
  }
  return {worstDecomp <= 1e-9 && worstOracle <= 1e-9,
          fmt("1000 states, decomposition error %.3g, oracle error %.3g", worstDecomp, worstOracle)};
}

Outcome surrogate_checks() {
  const auto sc = load_scenario(testsupport::scenario_dir() / "default.json");
  const auto pr = sc.problem();
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> jit(-60.0, 60.0);
  std::exponential_distribution<double> ex(1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double anchor = 0.0, gradErr = 0.0;
  std::size_t gradChecked = 0, minorantViolations = 0, samples = 0;

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (bool common : {true, false}) {
      NetworkState s = initialize(sc, seed);
      for (auto& x : s.positions) {
        x.x += jit(rng);
        x.y += jit(rng);
        x.z = std::max(120.0, x.z + jit(rng));
      }
      if (!common) s.power.common.setZero();
      const Eigen::MatrixXd lambda = Eigen::MatrixXd::Constant(12, 3, sc.solver.lambda0);
      const auto exp = build_expansion(s, pr.env, pr.propagation, lambda, {false, common});
      const auto truth = evaluate_state(s, pr, common).perUserTotal;
      anchor = std::max(anchor, (exp.rates - truth).cwiseAbs().maxCoeff());

      const auto pos = position_surrogate(exp);
      anchor = std::max(anchor, (pos.values(s.positions) - exp.rates).cwiseAbs().maxCoeff());
      const auto pa = power_assoc_surrogate(exp);
      anchor = std::max(anchor, (pa.values(s.power, s.assoc) - exp.rates).cwiseAbs().maxCoeff());
      const auto pen = penalty_terms(lambda, s.assoc.values, s.assoc.values);
      anchor = std::max(anchor, std::abs(pen.lower_bound(s.assoc.values) - pen.rho));

      for (std::size_t k = 0; k < exp.user_count(); ++k) {
        std::vector<double> vals;
        for (const auto& pc : pos.pieces[k]) vals.push_back(pc.value(s.positions));
        const auto it = std::min_element(vals.begin(), vals.end());
        double second = INFINITY;
        for (auto j = vals.begin(); j != vals.end(); ++j)
          if (j != it) second = std::min(second, *j);
        if (second - *it < 1e-6) continue;
        const auto grad = pos.pieces[k][it - vals.begin()].gradient(s.positions);
        double err = 0.0, ref = 0.0;
        for (std::size_t m = 0; m < exp.uav_count(); ++m) {
          const Point3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
          const double gm[3] = {grad[m].x, grad[m].y, grad[m].z};
          for (int a = 0; a < 3; ++a) {
            auto xp = s.positions, xm = s.positions;
            xp[m] += 1e-3 * axes[a];
            xm[m] -= 1e-3 * axes[a];
            const double fd = (frozen_rates(exp, xp, s.power)(k) - frozen_rates(exp, xm, s.power)(k)) / 2e-3;
            err += (gm[a] - fd) * (gm[a] - fd);
            ref += fd * fd;
          }
        }
        gradErr = std::max(gradErr, std::sqrt(err / std::max(ref, 1e-300)));
        ++gradChecked;
      }

      for (int i = 0; i < 100; ++i) {
        PowerAllocation p = PowerAllocation::zeros(12, 3);
        for (std::size_t m = 0; m < 3; ++m) {
          double c = common ? ex(rng) : 0.0, total = c;
          std::vector<double> w;
          for (std::size_t k : exp.served.order[m]) total += w.emplace_back(ex(rng));
          const double budget = pr.pMax * u01(rng);
          p.common(m) = budget * c / total;
          for (std::size_t j = 0; j < w.size(); ++j) p.privatePower(exp.served.order[m][j], m) = budget * w[j] / total;
        }
        ++samples;
        const auto model = pa.values(p, s.assoc);
        const auto real = frozen_rates(exp, s.positions, p);
        if (((model - real).array() > 1e-9).any()) ++minorantViolations;
      }
    }
  }
  return {anchor <= 1e-9 && gradErr <= 1e-4 && gradChecked > 0 && samples >= 1000 && minorantViolations == 0,
          fmt("anchoring %.3g, worst gradient rel. error %.3g over %zu users, %zu/%zu minorant violations", anchor,
              gradErr, gradChecked, minorantViolations, samples)};
}

Outcome backend_checks() {
  double worstGap = 0.0;
  bool ok = true;

  ConvexSubproblem ball;
  ball.variableCount = 2;
  ball.objective.quadratics.push_back({1.0, {0, 1}, {0.0, 0.0}});
  ConcaveFunction unit;
  unit.constant = 1.0;
  unit.quadratics.push_back({1.0, {0, 1}, {0.0, 0.0}});
  ball.add_constraint(unit, "ball");
  ball.start = Eigen::Vector2d(0.5, 0.5);
  const auto r1 = backend_solve(ball, 1e-8);
  ok = ok && r1.x.norm() < 1e-4 && std::abs(r1.objective) < 1e-7;
  worstGap = std::max(worstGap, r1.certificate.dualityGap);

  ConvexSubproblem lg;
  lg.variableCount = 1;
  lg.objective.logs.push_back({1.0, 1.0, {{0, 1.0}}});
  lg.add_bounds(0, 0.0, 3.0, "box");
  lg.start = Eigen::VectorXd::Constant(1, 1.0);
  const auto r2 = backend_solve(lg, 1e-8);
  ok = ok && std::abs(r2.x(0) - 3.0) < 1e-6 && std::abs(r2.objective - 2.0) < 1e-7;
  worstGap = std::max(worstGap, r2.certificate.dualityGap);

  auto f1 = [](double x, double y) { return -(x - 1.0) * (x - 1.0) - y * y; };
  auto f2 = [](double x, double y) { return -(x + 0.5) * (x + 0.5) - 2.0 * (y - 1.0) * (y - 1.0) + 0.3; };
  ConvexSubproblem ep;
  ep.variableCount = 3;
  ep.objective.add_linear(2, 1.0);
  ConcaveFunction c1;
  c1.quadratics.push_back({1.0, {0, 1}, {1.0, 0.0}});
  c1.add_linear(2, -1.0);
  ConcaveFunction c2;
  c2.constant = 0.3;
  c2.quadratics.push_back({1.0, {0}, {-0.5}});
  c2.quadratics.push_back({2.0, {1}, {1.0}});
  c2.add_linear(2, -1.0);
  ep.add_constraint(c1, "piece");
  ep.add_constraint(c2, "piece");
  ep.add_bounds(0, -2.0, 2.0, "box");
  ep.add_bounds(1, -2.0, 2.0, "box");
  ep.start = Eigen::Vector3d(0.0, 0.0, -20.0);
  const auto r3 = backend_solve(ep, 1e-9);
  worstGap = std::max(worstGap, r3.certificate.dualityGap);

  const double best = testsupport::grid_max_2d([&](double x, double y) { return std::min(f1(x, y), f2(x, y)); }, -2.0, 2.0);
  const double gridErr = std::abs(r3.objective - best);
  return {ok && worstGap <= 1e-6 && gridErr <= 1e-4,
          fmt("worst certificate %.3g, epigraph vs grid %.3g", worstGap, gridErr)};
}

Outcome default_run() {
  const auto sc = load_scenario(testsupport::scenario_dir() / "default.json");
  const auto t0 = Clock::now();
  const auto r = run_scheme(sc, Scheme::Rsma, sc.seed);
  const double secs = seconds_since(t0);
  const std::size_t nlos = count_los_violations(r.finalState, sc.problem().env);
  const bool binary = r.finalState.assoc.is_binary();
  const double ratio = r.rates.minRate / r.initialMinRate;
  return {ratio >= 3.0 && binary && nlos == 0 && secs < 300.0 && sc.uavCount == 3 && sc.users.size() == 12 &&
              sc.solver.tMax == 15,
          fmt("min rate %.4f -> %.4f (x%.2f), binary C %s, %zu NLoS served links, %.1f s", r.initialMinRate,
              r.rates.minRate, ratio, binary ? "yes" : "no", nlos, secs)};
}

Outcome baseline_ordering() {
  const auto sc = load_scenario(testsupport::scenario_dir() / "default.json");
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const auto report = compare_baselines(sc, seeds, {});
  bool allOk = true;
  int nomaWins = 0;
  int wins[3] = {0, 0, 0};
  const Scheme others[3] = {Scheme::FixedPosition, Scheme::FixedPower, Scheme::NoGeometry};
  std::string table;
  for (auto seed : seeds) {
    const auto& rsma = report.cell(seed, Scheme::Rsma);
    const auto& noma = report.cell(seed, Scheme::Noma);
    allOk = allOk && rsma.ok && noma.ok;
    if (rsma.ok && noma.ok && rsma.minRate >= noma.minRate) ++nomaWins;
    table += fmt(" [seed %llu rsma %.3f noma %.3f", static_cast<unsigned long long>(seed), rsma.minRate,
                 noma.minRate);
    for (int i = 0; i < 3; ++i) {
      const auto& c = report.cell(seed, others[i]);
      allOk = allOk && c.ok;
      if (c.ok && rsma.minRate >= c.minRate) ++wins[i];
      table += fmt(" %s %.3f", std::string(to_string(others[i])).c_str(), c.minRate);
    }
    table += "]";
  }
  const bool pass = allOk && nomaWins == 5 && wins[0] >= 4 && wins[1] >= 4 && wins[2] >= 4;
  return {pass, fmt("RSMA >= NOMA on %d/5, >= fixed-position %d/5, fixed-power %d/5, no-geometry %d/5;", nomaWins,
                    wins[0], wins[1], wins[2]) +
                    table};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto base = std::filesystem::temp_directory_path() / "rsmaplace-acceptance";
  std::filesystem::remove_all(base);
  const auto path = testsupport::scenario_dir() / "default.json";
  run_experiment(path, Scheme::Rsma, 1, base / "a");
  run_experiment(path, Scheme::Rsma, 1, base / "a2");
  bool same = true;
  for (const char* f : {"trace.csv", "result.json"}) {
    const auto a = read_file(base / "a" / f);
    same = same && !a.empty() && a == read_file(base / "a2" / f);
  }
  std::filesystem::remove_all(base);
  return {same, same ? "trace.csv and result.json identical" : "outputs differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  const std::function<Outcome()> checks[] = {los_soundness,   rate_identities,   surrogate_checks, backend_checks,
                                             default_run,     baseline_ordering, determinism};
  int failed = 0;
  for (std::size_t i = 0; i < std::size(checks); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = checks[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
