#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "riis/error.hpp"
#include "riis/optimize.hpp"
#include "test_support.hpp"

using namespace riis;

TEST_CASE("annealing finds an interior quadratic minimum") {
  const auto box = PriorSet::box(-10.0, 10.0, 2.0, 12.0);
  const Objective fn = [](const Hyperparameters& t) {
    return (t.mu0 - 3.0) * (t.mu0 - 3.0) + 2.0 * (t.tau0 - 7.0) * (t.tau0 - 7.0);
  };
  AnnealingConfig cfg;
  cfg.seed = 5;
  const auto r = anneal_minimize(box, {-9.0, 11.0}, fn, cfg);
  CHECK(std::abs(r.argmin.mu0 - 3.0) < 1e-2);
  CHECK(std::abs(r.argmin.tau0 - 7.0) < 1e-2);
  CHECK(r.value == doctest::Approx(fn(r.argmin)));
}

TEST_CASE("annealing finds a minimum on the curved boundary") {
  const auto m = testing::reference_set();
  // decreasing in tau0 and in mu0 distance from 30: optimum lies on q + margin
  const Objective fn = [](const Hyperparameters& t) { return -t.tau0 + 0.001 * (t.mu0 - 30.0) * (t.mu0 - 30.0); };
  const auto r = anneal_minimize(m, {0.0, 6.0}, fn, {});
  CHECK(m.contains(r.argmin));
  CHECK(std::abs(m.r(r.argmin) - m.margin) < 0.05);
  const auto g = grid_minimize(m, 201, fn);
  CHECK(r.value <= g.best.value + 1e-3);
}

TEST_CASE("single-point set returns the point") {
  const auto p = PriorSet::point({4.0, 9.0});
  std::size_t calls = 0;
  const Objective fn = [&](const Hyperparameters& t) {
    ++calls;
    return t.mu0 + t.tau0;
  };
  const auto r = anneal_minimize(p, {4.0, 9.0}, fn, {});
  CHECK(r.argmin == Hyperparameters{4.0, 9.0});
  CHECK(r.value == 13.0);
  const auto g = grid_minimize(p, 7, fn);
  CHECK(g.best.argmin == Hyperparameters{4.0, 9.0});
  CHECK(calls > 0);
}

TEST_CASE("every evaluated point is feasible") {
  const auto m = testing::reference_set();
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    bool all_inside = true;
    const Objective fn = [&](const Hyperparameters& t) {
      if (!m.contains(t)) all_inside = false;
      return std::sin(t.mu0 / 7.0) * std::cos(t.tau0);
    };
    AnnealingConfig cfg;
    cfg.seed = seed;
    cfg.steps_per_temperature = 10;
    const auto r = anneal_minimize(m, {20.0, 10.0}, fn, cfg, true);
    CHECK(all_inside);
    CHECK(m.contains(r.argmin));
    for (const auto& row : r.trace) CHECK(m.contains(row.t));
  }
}

TEST_CASE("trace and determinism") {
  const auto m = testing::reference_set();
  const Objective fn = [](const Hyperparameters& t) { return std::hypot(t.mu0 - 40.0, t.tau0 - 8.0); };
  AnnealingConfig cfg;
  cfg.seed = 11;
  const auto a = anneal_minimize(m, {0.0, 6.0}, fn, cfg, true);
  const auto b = anneal_minimize(m, {0.0, 6.0}, fn, cfg, true);
  CHECK(a.argmin == b.argmin);
  CHECK(format_trace_csv(a.trace) == format_trace_csv(b.trace));
  REQUIRE(!a.trace.empty());
  CHECK(format_trace_csv(a.trace).rfind("step,temperature,mu0,tau0,objective,accepted\n", 0) == 0);
  double best = fn({0.0, 6.0});
  for (const auto& row : a.trace) best = std::min(best, row.objective);
  CHECK(a.value <= best + 1e-12);
  for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i].temperature <= a.trace[i - 1].temperature);
}

TEST_CASE("empty overlap counts as +infinity") {
  const auto box = PriorSet::box(0.0, 10.0, 5.0, 10.0);
  const Objective fn = [](const Hyperparameters& t) {
    if (t.tau0 > 8.0) throw EmptyOverlapError("no overlap");
    return -t.tau0;
  };
  const auto r = anneal_minimize(box, {5.0, 6.0}, fn, {});
  CHECK(r.argmin.tau0 <= 8.0);
  CHECK(r.argmin.tau0 > 7.9);
}

TEST_CASE("grid scan is exhaustive over feasible points") {
  const auto m = testing::reference_set();
  std::size_t calls = 0;
  const Objective fn = [&](const Hyperparameters& t) {
    ++calls;
    return t.mu0;
  };
  const auto g = grid_minimize(m, 25, fn);
  std::size_t feasible = 0;
  for (std::size_t i = 0; i < 25; ++i)
    for (std::size_t j = 0; j < 25; ++j) {
      const Hyperparameters t{m.mu0_lo + m.mu0_width() * i / 24.0, m.tau0_lo + m.tau0_width() * j / 24.0};
      if (m.contains(t)) ++feasible;
    }
  CHECK(g.points.size() == feasible);
  CHECK(calls == feasible);
  CHECK(g.best.argmin.mu0 == m.mu0_lo);
  const auto center = grid_minimize(PriorSet::box(0.0, 2.0, 5.0, 7.0), 1, fn);
  CHECK(center.best.argmin == Hyperparameters{1.0, 6.0});
}

TEST_CASE("chain-based objective matches reweighting and the oracle") {
  const auto d = testing::synthetic10();
  const ModelConstants c;
  MCMCConfig mc;
  mc.max_draws = 40000;
  mc.seed = 3;
  const auto chain = run_chain({20.0, 14.0}, d, c, mc);
  const auto mu = chain.mu_series();
  const Hyperparameters t{10.0, 9.0};
  const double est = objective(t, chain, mu, d, c);
  const double exact = posterior_mean_mu(t, d, c, {}).mean;
  CHECK(std::abs(est - exact) < 1.0);
  CHECK(objective(chain.hyperparameters_used, chain, mu, d, c) ==
        doctest::Approx(testing::mean_of(mu)).epsilon(1e-12));
}

TEST_CASE("grid runners agree and upper bounds exceed lower bounds") {
  const auto d = testing::synthetic10();
  const ModelConstants c;
  const auto m = testing::reference_set();
  GridRunnerOptions oracle;
  const auto lo = grid_minimize(m, 5, d, c, oracle);
  oracle.direction = Direction::kUpper;
  const auto hi = grid_minimize(m, 5, d, c, oracle);
  CHECK(-hi.best.value > lo.best.value);

  GridRunnerOptions fresh;
  fresh.runner = GridRunner::kFreshMcmc;
  fresh.mcmc.max_draws = 20000;
  const auto fr = grid_minimize(m, 5, d, c, fresh);
  REQUIRE(fr.points.size() == lo.points.size());
  for (std::size_t i = 0; i < fr.points.size(); ++i) CHECK(std::abs(fr.points[i].value - lo.points[i].value) < 1.0);

  MCMCConfig mc;
  mc.max_draws = 40000;
  const auto chain = run_chain({30.0, 14.0}, d, c, mc);
  GridRunnerOptions reuse;
  reuse.runner = GridRunner::kReuseWeights;
  reuse.chain = &chain;
  reuse.emit_ess = true;
  const auto rw = grid_minimize(m, 5, d, c, reuse);
  REQUIRE(rw.points.size() == lo.points.size());
  for (const auto& p : rw.points) {
    REQUIRE(p.ess.has_value());
    CHECK(*p.ess <= *p.ess_is + 1e-9);
  }
}
