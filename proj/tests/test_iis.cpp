#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "riis/error.hpp"
#include "riis/iis.hpp"
#include "riis/oracle.hpp"
#include "test_support.hpp"

using namespace riis;

namespace {

IISConfig small_config() {
  IISConfig cfg;
  cfg.ess_target = 1000;
  cfg.max_outer_iterations = 6;
  cfg.mcmc.batch_size = 5000;
  cfg.mcmc.max_draws = 60000;
  cfg.annealing.steps_per_temperature = 20;
  return cfg;
}

}  // namespace

TEST_CASE("single-point set: bound equals the posterior mean there") {
  const auto d = testing::synthetic10();
  const ModelConstants c;
  const Hyperparameters t{20.0, 10.0};
  const auto rep = iterate_lower_bound(PriorSet::point(t), t, d, c, small_config());
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(rep.t_star == t);
  const double exact = posterior_mean_mu(t, d, c, {}).mean;
  REQUIRE(!rep.rows.empty());
  CHECK(std::abs(rep.bound - exact) < 4.0 * rep.rows.back().std_error + 0.05);
  CHECK(rep.rows.front().ess_is == doctest::Approx(static_cast<double>(rep.rows.front().draws)));
}

TEST_CASE("constant function stops as degenerate") {
  const auto d = testing::synthetic10();
  const auto m = testing::reference_set();
  const auto rep = iterate_bound(m, default_start(m), d, {}, small_config(),
                                 [](const ParameterState&) { return 7.0; });
  CHECK(rep.stop_reason == StopReason::kDegenerate);
  CHECK_FALSE(rep.converged);
  CHECK(rep.bound == doctest::Approx(7.0));
  CHECK(rep.note.has_value());
}

TEST_CASE("infeasible start is rejected") {
  const auto m = testing::reference_set();
  CHECK_THROWS_AS(iterate_bound(m, {100.0, 5.0}, testing::synthetic10(), {}, small_config()), InputError);
  auto bad = small_config();
  bad.ess_target = 10;
  CHECK_THROWS_AS(iterate_bound(m, default_start(m), testing::synthetic10(), {}, bad), InputError);
}

TEST_CASE("runs are reproducible and bracket the grid optimum") {
  const auto d = testing::synthetic10();
  const ModelConstants c;
  const auto m = testing::reference_set();
  const auto cfg = small_config();
  const auto a = iterate_lower_bound(m, default_start(m), d, c, cfg);
  const auto b = iterate_lower_bound(m, default_start(m), d, c, cfg);
  CHECK(format_report_csv(a) == format_report_csv(b));
  CHECK(format_report_table(a) == format_report_table(b));
  CHECK(a.converged);
  CHECK(m.contains(a.t_star));
  for (const auto& r : a.rows) CHECK(r.seconds == 0.0);

  GridRunnerOptions opts;
  const auto grid = grid_minimize(m, 25, d, c, opts);
  const double tol = std::max(0.005 * std::abs(grid.best.value), 3.0 * a.rows.back().std_error);
  CHECK(std::abs(a.bound - grid.best.value) <= tol + 0.3);

  auto up = cfg;
  up.direction = Direction::kUpper;
  const auto u = iterate_bound(m, default_start(m), d, c, up);
  CHECK(u.bound > a.bound);
}

TEST_CASE("flat-prior reference matches the oracle") {
  const auto d = testing::synthetic10();
  const ModelConstants c;
  MCMCConfig mc;
  mc.max_draws = 60000;
  const auto s = flat_prior_reference(d, c, mc);
  const double exact = posterior_mean_mu({0.0, 1000.0}, d, c, {}).mean;
  CHECK(std::abs(s.mean - exact) < 4.0 * s.std_error);
  CHECK(s.draws == 60000u);
}

TEST_CASE("report formats") {
  IISReport rep;
  rep.t0 = {1.0, 6.0};
  IISRow row;
  row.iteration = 1;
  row.draws = 5000;
  row.t_star = {2.5, 7.0};
  row.ess = 1200.5;
  row.ess_mcmc = 3000.0;
  row.ess_is = 1500.0;
  row.estimate = 12.25;
  rep.rows.push_back(row);
  rep.bound = 12.25;
  rep.t_star = row.t_star;
  rep.iterations = 1;
  rep.converged = true;
  rep.stop_reason = StopReason::kConverged;
  CHECK(format_report_csv(rep) ==
        "iteration,draws,mu0_star,tau0_star,ess,ess_mcmc,ess_is,estimate,seconds\n1,5000,2.5,7,1200.5,3000,1500,12.25,0\n");
  CHECK(format_report_table(rep).find("converged after 1 iteration(s)") != std::string::npos);
}
