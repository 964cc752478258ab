#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <nlohmann/json.hpp>

#include "riis/error.hpp"
#include "riis/oracle.hpp"
#include "riis/prior_set.hpp"

#include "test_support.hpp"

using namespace riis;

namespace {

// P(low <= delta* <= high) by Gauss-Legendre over (tau_mu, k) of the
// conditional normal probability.
double coverage_by_quadrature(const Hyperparameters& t, double low, double high) {
  const ModelConstants c;
  const auto rule = gauss_legendre(96);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double tau = c.tau_l + (t.tau0 - c.tau_l) * 0.5 * (rule.nodes[i] + 1.0);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double k = c.k_l + (c.k_u - c.k_l) * 0.5 * (rule.nodes[j] + 1.0);
      const double s = tau * std::sqrt(1.0 + k * k);
      const double p = 0.5 * (std::erfc(-(high - t.mu0) / (s * std::sqrt(2.0))) -
                              std::erfc(-(low - t.mu0) / (s * std::sqrt(2.0))));
      acc += 0.25 * rule.weights[i] * rule.weights[j] * p;
    }
  }
  return acc;
}

ElicitationSpec coarse_spec(double low, double high) {
  ElicitationSpec spec;
  spec.low = low;
  spec.high = high;
  spec.mu0_steps = 101;  // spacing 2
  spec.tau0_steps = 91;  // spacing 0.5
  spec.mc_samples_per_cell = 4000;
  spec.seed = 42;
  return spec;
}

}  // namespace

TEST_CASE("coverage extremes") {
  ElicitationSpec spec;
  spec.mc_samples_per_cell = 5000;
  spec.low = -1e12;
  spec.high = 1e12;
  CHECK(coverage_proportion({30.0, 6.0}, spec, {}) == 1.0);
  spec.low = 0.0;
  spec.high = 1e-9;
  CHECK(coverage_proportion({30.0, 6.0}, spec, {}) < 1e-3);
}

TEST_CASE("coverage agrees with quadrature and is seed stable") {
  ElicitationSpec spec;
  spec.mc_samples_per_cell = 100000;
  const Hyperparameters t{30.0, 6.0};
  const double exact = coverage_by_quadrature(t, spec.low, spec.high);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const double p = coverage_proportion(t, spec, {}, seed);
    CHECK(std::abs(p - exact) < 0.005);
  }
}

TEST_CASE("coverage is monotone in the range") {
  ElicitationSpec spec;
  spec.mc_samples_per_cell = 5000;
  double prev = -1.0;
  for (double half = 5.0; half < 80.0; half += 5.0) {
    spec.low = 30.0 - half;
    spec.high = 30.0 + half;
    const double p = coverage_proportion({20.0, 9.0}, spec, {});
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("membership") {
  const auto m = testing::reference_set();
  CHECK(m.contains({-8.0, 5.0}));
  CHECK_FALSE(m.contains({69.0, 5.0}));
  CHECK_FALSE(m.contains({20.0, 4.9}));
  CHECK_FALSE(m.contains({-8.0, 7.0}));  // above q(-8) + 0.9 = 6.14
  CHECK(m.contains({30.0, 15.0}));

  PriorSet flat = PriorSet::box(0.0, 10.0, 5.0, 20.0);
  flat.gamma = 10.0;
  flat.margin = 0.5;
  CHECK(flat.contains({3.0, 10.5}));
  CHECK_FALSE(flat.contains({3.0, std::nextafter(10.5, 11.0)}));

  PriorSet above = flat;
  above.side = BoundarySide::kAbove;
  CHECK(above.contains({3.0, 9.5}));
  CHECK_FALSE(above.contains({3.0, 9.4}));
  CHECK(PriorSet::point({2.0, 6.0}).contains({2.0, 6.0}));
}

TEST_CASE("projection and feasible sampling stay inside") {
  const auto m = testing::reference_set();
  for (const Hyperparameters t : {Hyperparameters{-50.0, 30.0}, Hyperparameters{100.0, 1.0}, Hyperparameters{30.0, 30.0},
                                  Hyperparameters{-8.0, 9.0}, Hyperparameters{10.0, 10.0}}) {
    const auto p = project(m, t);
    CHECK(m.contains(p));
  }
  CHECK(project(m, {10.0, 10.0}) == Hyperparameters{10.0, 10.0});
  Rng rng(3);
  for (int i = 0; i < 200; ++i) CHECK(m.contains(sample_feasible(m, rng)));
}

TEST_CASE("validation") {
  const ModelConstants c;
  CHECK_NOTHROW(testing::reference_set().validate(c));
  auto empty = testing::reference_set();
  empty.gamma = -100.0;
  empty.margin = 0.0;
  CHECK_THROWS_AS(empty.validate(c), InputError);
  auto low = testing::reference_set();
  low.tau0_lo = 0.5;
  CHECK_THROWS_AS(low.validate(c), InputError);
  ElicitationSpec spec;
  spec.low = 5.0;
  spec.high = 1.0;
  CHECK_THROWS_AS(spec.validate(c), InputError);
}

TEST_CASE("JSON round trip") {
  const auto m = testing::reference_set();
  const nlohmann::json j = m;
  const auto back = j.get<PriorSet>();
  CHECK(back.mu0_lo == m.mu0_lo);
  CHECK(back.alpha == m.alpha);
  CHECK(back.margin == m.margin);
  CHECK(back.side == m.side);
  const nlohmann::json js = coarse_spec(30, 100);
  const auto spec = js.get<ElicitationSpec>();
  CHECK(spec.low == 30.0);
  CHECK(spec.mu0_steps == 101);
}

TEST_CASE("building the low-conflict set") {
  const auto build = build_prior_set(coarse_spec(-20.0, 80.0), {});
  const auto& ps = build.set;
  INFO("box mu0 [" << ps.mu0_lo << ", " << ps.mu0_hi << "] tau0 [" << ps.tau0_lo << ", " << ps.tau0_hi << "] q = ("
                   << ps.alpha << ", " << ps.beta << ", " << ps.gamma << ")");
  CHECK(ps.side == BoundarySide::kBelow);
  CHECK(std::abs(ps.mu0_lo - (-8.0)) <= 4.0);
  CHECK(std::abs(ps.mu0_hi - 68.0) <= 4.0);
  CHECK(ps.tau0_lo == 5.0);
  CHECK(std::abs(ps.alpha / -0.01 - 1.0) <= 0.3);
  CHECK(std::abs(ps.beta / 0.46 - 1.0) <= 0.3);
  CHECK(std::abs(ps.gamma / 9.56 - 1.0) <= 0.3);
  CHECK(build.excluded_fraction < 0.05);
  CHECK(build.grid.size() == 101u * 91u);
  // every complying cell is a member, apart from the reported exclusions
  std::size_t outside = 0;
  for (const auto& g : build.grid)
    if (g.coverage >= 0.9 && !ps.contains({g.mu0, g.tau0})) ++outside;
  CHECK(static_cast<double>(outside) / build.complying_cells == doctest::Approx(build.excluded_fraction));
}

TEST_CASE("a shifted range moves the set toward larger mu0") {
  const auto build = build_prior_set(coarse_spec(30.0, 100.0), {});
  CHECK(build.set.mu0_lo > 30.0);
  CHECK(build.set.mu0_hi <= 100.0);
}

TEST_CASE("degenerate discriminators") {
  auto all = coarse_spec(-1e9, 1e9);
  all.mu0_steps = 11;
  all.tau0_steps = 7;
  all.mc_samples_per_cell = 200;
  const auto b = build_prior_set(all, {});
  CHECK(b.set.mu0_lo == all.mu0_lo);
  CHECK(b.set.mu0_hi == all.mu0_hi);
  CHECK(b.set.tau0_lo == all.tau0_lo);
  CHECK(b.set.tau0_hi == all.tau0_hi);
  CHECK(b.excluded_fraction == 0.0);

  auto none = all;
  none.low = 1000.0;
  none.high = 1001.0;
  CHECK_THROWS_AS(build_prior_set(none, {}), InputError);
}

TEST_CASE("grid CSV") {
  CHECK(format_grid_csv({{1.0, 5.0, 0.5}}) == "mu0,tau0,coverage\n1,5,0.5\n");
}
