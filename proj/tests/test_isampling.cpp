#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "riis/error.hpp"
#include "riis/isampling.hpp"
#include "test_support.hpp"

using namespace riis;

namespace {

WeightedSample from_log_weights(std::vector<double> lw) {
  WeightedSample ws;
  ws.log_weights = std::move(lw);
  return ws;
}

const Chain& shared_chain() {
  static const Chain chain = [] {
    MCMCConfig cfg;
    cfg.seed = 17;
    cfg.max_draws = 20000;
    return run_chain({5.0, 8.0}, testing::synthetic10(), {}, cfg);
  }();
  return chain;
}

std::vector<double> mu_of(const Chain& ch) { return ch.mu_series(); }

}  // namespace

TEST_CASE("weights at the proposal itself are constant") {
  const auto& ch = shared_chain();
  const auto ws = importance_log_weights(ch, ch.hyperparameters_used, testing::synthetic10(), {});
  CHECK(ws.uncovered_fraction == 0.0);
  CHECK(std::all_of(ws.log_weights.begin(), ws.log_weights.end(), [](double v) { return v == 0.0; }));
  CHECK_FALSE(ws.warning.has_value());
}

TEST_CASE("draws outside the target support get zero weight") {
  const auto& ch = shared_chain();
  const Hyperparameters target{5.0, 3.0};
  const auto ws = importance_log_weights(ch, target, testing::synthetic10(), {});
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < ch.size(); ++i) {
    if (ch.draws[i].tau_mu >= target.tau0) {
      CHECK(ws.log_weights[i] == kLogZero);
      ++excluded;
    } else {
      CHECK(std::isfinite(ws.log_weights[i]));
    }
  }
  CHECK(excluded > 0);
  CHECK(ws.uncovered_fraction == doctest::Approx(static_cast<double>(excluded) / ch.size()));
}

TEST_CASE("simplified and full-ratio weights agree") {
  const auto d = testing::synthetic10();
  MCMCConfig cfg;
  cfg.seed = 3;
  cfg.batch_size = 1000;
  cfg.max_draws = 1000;
  const auto ch = run_chain({5.0, 8.0}, d, {}, cfg);
  for (const Hyperparameters target : {Hyperparameters{-3.0, 6.0}, Hyperparameters{20.0, 12.0}}) {
    const auto ws = importance_log_weights(ch, target, d, {});
    const auto full = importance_log_weights_full(ch, target, d, {});
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (ws.log_weights[i] == kLogZero) {
        CHECK(full[i] == kLogZero);
      } else {
        CHECK(std::abs(ws.log_weights[i] - full[i]) < 1e-12);
      }
    }
  }
}

TEST_CASE("support deficiency and empty overlap") {
  const auto& ch = shared_chain();
  const auto wide = importance_log_weights(ch, {5.0, 20.0}, testing::synthetic10(), {});
  CHECK(wide.warning.has_value());
  CHECK_THROWS_AS(importance_log_weights(ch, {5.0, 1.0 + 1e-12}, testing::synthetic10(), {}), EmptyOverlapError);
  CHECK_THROWS_AS(ess_is(from_log_weights({kLogZero, kLogZero})), EmptyOverlapError);
  CHECK_THROWS_AS(importance_log_weights(Chain{}, {5.0, 8.0}, testing::synthetic10(), {}), InputError);
}

TEST_CASE("self-normalized estimate by hand") {
  const std::vector<double> f{3.0, 0.0, 0.0};
  CHECK(self_normalized_estimate(from_log_weights({std::log(2.0), 0.0, 0.0}), f) == doctest::Approx(1.5));
  CHECK(self_normalized_estimate(from_log_weights({0.0, 0.0, 0.0}), f) == doctest::Approx(1.0));
  CHECK(self_normalized_estimate(from_log_weights({std::log(2.0) + 700.0, 700.0, 700.0}), f) == doctest::Approx(1.5));
  CHECK(self_normalized_estimate(from_log_weights({kLogZero, 0.0, 0.0}), f) == 0.0);
  CHECK_THROWS_AS(self_normalized_estimate(from_log_weights({0.0, 0.0}), f), InputError);
}

TEST_CASE("ESS_IS by hand") {
  CHECK(ess_is(from_log_weights(std::vector<double>(250, -3.0))) == doctest::Approx(250.0).epsilon(1e-14));
  CHECK(ess_is(from_log_weights({kLogZero, 1.0, kLogZero})) == 1.0);
  CHECK(ess_is(from_log_weights({std::log(2.0), 0.0, 0.0})) == doctest::Approx(16.0 / 6.0));
}

TEST_CASE("g-tilde series") {
  const std::vector<double> f{1.0, 2.0, 6.0};
  const auto g = g_tilde_series(from_log_weights({0.0, 0.0, 0.0}), f);
  CHECK(g[0] == doctest::Approx(-2.0));
  CHECK(g[2] == doctest::Approx(3.0));
  const auto zero = g_tilde_series(from_log_weights({0.3, -1.0, 2.0}), std::vector<double>{4.0, 4.0, 4.0});
  for (double v : zero) CHECK(std::abs(v) < 1e-15);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> lw(200), fv(200);
    for (std::size_t i = 0; i < lw.size(); ++i) {
      lw[i] = 2.0 * z(rng);
      fv[i] = 10.0 * z(rng);
    }
    const auto gs = g_tilde_series(from_log_weights(lw), fv);
    double sum = 0.0, scale = 0.0;
    for (double v : gs) {
      sum += v;
      scale += std::abs(v);
    }
    CHECK(std::abs(sum) < 1e-12 * scale);
  }
}

TEST_CASE("combined ESS on independent draws") {
  auto iid = shared_chain();
  std::mt19937_64 rng(5);
  std::shuffle(iid.draws.begin(), iid.draws.end(), rng);
  const auto ws = importance_log_weights(iid, iid.hyperparameters_used, testing::synthetic10(), {});
  const auto ce = combined_ess(ws, mu_of(iid));
  const double n = static_cast<double>(iid.size());
  CHECK(ce.ess_is == n);
  CHECK(ce.ess > 0.8 * n);
  CHECK(ce.ess <= n);
}

TEST_CASE("combined ESS on a correlated chain at the proposal") {
  const auto& ch = shared_chain();
  const auto f = mu_of(ch);
  const auto ws = importance_log_weights(ch, ch.hyperparameters_used, testing::synthetic10(), {});
  const auto ce = combined_ess(ws, f);
  CHECK(ce.ess_is == static_cast<double>(ch.size()));
  CHECK(ce.ess == doctest::Approx(ess_mcmc(f)).epsilon(1e-6));
  CHECK(ce.ess < 0.9 * static_cast<double>(ch.size()));
}

TEST_CASE("combined ESS is bounded by ESS_IS and invariant to weight scale") {
  const auto& ch = shared_chain();
  const auto f = mu_of(ch);
  const auto d = testing::synthetic10();
  for (const Hyperparameters t : {Hyperparameters{-8.0, 5.0}, Hyperparameters{10.0, 7.5}, Hyperparameters{30.0, 8.0}}) {
    auto ws = importance_log_weights(ch, t, d, {});
    const auto ce = combined_ess(ws, f);
    CHECK(ce.ess <= ce.ess_is);
    CHECK(ce.ess_is <= static_cast<double>(ch.size()));
    CHECK(ce.ess_mcmc_gtilde <= static_cast<double>(ch.size()));
    const double est = self_normalized_estimate(ws, f);
    for (auto& lw : ws.log_weights)
      if (lw != kLogZero) lw += 123.4;
    const auto shifted = combined_ess(ws, f);
    CHECK(shifted.ess == doctest::Approx(ce.ess).epsilon(1e-10));
    CHECK(shifted.ess_is == doctest::Approx(ce.ess_is).epsilon(1e-10));
    CHECK(self_normalized_estimate(ws, f) == doctest::Approx(est).epsilon(1e-10));
  }
}

TEST_CASE("combined ESS is undefined for constant f") {
  const auto& ch = shared_chain();
  const auto ws = importance_log_weights(ch, {0.0, 6.0}, testing::synthetic10(), {});
  std::vector<double> f(ch.size(), 2.5);
  CHECK_THROWS_AS(combined_ess(ws, f), DegenerateSeriesError);
}

TEST_CASE("weights CSV dump") {
  const auto ws = from_log_weights({0.0, kLogZero});
  const auto csv = format_weights_csv(ws, std::vector<double>{1.0, 2.0});
  CHECK(csv == "draw_index,log_weight,f_value,g_tilde\n0,0,1,0\n1,-inf,2,0\n");
}
