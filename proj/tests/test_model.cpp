#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "riis/error.hpp"
#include "riis/model.hpp"
#include "test_support.hpp"

using namespace riis;

TEST_CASE("log posterior matches term-by-term hand evaluation") {
  Dataset d{{{0.0, 1.0}, {0.0, 1.0}}, "two"};
  const ParameterState x{0.0, 2.0, 2.0};
  const Hyperparameters t{0.0, 5.0};
  // 2 log N(0; 0, 1 + 2^2 2^2) + log N(0; 0, 2^2) + log(1/4) + log(1/4)
  CHECK(log_unnormalized_posterior(x, t, d, {}) == doctest::Approx(-9.05576484646996).epsilon(1e-13));
}

TEST_CASE("out-of-support states map to log zero") {
  const auto d = testing::synthetic10();
  const Hyperparameters t{10.0, 6.0};
  CHECK(log_unnormalized_posterior({0.0, 6.1, 2.0}, t, d, {}) == kLogZero);
  CHECK(log_unnormalized_posterior({0.0, 0.99, 2.0}, t, d, {}) == kLogZero);
  CHECK(log_unnormalized_posterior({0.0, 2.0, 5.0}, t, d, {}) == kLogZero);
  CHECK(log_unnormalized_posterior({1e6, 2.0, 0.5}, t, d, {}) == kLogZero);
}

TEST_CASE("non-finite state is an input error") {
  const auto d = testing::synthetic10();
  CHECK_THROWS_AS(log_unnormalized_posterior({NAN, 2.0, 2.0}, {0.0, 5.0}, d, {}), InputError);
}

TEST_CASE("doubling residuals decreases the likelihood") {
  Dataset d{{{1.0, 1.0}, {-2.0, 2.0}, {3.0, 0.5}}, ""};
  Dataset far = d;
  const double mu = 0.5;
  for (auto& s : far.studies) s.effect = mu + 2.0 * (s.effect - mu);
  const ParameterState x{mu, 2.0, 1.5};
  CHECK(log_likelihood(x, far) < log_likelihood(x, d));
}

TEST_CASE("posterior differences across hyperparameters depend only on mu and tau_mu") {
  const auto d = testing::synthetic10();
  const Hyperparameters t{5.0, 9.0}, u{-3.0, 7.0};
  const ParameterState a{12.0, 3.0, 1.5}, b{12.0, 3.0, 4.2};
  const double da = log_unnormalized_posterior(a, t, d, {}) - log_unnormalized_posterior(a, u, d, {});
  const double db = log_unnormalized_posterior(b, t, d, {}) - log_unnormalized_posterior(b, u, d, {});
  CHECK(da == doctest::Approx(db).epsilon(1e-12));
}

TEST_CASE("translation invariance") {
  auto d = testing::synthetic10();
  const ParameterState x{14.0, 3.0, 2.0};
  const Hyperparameters t{4.0, 8.0};
  const double base = log_unnormalized_posterior(x, t, d, {});
  const double shift = 37.5;
  for (auto& s : d.studies) s.effect += shift;
  const double moved = log_unnormalized_posterior({x.mu + shift, x.tau_mu, x.k}, {t.mu0 + shift, t.tau0}, d, {});
  CHECK(moved == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("prior predictive sample mean and variance") {
  const Hyperparameters t{3.0, 6.0};
  const std::size_t m = 100000;
  const auto draws = prior_predictive_sample(t, {}, m, 7);
  const double mean = testing::mean_of(draws);
  const double var = testing::variance_of(draws);
  CHECK(std::abs(mean - t.mu0) < 4.0 * std::sqrt(var / m));

  // Var = E[tau^2] (1 + E[k^2]) with tau ~ U(1, 6), k ~ U(1, 5): (43/3)(1 + 31/3)
  const double expected = 1462.0 / 9.0;
  double m4 = 0.0;
  for (double v : draws) m4 += std::pow(v - mean, 4);
  m4 /= static_cast<double>(m);
  const double se = std::sqrt((m4 - var * var) / m);
  CHECK(std::abs(var - expected) < 5.0 * se);
}

TEST_CASE("prior predictive draws are deterministic and validated") {
  CHECK(prior_predictive_sample({0.0, 5.0}, {}, 50, 3) == prior_predictive_sample({0.0, 5.0}, {}, 50, 3));
  CHECK_THROWS_AS(prior_predictive_sample({0.0, 5.0}, {}, 0, 3), InputError);
  CHECK_THROWS_AS(prior_predictive_sample({0.0, 1.0}, {}, 10, 3), InputError);
  // near-degenerate tau0 still yields finite draws
  const auto tight = prior_predictive_sample({0.0, 1.0 + 1e-9}, {}, 1000, 3);
  for (double v : tight) CHECK(std::isfinite(v));
}

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS((Dataset{{{1.0, 1.0}}, ""}).validate(), InputError);
  CHECK_THROWS_AS((Dataset{{{1.0, 1.0}, {2.0, 0.0}}, ""}).validate(), InputError);
  CHECK_THROWS_AS((Dataset{{{1.0, 1.0}, {INFINITY, 1.0}}, ""}).validate(), InputError);
  CHECK_THROWS_AS((ModelConstants{1.0, 3.0, 2.0}).validate(), InputError);
  CHECK_NOTHROW(testing::synthetic10().validate());
}

TEST_CASE("dataset CSV parsing") {
  const std::string text =
      "# provenance line\n"
      "study_id,effect,std_error\n"
      "a,1.5,0.5\n"
      "b,-2.25,1\n";
  const auto d = parse_dataset_csv(text);
  REQUIRE(d.size() == 2);
  CHECK(d.studies[0].id == "a");
  CHECK(d.studies[1].effect == -2.25);
  const auto neg = parse_dataset_csv(text, true);
  CHECK(neg.studies[0].effect == -1.5);
  CHECK(parse_dataset_csv(format_dataset_csv(d)).studies[1].std_error == 1.0);

  CHECK_THROWS_AS(parse_dataset_csv("id,y,s\n1,2,3\n2,3,4\n"), InputError);
  CHECK_THROWS_AS(parse_dataset_csv("study_id,effect,std_error\n1,x,3\n2,3,4\n"), InputError);
  CHECK_THROWS_AS(parse_dataset_csv("study_id,effect,std_error\n1,1,3\n"), InputError);
}
