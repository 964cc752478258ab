#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace riis {

/// Log of zero. Out-of-support states and excluded weights carry this value.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

struct Study {
  double effect = 0.0;     // y_i
  double std_error = 1.0;  // sigma_i, known
  std::string id;
};

/// Study-level effects with known standard errors.
struct Dataset {
  std::vector<Study> studies;
  std::string label;

  std::size_t size() const { return studies.size(); }
  /// Throws InputError unless there are at least two studies with finite
  /// effects and finite positive standard errors.
  void validate() const;
};

/// Fixed prior bounds: tau_mu ~ U(tau_l, tau0), k ~ U(k_l, k_u).
struct ModelConstants {
  double tau_l = 1.0;
  double k_l = 1.0;
  double k_u = 5.0;

  void validate() const;
};

/// One prior in the set: mu | tau_mu ~ N(mu0, tau_mu^2), tau_mu ~ U(tau_l, tau0).
struct Hyperparameters {
  double mu0 = 0.0;
  double tau0 = 10.0;

  void validate(const ModelConstants& c) const;
  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// A posterior draw on the marginal parameterization (study effects integrated out).
struct ParameterState {
  double mu = 0.0;
  double tau_mu = 1.0;
  double k = 1.0;

  bool in_support(const Hyperparameters& t, const ModelConstants& c) const {
    return tau_mu > c.tau_l && tau_mu < t.tau0 && k > c.k_l && k < c.k_u;
  }
};

double log_normal_density(double x, double mean, double variance);

/// Marginal log likelihood sum_i log N(y_i; mu, sigma_i^2 + k^2 tau_mu^2).
double log_likelihood(const ParameterState& x, const Dataset& d);

/// Log prior including both uniform normalizers; kLogZero outside the support.
double log_prior(const ParameterState& x, const Hyperparameters& t, const ModelConstants& c);

/// log likelihood + log prior, uniform normalizers included.
double log_unnormalized_posterior(const ParameterState& x, const Hyperparameters& t,
                                  const Dataset& d, const ModelConstants& c);

/// Ancestral draws of a new study's effect delta* from the prior predictive.
std::vector<double> prior_predictive_sample(const Hyperparameters& t, const ModelConstants& c,
                                            std::size_t m, std::uint64_t seed);

/// CSV with header `study_id,effect,std_error`.
Dataset read_dataset_csv(const std::filesystem::path& path, bool negate_effects = false);
Dataset parse_dataset_csv(const std::string& text, bool negate_effects = false);
std::string format_dataset_csv(const Dataset& d);

}  // namespace riis
