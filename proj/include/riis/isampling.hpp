#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riis/mcmc.hpp"
#include "riis/model.hpp"

namespace riis {

/// Draws from a chain at one set of hyperparameters, reweighted toward
/// another. `chain` is not owned and must outlive the sample.
struct WeightedSample {
  const Chain* chain = nullptr;
  Hyperparameters target;
  std::vector<double> log_weights;  // may contain kLogZero
  double uncovered_fraction = 0.0;
  /// Set when the target's tau0 exceeds the proposal's: part of the target
  /// support is never visited and the estimate covers the visited region only.
  std::optional<std::string> warning;

  std::size_t size() const { return log_weights.size(); }
};

/// Log weights from the simplified prior ratio (likelihood and k prior cancel).
WeightedSample importance_log_weights(const Chain& chain, const Hyperparameters& target, const Dataset& d,
                                      const ModelConstants& c);

/// Same weights from the difference of full unnormalized log posteriors.
std::vector<double> importance_log_weights_full(const Chain& chain, const Hyperparameters& target,
                                                const Dataset& d, const ModelConstants& c);

/// sum f w / sum w.
double self_normalized_estimate(const WeightedSample& ws, std::span<const double> f_values);

/// (sum w)^2 / sum w^2
double ess_is(const WeightedSample& ws);

/// (f_i - estimate) * w_i with w_i = exp(log w_i - max log w).
std::vector<double> g_tilde_series(const WeightedSample& ws, std::span<const double> f_values);

struct CombinedEss {
  double ess = 0.0;               // (ess_mcmc_gtilde / N) * ess_is
  double ess_is = 0.0;
  double ess_mcmc_gtilde = 0.0;
};

/// Effective sample size of self-normalized importance sampling over
/// correlated draws. Throws DegenerateSeriesError when the g~ series is
/// constant (for example when f is constant).
CombinedEss combined_ess(const WeightedSample& ws, std::span<const double> f_values);

/// Self-normalized weighted variance of f: estimate of Var_p(f).
double weighted_variance(const WeightedSample& ws, std::span<const double> f_values);

std::string format_weights_csv(const WeightedSample& ws, std::span<const double> f_values);

}  // namespace riis
