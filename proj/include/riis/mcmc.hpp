#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "riis/model.hpp"
#include "riis/random.hpp"

namespace riis {

struct MCMCConfig {
  std::size_t burn_in = 2000;
  std::size_t batch_size = 5000;
  std::size_t max_draws = 200000;
  double target_accept = 0.3;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Post burn-in draws in sampling order. No thinning is ever applied.
struct Chain {
  std::vector<ParameterState> draws;
  double accept_rate = 0.0;  // over the recorded (post-adaptation) steps
  Hyperparameters hyperparameters_used;
  std::uint64_t seed = 0;

  std::size_t size() const { return draws.size(); }
  std::vector<double> mu_series() const;
};

/// Adaptive random-walk Metropolis on (mu, logit tau_mu, logit k).
///
/// tau_mu and k are mapped to their open boxes by scaled logits and the
/// log-Jacobian is added to the target. The proposal covariance is learned
/// from the burn-in history and then frozen, so the recorded draws come from
/// a time-homogeneous kernel.
class MetropolisSampler {
 public:
  MetropolisSampler(const Hyperparameters& t, const Dataset& d, const ModelConstants& c, const MCMCConfig& cfg);

  /// Runs burn-in with adaptation. Throws InitializationError if no proposal
  /// was accepted.
  void burn_in();
  /// Appends `n` draws to `chain` with the frozen kernel.
  void extend(Chain& chain, std::size_t n);

  const Hyperparameters& hyperparameters() const { return t_; }

 private:
  struct Point {
    double z[3];
    double log_target;
  };

  double log_target(const double (&z)[3]) const;
  ParameterState to_state(const double (&z)[3]) const;
  bool step(Point& cur);

  Hyperparameters t_;
  const Dataset& d_;
  ModelConstants c_;
  MCMCConfig cfg_;
  Rng rng_;
  Point cur_{};
  double chol_[3][3]{};  // lower-triangular factor of the proposal covariance
  bool burned_in_ = false;
  std::size_t recorded_steps_ = 0;
  std::size_t recorded_accepts_ = 0;
};

/// Burn-in followed by exactly cfg.max_draws recorded draws.
Chain run_chain(const Hyperparameters& t, const Dataset& d, const ModelConstants& c, const MCMCConfig& cfg);

/// Burn-in, then batches of cfg.batch_size until `enough(chain)` is true or
/// cfg.max_draws is reached.
Chain run_chain_until(const Hyperparameters& t, const Dataset& d, const ModelConstants& c, const MCMCConfig& cfg,
                      const std::function<bool(const Chain&)>& enough);

/// Sample autocorrelation rho(0..max_lag), normalized by N (biased estimator).
std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag);

/// N / (1 + 2 sum_{k=1}^{l} rho(k)), where the sum stops before the first
/// negative autocorrelation. Clamped to (0, N].
double ess_mcmc(std::span<const double> series);

/// Lag at which the sum in ess_mcmc stopped (number of terms included).
struct EssDetail {
  double ess = 0.0;
  std::size_t truncation_lag = 0;
  double rho_sum = 0.0;
};
EssDetail ess_mcmc_detail(std::span<const double> series);

std::string format_chain_csv(const Chain& chain);

}  // namespace riis
