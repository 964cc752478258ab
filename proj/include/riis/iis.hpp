#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riis/mcmc.hpp"
#include "riis/model.hpp"
#include "riis/optimize.hpp"
#include "riis/prior_set.hpp"

namespace riis {

struct IISConfig {
  std::size_t ess_target = 5000;
  /// Each chain is extended until the ESS of its mu series reaches (1 + margin) * ess_target.
  double mcmc_ess_margin = 0.20;
  std::size_t max_outer_iterations = 10000;
  Direction direction = Direction::kLower;
  MCMCConfig mcmc;            // batch_size / max_draws set the per-iteration draw policy
  AnnealingConfig annealing;  // seed is offset per iteration
  /// Record wall-clock seconds per iteration. Off by default so reports are reproducible.
  bool record_time = false;

  void validate() const;
};

enum class StopReason { kConverged, kIterationCap, kDegenerate };

struct IISRow {
  std::size_t iteration = 0;
  std::size_t draws = 0;
  Hyperparameters t_current;  // hyperparameters the chain was run at
  Hyperparameters t_star;
  double ess = 0.0;
  double ess_mcmc = 0.0;
  double ess_is = 0.0;
  double estimate = 0.0;   // E(mu) estimate at t_star, natural sign
  double std_error = 0.0;  // sqrt(weighted Var(f) / ESS)
  double chain_ess_mu = 0.0;
  bool draw_budget_exhausted = false;
  double seconds = 0.0;
  std::vector<std::string> warnings;
};

struct IISReport {
  Hyperparameters t0;
  std::vector<IISRow> rows;
  double bound = 0.0;
  Hyperparameters t_star;
  bool converged = false;
  StopReason stop_reason = StopReason::kIterationCap;
  std::size_t iterations = 0;
  std::optional<std::string> note;
};

/// Function of a draw whose posterior expectation is bounded. Defaults to mu.
using DrawFunction = std::function<double(const ParameterState&)>;

/// Iterative importance sampling over MCMC draws: alternate a fresh chain at
/// the current hyperparameters with annealed minimization of the reweighted
/// estimate, until the combined ESS at the minimizer exceeds the target.
IISReport iterate_bound(const PriorSet& ps, const Hyperparameters& t0, const Dataset& d, const ModelConstants& c,
                        const IISConfig& cfg, const DrawFunction& f = {});

/// iterate_bound with the direction forced to kLower.
IISReport iterate_lower_bound(const PriorSet& ps, const Hyperparameters& t0, const Dataset& d,
                              const ModelConstants& c, IISConfig cfg, const DrawFunction& f = {});

/// Feasible point nearest the box centroid.
Hyperparameters default_start(const PriorSet& ps);

struct PosteriorSummary {
  double mean = 0.0;
  double std_error = 0.0;  // sd / sqrt(ESS_MCMC)
  double ess = 0.0;
  std::size_t draws = 0;
};

/// Posterior mean of mu under the wide prior mu0 = 0, tau0 = 1000.
PosteriorSummary flat_prior_reference(const Dataset& d, const ModelConstants& c, const MCMCConfig& cfg);

/// MCMC posterior mean of mu with an ESS-based standard error.
PosteriorSummary posterior_summary(const Chain& chain);

std::string format_report_csv(const IISReport& report);
std::string format_report_table(const IISReport& report);

}  // namespace riis
