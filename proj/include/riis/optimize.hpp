#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riis/mcmc.hpp"
#include "riis/model.hpp"
#include "riis/oracle.hpp"
#include "riis/prior_set.hpp"

namespace riis {

/// Objective over hyperparameters. Implementations may throw
/// EmptyOverlapError; optimizers treat that as +infinity.
using Objective = std::function<double(const Hyperparameters&)>;

struct AnnealingConfig {
  /// <= 0 means: derive from the objective spread over `probe_count` random feasible points.
  double initial_temperature = 0.0;
  double cooling_factor = 0.9;
  std::size_t steps_per_temperature = 50;
  /// Floor as a fraction of the initial temperature.
  double min_temperature_ratio = 1e-4;
  /// Proposal standard deviation as a fraction of each box width, at the initial temperature.
  double proposal_scale = 0.1;
  std::size_t probe_count = 20;
  /// Compass search from the best point after the ladder.
  bool polish = true;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TraceRow {
  std::size_t step = 0;
  double temperature = 0.0;
  Hyperparameters t;
  double objective = 0.0;
  bool accepted = false;
};

struct OptimizationResult {
  Hyperparameters argmin;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t accepted_moves = 0;
  std::vector<TraceRow> trace;  // filled when requested
};

/// Self-normalized estimate of f at target t from the fixed chain.
double objective(const Hyperparameters& t, const Chain& chain, std::span<const double> f_values, const Dataset& d,
                 const ModelConstants& c);

/// Simulated annealing with geometric cooling. Infeasible proposals are
/// rejected before the objective is evaluated. Starts from `start` projected
/// into the set and returns the best point seen.
OptimizationResult anneal_minimize(const PriorSet& ps, const Hyperparameters& start, const Objective& fn,
                                   const AnnealingConfig& cfg, bool record_trace = false);

/// Chain-based overload: the objective is the reweighted estimate of f and
/// the start is the chain's own hyperparameters.
OptimizationResult anneal_minimize(const PriorSet& ps, const Chain& chain, std::span<const double> f_values,
                                   const Dataset& d, const ModelConstants& c, const AnnealingConfig& cfg,
                                   bool record_trace = false);

struct GridPoint {
  Hyperparameters t;
  double value = 0.0;
  /// Only set by the reuse-weights runner when ESS columns are requested.
  std::optional<double> ess, ess_is, ess_mcmc;
};

struct GridResult {
  OptimizationResult best;
  std::vector<GridPoint> points;  // feasible points in scan order
};

/// Evaluates `fn` on every feasible point of a resolution x resolution grid
/// over the box and returns the minimizer. Resolution 1 means the box center.
GridResult grid_minimize(const PriorSet& ps, std::size_t resolution, const Objective& fn);

enum class GridRunner { kReuseWeights, kFreshMcmc, kOracle };

/// Direction multiplier for f: +1 finds the lower bound of E(mu), -1 the upper.
enum class Direction { kLower, kUpper };
inline double sign_of(Direction d) { return d == Direction::kLower ? 1.0 : -1.0; }

struct GridRunnerOptions {
  GridRunner runner = GridRunner::kOracle;
  Direction direction = Direction::kLower;
  const Chain* chain = nullptr;  // reuse-weights only
  MCMCConfig mcmc;               // fresh-mcmc only; per-point seeds derive from mcmc.seed
  QuadratureSpec quadrature;     // oracle only
  bool emit_ess = false;         // reuse-weights only
};

/// grid_minimize with one of the built-in per-point estimators. Values are
/// in the minimized sign convention (multiplied by sign_of(direction)).
GridResult grid_minimize(const PriorSet& ps, std::size_t resolution, const Dataset& d, const ModelConstants& c,
                         const GridRunnerOptions& opts);

std::string format_trace_csv(const std::vector<TraceRow>& trace);

}  // namespace riis
