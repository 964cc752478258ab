#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "riis/model.hpp"
#include "riis/random.hpp"

namespace riis {

struct ElicitationSpec {
  double low = -20.0;   // elicited range R for a new study's effect
  double high = 80.0;
  double coverage = 0.9;  // target probability h of landing in R
  double mu0_lo = -100.0, mu0_hi = 100.0;
  double tau0_lo = 5.0, tau0_hi = 50.0;
  std::size_t mu0_steps = 200;
  std::size_t tau0_steps = 200;
  std::size_t mc_samples_per_cell = 10000;
  double margin = 0.9;
  std::uint64_t seed = 1;

  void validate(const ModelConstants& c) const;
};

/// Which side of the fitted curve tau0 = q(mu0) complies with the coverage target.
enum class BoundarySide { kBelow, kAbove };

/// Compact hyperparameter set: a box intersected with one side of a quadratic
/// boundary q(mu0) = alpha mu0^2 + beta mu0 + gamma.
///
/// With r(mu0, tau0) = tau0 - q(mu0), membership requires
///   r <= margin   (kBelow), or
///   r >= -margin  (kAbove),
/// i.e. the margin widens the set outward from the fitted curve. All
/// inequalities are closed.
struct PriorSet {
  double mu0_lo = 0.0, mu0_hi = 0.0;
  double tau0_lo = 0.0, tau0_hi = 0.0;
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  double margin = 0.9;
  BoundarySide side = BoundarySide::kBelow;

  double boundary(double mu0) const { return (alpha * mu0 + beta) * mu0 + gamma; }
  double r(const Hyperparameters& t) const { return t.tau0 - boundary(t.mu0); }
  bool contains(const Hyperparameters& t) const;

  double mu0_width() const { return mu0_hi - mu0_lo; }
  double tau0_width() const { return tau0_hi - tau0_lo; }

  /// Box with a boundary that never binds.
  static PriorSet box(double mu0_lo, double mu0_hi, double tau0_lo, double tau0_hi);
  static PriorSet point(const Hyperparameters& t) { return box(t.mu0, t.mu0, t.tau0, t.tau0); }

  void validate(const ModelConstants& c) const;
};

struct CellCoverage {
  double mu0 = 0.0;
  double tau0 = 0.0;
  double coverage = 0.0;
};

struct PriorSetBuild {
  PriorSet set;
  std::vector<CellCoverage> grid;             // row-major: mu0 outer, tau0 inner
  std::vector<CellCoverage> boundary_points;  // one per mu0 column with a crossing
  std::size_t complying_cells = 0;
  /// Complying cells that the fitted set leaves out, as a fraction of all complying cells.
  double excluded_fraction = 0.0;
  std::vector<std::string> warnings;
};

/// Fraction of prior predictive draws of delta* inside [spec.low, spec.high]
/// (spec.mc_samples_per_cell draws with seed spec.seed).
double coverage_proportion(const Hyperparameters& t, const ElicitationSpec& spec, const ModelConstants& c);
double coverage_proportion(const Hyperparameters& t, const ElicitationSpec& spec, const ModelConstants& c,
                           std::uint64_t seed);

/// Grid scan, per-column boundary extraction and least-squares quadratic fit.
/// Throws InputError if no cell reaches the target coverage.
PriorSetBuild build_prior_set(const ElicitationSpec& spec, const ModelConstants& c);

inline bool contains(const PriorSet& ps, const Hyperparameters& t) { return ps.contains(t); }

/// Nearest member of the set (distance measured in box-width units).
Hyperparameters project(const PriorSet& ps, const Hyperparameters& t);

/// Uniform draw over the set by rejection from the box.
Hyperparameters sample_feasible(const PriorSet& ps, Rng& rng);

void to_json(nlohmann::json& j, const PriorSet& ps);
void from_json(const nlohmann::json& j, PriorSet& ps);
void to_json(nlohmann::json& j, const ElicitationSpec& spec);
void from_json(const nlohmann::json& j, ElicitationSpec& spec);

std::string format_grid_csv(const std::vector<CellCoverage>& grid);

}  // namespace riis
