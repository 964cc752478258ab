#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "riis/iis.hpp"
#include "riis/mcmc.hpp"
#include "riis/model.hpp"
#include "riis/optimize.hpp"
#include "riis/oracle.hpp"
#include "riis/prior_set.hpp"

namespace riis {

const char* version();

/// Synthetic dataset generator: delta_i ~ N(effect_mean, effect_sd^2),
/// sigma_i ~ LogNormal(log(se_median), se_log_sd), y_i ~ N(delta_i, sigma_i^2).
/// The defaults aim at a sample mean near 28.5 and 5th/95th percentiles near (-11, 76).
struct SimulateSpec {
  std::size_t n_studies = 75;
  double effect_mean = 28.5;
  double effect_sd = 18.0;
  double se_median = 12.0;
  double se_log_sd = 0.5;

  void validate() const;
};

Dataset simulate_dataset(const SimulateSpec& spec, std::uint64_t seed);

struct GridSpec {
  std::size_t resolution = 25;
  GridRunner runner = GridRunner::kOracle;
  bool emit_ess = false;
};

/// Everything a CLI run needs. Component seeds are not stored: they derive
/// from `seed` through component_seed().
struct RunConfig {
  std::uint64_t seed = 1;
  std::string data;  // dataset CSV path
  std::string out = ".";
  unsigned threads = 1;
  bool negate_effects = false;
  ModelConstants constants;
  SimulateSpec simulate;
  ElicitationSpec elicitation;
  /// Explicit prior set; when absent, bound and grid build one from `elicitation`.
  std::optional<PriorSet> prior_set;
  std::string prior_set_path;  // JSON written by `elicit`; takes precedence over `prior_set`
  std::optional<Hyperparameters> start;  // defaults to default_start(set)
  IISConfig iis;
  GridSpec grid;
  QuadratureSpec quadrature;
  Hyperparameters oracle_at{0.0, 5.0};

  /// Copies derived seeds into the component configs.
  void apply_seeds();
  void validate() const;
};

enum class SeedStream : std::uint64_t { kSimulate = 1, kElicit = 2, kMcmc = 3, kAnnealing = 4 };
std::uint64_t component_seed(std::uint64_t seed, SeedStream stream);

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::string& path);

/// FNV-1a of the resolved config, excluding the output directory and thread cap.
std::uint64_t config_hash(const RunConfig& c);

/// `# tool=riis version=... config_hash=... seed=...`
std::string provenance_line(const RunConfig& c);

}  // namespace riis
