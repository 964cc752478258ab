#include "riis/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riis/error.hpp"
#include "riis/random.hpp"

namespace riis {

const char* version() { return RIIS_VERSION; }

void SimulateSpec::validate() const {
  if (n_studies < 2) throw InputError("simulate.n_studies must be >= 2");
  if (!(effect_sd >= 0.0) || !std::isfinite(effect_mean)) throw InputError("simulate effect distribution is invalid");
  if (!(se_median > 0.0) || !(se_log_sd >= 0.0)) throw InputError("simulate standard-error distribution is invalid");
}

Dataset simulate_dataset(const SimulateSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset d;
  d.label = "synthetic";
  for (std::size_t i = 0; i < spec.n_studies; ++i) {
    const double delta = spec.effect_mean + spec.effect_sd * z(rng);
    const double sigma = spec.se_median * std::exp(spec.se_log_sd * z(rng));
    Study s;
    s.id = "s" + std::to_string(i + 1);
    s.effect = delta + sigma * z(rng);
    s.std_error = sigma;
    d.studies.push_back(s);
  }
  return d;
}

std::uint64_t component_seed(std::uint64_t seed, SeedStream stream) {
  return mix_seed(seed, static_cast<std::uint64_t>(stream));
}

void RunConfig::apply_seeds() {
  elicitation.seed = component_seed(seed, SeedStream::kElicit);
  iis.mcmc.seed = component_seed(seed, SeedStream::kMcmc);
  iis.annealing.seed = component_seed(seed, SeedStream::kAnnealing);
}

void RunConfig::validate() const {
  if (threads == 0) throw InputError("threads must be >= 1");
  constants.validate();
  simulate.validate();
  elicitation.validate(constants);
  if (prior_set) prior_set->validate(constants);
  iis.validate();
  quadrature.validate();
  if (grid.resolution == 0) throw InputError("grid.resolution must be >= 1");
}

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& block) {
  if (!j.is_object()) throw InputError("config block '" + block + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InputError("unknown config key '" + (block.empty() ? key : block + "." + key) + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const char* runner_name(GridRunner r) {
  switch (r) {
    case GridRunner::kReuseWeights: return "reuse-weights";
    case GridRunner::kFreshMcmc: return "fresh-mcmc";
    case GridRunner::kOracle: return "oracle";
  }
  return "oracle";
}

GridRunner parse_runner(const std::string& s) {
  if (s == "reuse-weights") return GridRunner::kReuseWeights;
  if (s == "fresh-mcmc") return GridRunner::kFreshMcmc;
  if (s == "oracle") return GridRunner::kOracle;
  throw InputError("grid.runner must be oracle, fresh-mcmc or reuse-weights");
}

Direction parse_direction(const std::string& s) {
  if (s == "lower") return Direction::kLower;
  if (s == "upper") return Direction::kUpper;
  throw InputError("direction must be lower or upper");
}

json pair(const Hyperparameters& t) { return json::array({t.mu0, t.tau0}); }
Hyperparameters unpair(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

void to_json(json& j, const RunConfig& c) {
  json elicitation = c.elicitation;
  elicitation.erase("seed");
  j = json{
      {"seed", c.seed},
      {"data", c.data},
      {"out", c.out},
      {"threads", c.threads},
      {"negate_effects", c.negate_effects},
      {"constants", {{"tau_l", c.constants.tau_l}, {"k_l", c.constants.k_l}, {"k_u", c.constants.k_u}}},
      {"simulate",
       {{"n_studies", c.simulate.n_studies},
        {"effect_mean", c.simulate.effect_mean},
        {"effect_sd", c.simulate.effect_sd},
        {"se_median", c.simulate.se_median},
        {"se_log_sd", c.simulate.se_log_sd}}},
      {"elicitation", elicitation},
      {"prior_set", c.prior_set ? json(*c.prior_set) : json(nullptr)},
      {"prior_set_path", c.prior_set_path},
      {"start", c.start ? pair(*c.start) : json(nullptr)},
      {"iis",
       {{"ess_target", c.iis.ess_target},
        {"mcmc_ess_margin", c.iis.mcmc_ess_margin},
        {"max_outer_iterations", c.iis.max_outer_iterations},
        {"direction", c.iis.direction == Direction::kLower ? "lower" : "upper"},
        {"record_time", c.iis.record_time}}},
      {"mcmc",
       {{"burn_in", c.iis.mcmc.burn_in},
        {"batch_size", c.iis.mcmc.batch_size},
        {"max_draws", c.iis.mcmc.max_draws},
        {"target_accept", c.iis.mcmc.target_accept}}},
      {"annealing",
       {{"initial_temperature", c.iis.annealing.initial_temperature},
        {"cooling_factor", c.iis.annealing.cooling_factor},
        {"steps_per_temperature", c.iis.annealing.steps_per_temperature},
        {"min_temperature_ratio", c.iis.annealing.min_temperature_ratio},
        {"proposal_scale", c.iis.annealing.proposal_scale},
        {"probe_count", c.iis.annealing.probe_count},
        {"polish", c.iis.annealing.polish}}},
      {"grid",
       {{"resolution", c.grid.resolution}, {"runner", runner_name(c.grid.runner)}, {"emit_ess", c.grid.emit_ess}}},
      {"quadrature",
       {{"nodes_per_axis", c.quadrature.nodes_per_axis}, {"max_nodes_per_axis", c.quadrature.max_nodes_per_axis}}},
      {"oracle", {{"at", pair(c.oracle_at)}}},
  };
}

void from_json(const json& j, RunConfig& c) {
  check_keys(j,
             {"seed", "data", "out", "threads", "negate_effects", "constants", "simulate", "elicitation", "prior_set",
              "prior_set_path", "start", "iis", "mcmc", "annealing", "grid", "quadrature", "oracle"},
             "");
  read(j, "seed", c.seed);
  read(j, "data", c.data);
  read(j, "out", c.out);
  read(j, "threads", c.threads);
  read(j, "negate_effects", c.negate_effects);
  if (j.contains("constants")) {
    const auto& b = j["constants"];
    check_keys(b, {"tau_l", "k_l", "k_u"}, "constants");
    read(b, "tau_l", c.constants.tau_l);
    read(b, "k_l", c.constants.k_l);
    read(b, "k_u", c.constants.k_u);
  }
  if (j.contains("simulate")) {
    const auto& b = j["simulate"];
    check_keys(b, {"n_studies", "effect_mean", "effect_sd", "se_median", "se_log_sd"}, "simulate");
    read(b, "n_studies", c.simulate.n_studies);
    read(b, "effect_mean", c.simulate.effect_mean);
    read(b, "effect_sd", c.simulate.effect_sd);
    read(b, "se_median", c.simulate.se_median);
    read(b, "se_log_sd", c.simulate.se_log_sd);
  }
  if (j.contains("elicitation")) {
    const auto& b = j["elicitation"];
    check_keys(b, {"range", "coverage", "mu0_range", "tau0_range", "mu0_steps", "tau0_steps", "mc_samples_per_cell",
                   "margin"},
               "elicitation");
    b.get_to(c.elicitation);
  }
  if (j.contains("prior_set") && !j["prior_set"].is_null()) c.prior_set = j["prior_set"].get<PriorSet>();
  read(j, "prior_set_path", c.prior_set_path);
  if (j.contains("start") && !j["start"].is_null()) c.start = unpair(j["start"]);
  if (j.contains("iis")) {
    const auto& b = j["iis"];
    check_keys(b, {"ess_target", "mcmc_ess_margin", "max_outer_iterations", "direction", "record_time"}, "iis");
    read(b, "ess_target", c.iis.ess_target);
    read(b, "mcmc_ess_margin", c.iis.mcmc_ess_margin);
    read(b, "max_outer_iterations", c.iis.max_outer_iterations);
    if (b.contains("direction")) c.iis.direction = parse_direction(b["direction"].get<std::string>());
    read(b, "record_time", c.iis.record_time);
  }
  if (j.contains("mcmc")) {
    const auto& b = j["mcmc"];
    check_keys(b, {"burn_in", "batch_size", "max_draws", "target_accept"}, "mcmc");
    read(b, "burn_in", c.iis.mcmc.burn_in);
    read(b, "batch_size", c.iis.mcmc.batch_size);
    read(b, "max_draws", c.iis.mcmc.max_draws);
    read(b, "target_accept", c.iis.mcmc.target_accept);
  }
  if (j.contains("annealing")) {
    const auto& b = j["annealing"];
    check_keys(b, {"initial_temperature", "cooling_factor", "steps_per_temperature", "min_temperature_ratio",
                   "proposal_scale", "probe_count", "polish"},
               "annealing");
    auto& a = c.iis.annealing;
    read(b, "initial_temperature", a.initial_temperature);
    read(b, "cooling_factor", a.cooling_factor);
    read(b, "steps_per_temperature", a.steps_per_temperature);
    read(b, "min_temperature_ratio", a.min_temperature_ratio);
    read(b, "proposal_scale", a.proposal_scale);
    read(b, "probe_count", a.probe_count);
    read(b, "polish", a.polish);
  }
  if (j.contains("grid")) {
    const auto& b = j["grid"];
    check_keys(b, {"resolution", "runner", "emit_ess"}, "grid");
    read(b, "resolution", c.grid.resolution);
    if (b.contains("runner")) c.grid.runner = parse_runner(b["runner"].get<std::string>());
    read(b, "emit_ess", c.grid.emit_ess);
  }
  if (j.contains("quadrature")) {
    const auto& b = j["quadrature"];
    check_keys(b, {"nodes_per_axis", "max_nodes_per_axis"}, "quadrature");
    read(b, "nodes_per_axis", c.quadrature.nodes_per_axis);
    read(b, "max_nodes_per_axis", c.quadrature.max_nodes_per_axis);
  }
  if (j.contains("oracle")) {
    const auto& b = j["oracle"];
    check_keys(b, {"at"}, "oracle");
    if (b.contains("at")) c.oracle_at = unpair(b["at"]);
  }
  c.apply_seeds();
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  try {
    return json::parse(in).get<RunConfig>();
  } catch (const json::exception& e) {
    throw InputError("invalid config file '" + path + "': " + e.what());
  }
}

std::uint64_t config_hash(const RunConfig& c) {
  json j = c;
  j.erase("out");
  j.erase("threads");
  const std::string text = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string provenance_line(const RunConfig& c) {
  std::ostringstream os;
  os << "# tool=riis version=" << version() << " config_hash=" << std::hex << config_hash(c) << std::dec
     << " seed=" << c.seed;
  return os.str();
}

}  // namespace riis
