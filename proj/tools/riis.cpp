// riis command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riis/config.hpp"
#include "riis/error.hpp"
#include "riis/format.hpp"
#include "riis/iis.hpp"
#include "riis/isampling.hpp"
#include "riis/optimize.hpp"
#include "riis/oracle.hpp"
#include "riis/parallel.hpp"
#include "riis/prior_set.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace riis;

namespace {

enum ExitCode { kOk = 0, kInputFailure = 1, kNotConverged = 2, kNumericalFailure = 3 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, data, prior_set, direction, runner;
  std::optional<unsigned> threads;
  bool negate_effects = false;
  std::optional<std::size_t> n_studies, ess_target, max_iterations, resolution, nodes;
  std::vector<double> range, start, at;
  bool emit_ess = false;
  bool timings = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON run configuration");
  sub->add_option("--seed", o.seed, "global seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--threads", o.threads, "worker thread cap")->check(CLI::PositiveNumber);
  sub->add_option("--data", o.data, "dataset CSV (study_id,effect,std_error)");
  sub->add_flag("--negate-effects", o.negate_effects, "flip the sign of every effect on load");
}

void add_prior_set_options(CLI::App* sub, Overrides& o) {
  sub->add_option("--prior-set", o.prior_set, "prior set JSON written by `elicit`");
  sub->add_option("--direction", o.direction, "lower or upper bound")->check(CLI::IsMember({"lower", "upper"}));
}

RunConfig resolve(const Overrides& o) {
  RunConfig c;
  if (!o.config.empty()) c = load_run_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.data) c.data = *o.data;
  if (o.threads) c.threads = *o.threads;
  if (o.negate_effects) c.negate_effects = true;
  if (o.prior_set) c.prior_set_path = *o.prior_set;
  if (o.direction) c.iis.direction = *o.direction == "upper" ? Direction::kUpper : Direction::kLower;
  if (o.n_studies) c.simulate.n_studies = *o.n_studies;
  if (o.ess_target) c.iis.ess_target = *o.ess_target;
  if (o.max_iterations) c.iis.max_outer_iterations = *o.max_iterations;
  if (o.resolution) c.grid.resolution = *o.resolution;
  if (o.nodes) c.quadrature.nodes_per_axis = *o.nodes;
  if (o.runner) {
    json j = c;
    j["grid"]["runner"] = *o.runner;
    c = j.get<RunConfig>();
  }
  if (o.emit_ess) c.grid.emit_ess = true;
  if (o.timings) c.iis.record_time = true;
  if (o.range.size() == 2) {
    c.elicitation.low = o.range[0];
    c.elicitation.high = o.range[1];
  }
  if (o.start.size() == 2) c.start = Hyperparameters{o.start[0], o.start[1]};
  if (o.at.size() == 2) c.oracle_at = Hyperparameters{o.at[0], o.at[1]};
  c.apply_seeds();
  c.validate();
  set_max_threads(c.threads);
  return c;
}

void write_output(const RunConfig& c, const std::string& name, const std::string& body) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  const fs::path path = fs::path(c.out) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f << provenance_line(c) << "\n" << body;
  if (!f) throw InputError("write failed for '" + path.string() + "'");
}

void write_json(const RunConfig& c, const std::string& name, json body) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  const fs::path path = fs::path(c.out) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  body["provenance"] = provenance_line(c).substr(2);
  f << body.dump(2) << "\n";
}

Dataset load_data(const RunConfig& c) {
  if (c.data.empty()) throw InputError("a dataset is required (--data PATH)");
  return read_dataset_csv(c.data, c.negate_effects);
}

PriorSet resolve_prior_set(const RunConfig& c) {
  if (!c.prior_set_path.empty()) {
    std::ifstream in(c.prior_set_path);
    if (!in) throw InputError("cannot open prior set '" + c.prior_set_path + "'");
    try {
      const json j = json::parse(in);
      return j.contains("prior_set") ? j["prior_set"].get<PriorSet>() : j.get<PriorSet>();
    } catch (const json::exception& e) {
      throw InputError("invalid prior set file '" + c.prior_set_path + "': " + e.what());
    }
  }
  if (c.prior_set) return *c.prior_set;
  std::cerr << "note: no prior set given; building one from the elicitation block\n";
  const auto build = build_prior_set(c.elicitation, c.constants);
  for (const auto& w : build.warnings) std::cerr << "warning: " << w << "\n";
  return build.set;
}

void print_warnings(const IISReport& rep) {
  for (const auto& row : rep.rows)
    for (const auto& w : row.warnings) std::cerr << "warning (iteration " << row.iteration << "): " << w << "\n";
}

int cmd_simulate(const RunConfig& c) {
  const auto d = simulate_dataset(c.simulate, component_seed(c.seed, SeedStream::kSimulate));
  write_output(c, "dataset.csv", format_dataset_csv(d));
  double mean = 0.0;
  for (const auto& s : d.studies) mean += s.effect;
  mean /= static_cast<double>(d.size());
  std::cout << "wrote " << d.size() << " studies to dataset.csv (sample mean " << fmt_fixed(mean, 2) << ")\n";
  return kOk;
}

int cmd_elicit(const RunConfig& c) {
  const auto build = build_prior_set(c.elicitation, c.constants);
  for (const auto& w : build.warnings) std::cerr << "warning: " << w << "\n";
  json spec = c.elicitation;
  json out{{"prior_set", build.set},
           {"elicitation", spec},
           {"complying_cells", build.complying_cells},
           {"excluded_fraction", build.excluded_fraction},
           {"warnings", build.warnings}};
  write_json(c, "prior_set.json", out);
  write_output(c, "coverage_grid.csv", format_grid_csv(build.grid));
  write_output(c, "boundary_points.csv", format_grid_csv(build.boundary_points));
  const auto& s = build.set;
  std::cout << "prior set: mu0 in [" << fmt_double(s.mu0_lo) << ", " << fmt_double(s.mu0_hi) << "], tau0 in ["
            << fmt_double(s.tau0_lo) << ", " << fmt_double(s.tau0_hi) << "], boundary tau0 = "
            << fmt_fixed(s.alpha, 5) << " mu0^2 + " << fmt_fixed(s.beta, 5) << " mu0 + " << fmt_fixed(s.gamma, 5)
            << (s.side == BoundarySide::kBelow ? " (complying below)" : " (complying above)") << ", margin "
            << fmt_double(s.margin) << "\n";
  return kOk;
}

int cmd_bound(const RunConfig& c) {
  const auto d = load_data(c);
  const auto ps = resolve_prior_set(c);
  const Hyperparameters t0 = c.start ? *c.start : default_start(ps);
  const auto rep = iterate_bound(ps, t0, d, c.constants, c.iis);
  print_warnings(rep);
  const std::string table = format_report_table(rep);
  write_output(c, "bound.csv", format_report_csv(rep));
  write_output(c, "bound.txt", table);
  std::cout << table;
  if (rep.note) std::cout << "note: " << *rep.note << "\n";
  return rep.converged || rep.stop_reason == StopReason::kDegenerate ? kOk : kNotConverged;
}

int cmd_grid(const RunConfig& c) {
  const auto d = load_data(c);
  const auto ps = resolve_prior_set(c);
  GridRunnerOptions opts;
  opts.runner = c.grid.runner;
  opts.direction = c.iis.direction;
  opts.mcmc = c.iis.mcmc;
  opts.quadrature = c.quadrature;
  opts.emit_ess = c.grid.emit_ess;
  std::optional<Chain> chain;
  if (opts.runner == GridRunner::kReuseWeights) {
    chain = run_chain(c.start ? *c.start : default_start(ps), d, c.constants, c.iis.mcmc);
    opts.chain = &*chain;
  }
  const auto res = grid_minimize(ps, c.grid.resolution, d, c.constants, opts);
  const double sign = sign_of(c.iis.direction);
  const bool ess_cols = opts.emit_ess && opts.runner == GridRunner::kReuseWeights;
  std::string csv = ess_cols ? "mu0,tau0,estimate,ess,ess_is,ess_mcmc\n" : "mu0,tau0,estimate\n";
  for (const auto& p : res.points) {
    csv += fmt_double(p.t.mu0) + "," + fmt_double(p.t.tau0) + "," + fmt_double(sign * p.value);
    if (ess_cols) {
      auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string("nan"); };
      csv += "," + opt(p.ess) + "," + opt(p.ess_is) + "," + opt(p.ess_mcmc);
    }
    csv += "\n";
  }
  write_output(c, "grid.csv", csv);
  const auto& b = res.best;
  write_output(c, "grid_best.csv",
               "mu0,tau0,estimate,evaluations\n" + fmt_double(b.argmin.mu0) + "," + fmt_double(b.argmin.tau0) + "," +
                   fmt_double(sign * b.value) + "," + std::to_string(b.evaluations) + "\n");
  std::cout << (c.iis.direction == Direction::kLower ? "lower" : "upper") << " bound over "
            << res.points.size() << " grid points: " << fmt_fixed(sign * b.value, 4) << " at ("
            << fmt_fixed(b.argmin.mu0, 4) << ", " << fmt_fixed(b.argmin.tau0, 4) << ")\n";
  return kOk;
}

int cmd_oracle(const RunConfig& c) {
  const auto d = load_data(c);
  const auto r = posterior_mean_mu(c.oracle_at, d, c.constants, c.quadrature);
  if (r.warning) std::cerr << "warning: " << *r.warning << "\n";
  const std::string csv = "mu0,tau0,mean,nodes_per_axis,convergence_delta\n" + fmt_double(c.oracle_at.mu0) + "," +
                          fmt_double(c.oracle_at.tau0) + "," + fmt_double(r.mean) + "," +
                          std::to_string(r.nodes_per_axis) + "," + fmt_double(r.convergence_delta) + "\n";
  write_output(c, "oracle.csv", csv);
  std::cout << csv;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust Bayesian bounds for random-effects meta-analysis by iterative importance sampling"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "write a synthetic dataset");
  add_common(simulate, o);
  simulate->add_option("--n-studies", o.n_studies, "number of studies")->check(CLI::PositiveNumber);

  auto* elicit = app.add_subcommand("elicit", "build the hyperparameter set from a coverage target");
  add_common(elicit, o);
  elicit->add_option("--range", o.range, "elicited range LOW HIGH for a new study's effect")->expected(2);

  auto* bound = app.add_subcommand("bound", "iterative importance sampling bound on E(mu)");
  add_common(bound, o);
  add_prior_set_options(bound, o);
  bound->add_option("--start", o.start, "starting hyperparameters MU0 TAU0")->expected(2);
  bound->add_option("--ess-target", o.ess_target, "combined ESS required to stop");
  bound->add_option("--max-iterations", o.max_iterations, "outer iteration cap");
  bound->add_flag("--timings", o.timings, "record wall-clock seconds (outputs stop being reproducible)");

  auto* grid = app.add_subcommand("grid", "grid-search bound on E(mu)");
  add_common(grid, o);
  add_prior_set_options(grid, o);
  grid->add_option("--resolution", o.resolution, "points per axis")->check(CLI::PositiveNumber);
  grid->add_option("--runner", o.runner, "oracle, fresh-mcmc or reuse-weights")
      ->check(CLI::IsMember({"oracle", "fresh-mcmc", "reuse-weights"}));
  grid->add_flag("--emit-ess", o.emit_ess, "add ESS columns (reuse-weights runner)");
  grid->add_option("--start", o.start, "chain hyperparameters for reuse-weights MU0 TAU0")->expected(2);

  auto* oracle = app.add_subcommand("oracle", "quadrature posterior mean of mu at one hyperparameter point");
  add_common(oracle, o);
  oracle->add_option("--at", o.at, "hyperparameters MU0 TAU0")->expected(2);
  oracle->add_option("--nodes", o.nodes, "initial nodes per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputFailure;
  }

  try {
    const RunConfig c = resolve(o);
    if (simulate->parsed()) return cmd_simulate(c);
    if (elicit->parsed()) return cmd_elicit(c);
    if (bound->parsed()) return cmd_bound(c);
    if (grid->parsed()) return cmd_grid(c);
    return cmd_oracle(c);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputFailure;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputFailure;
  }
}
