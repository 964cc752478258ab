#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "riis/config.hpp"
#include "riis/error.hpp"
#include "riis/iis.hpp"
#include "riis/isampling.hpp"
#include "riis/mcmc.hpp"
#include "riis/optimize.hpp"
#include "riis/oracle.hpp"
#include "riis/parallel.hpp"
#include "riis/prior_set.hpp"

namespace py = pybind11;
using namespace riis;

namespace {

Dataset make_dataset(const std::vector<double>& effects, const std::vector<double>& std_errors) {
  if (effects.size() != std_errors.size()) throw InputError("effects and std_errors differ in length");
  Dataset d;
  for (std::size_t i = 0; i < effects.size(); ++i)
    d.studies.push_back({effects[i], std_errors[i], std::to_string(i + 1)});
  d.validate();
  return d;
}

py::array_t<double> draws_array(const Chain& ch) {
  py::array_t<double> out({static_cast<py::ssize_t>(ch.size()), static_cast<py::ssize_t>(3)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < ch.size(); ++i) {
    m(i, 0) = ch.draws[i].mu;
    m(i, 1) = ch.draws[i].tau_mu;
    m(i, 2) = ch.draws[i].k;
  }
  return out;
}

std::vector<double> as_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

MCMCConfig mcmc_config(std::size_t draws, std::size_t burn_in, std::uint64_t seed) {
  MCMCConfig mc;
  mc.max_draws = draws;
  mc.batch_size = std::min(mc.batch_size, draws);
  mc.burn_in = burn_in;
  mc.seed = seed;
  return mc;
}

py::dict report_dict(const IISReport& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict d;
    d["iteration"] = row.iteration;
    d["draws"] = row.draws;
    d["t_star"] = py::make_tuple(row.t_star.mu0, row.t_star.tau0);
    d["ess"] = row.ess;
    d["ess_mcmc"] = row.ess_mcmc;
    d["ess_is"] = row.ess_is;
    d["estimate"] = row.estimate;
    d["std_error"] = row.std_error;
    d["warnings"] = row.warnings;
    rows.append(d);
  }
  py::dict out;
  out["bound"] = r.bound;
  out["t_star"] = py::make_tuple(r.t_star.mu0, r.t_star.tau0);
  out["converged"] = r.converged;
  out["iterations"] = r.iterations;
  out["rows"] = rows;
  out["csv"] = format_report_csv(r);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust Bayesian bounds by iterative importance sampling over MCMC draws";
  m.attr("__version__") = version();

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("effects"), py::arg("std_errors"))
      .def_static("from_csv", [](const std::string& path, bool negate) { return read_dataset_csv(path, negate); },
                  py::arg("path"), py::arg("negate_effects") = false)
      .def_static("simulate", [](std::size_t n, std::uint64_t seed) {
        SimulateSpec s;
        s.n_studies = n;
        return simulate_dataset(s, seed);
      }, py::arg("n_studies") = 75, py::arg("seed") = 1)
      .def("__len__", &Dataset::size)
      .def_property_readonly("effects", [](const Dataset& d) {
        std::vector<double> v;
        for (const auto& s : d.studies) v.push_back(s.effect);
        return v;
      })
      .def_property_readonly("std_errors", [](const Dataset& d) {
        std::vector<double> v;
        for (const auto& s : d.studies) v.push_back(s.std_error);
        return v;
      })
      .def("to_csv", &format_dataset_csv);

  py::class_<PriorSet>(m, "PriorSet")
      .def_static("box", &PriorSet::box, py::arg("mu0_lo"), py::arg("mu0_hi"), py::arg("tau0_lo"), py::arg("tau0_hi"))
      .def_static("from_json", [](const std::string& s) { return nlohmann::json::parse(s).get<PriorSet>(); })
      .def("to_json", [](const PriorSet& ps) { return nlohmann::json(ps).dump(); })
      .def("contains", [](const PriorSet& ps, double mu0, double tau0) { return ps.contains({mu0, tau0}); })
      .def_readwrite("mu0_lo", &PriorSet::mu0_lo)
      .def_readwrite("mu0_hi", &PriorSet::mu0_hi)
      .def_readwrite("tau0_lo", &PriorSet::tau0_lo)
      .def_readwrite("tau0_hi", &PriorSet::tau0_hi)
      .def_readwrite("alpha", &PriorSet::alpha)
      .def_readwrite("beta", &PriorSet::beta)
      .def_readwrite("gamma", &PriorSet::gamma)
      .def_readwrite("margin", &PriorSet::margin);

  m.def("set_max_threads", &set_max_threads, py::arg("n"));

  m.def("posterior_mean_mu", [](const Dataset& d, double mu0, double tau0) {
    const auto r = posterior_mean_mu({mu0, tau0}, d, {});
    py::dict out;
    out["mean"] = r.mean;
    out["nodes_per_axis"] = r.nodes_per_axis;
    out["convergence_delta"] = r.convergence_delta;
    return out;
  }, py::arg("data"), py::arg("mu0"), py::arg("tau0"), "Quadrature posterior mean of mu.");

  m.def("lemma_integrals", [](double a, double b, double c) {
    const ABCCoefficients q{a, b, c};
    return py::make_tuple(lemma1_integral(q), lemma2_integral(q));
  }, py::arg("a"), py::arg("b"), py::arg("c"));

  m.def("run_chain", [](const Dataset& d, double mu0, double tau0, std::size_t draws, std::size_t burn_in,
                        std::uint64_t seed) {
    return draws_array(run_chain({mu0, tau0}, d, {}, mcmc_config(draws, burn_in, seed)));
  }, py::arg("data"), py::arg("mu0"), py::arg("tau0"), py::arg("draws") = 20000, py::arg("burn_in") = 2000,
        py::arg("seed") = 1, "Metropolis draws as an (N, 3) array of (mu, tau_mu, k).");

  m.def("ess_mcmc", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
    return ess_mcmc(as_vector(x));
  }, py::arg("series"));

  m.def("reweight", [](const Dataset& d, double mu0_p, double tau0_p, double mu0_t, double tau0_t,
                       std::size_t draws, std::uint64_t seed) {
    const auto chain = run_chain({mu0_p, tau0_p}, d, {}, mcmc_config(draws, 2000, seed));
    const auto mu = chain.mu_series();
    const auto ws = importance_log_weights(chain, {mu0_t, tau0_t}, d, {});
    const auto ce = combined_ess(ws, mu);
    py::dict out;
    out["estimate"] = self_normalized_estimate(ws, mu);
    out["ess"] = ce.ess;
    out["ess_is"] = ce.ess_is;
    out["ess_mcmc"] = ce.ess_mcmc_gtilde;
    out["log_weights"] = ws.log_weights;
    return out;
  }, py::arg("data"), py::arg("mu0_proposal"), py::arg("tau0_proposal"), py::arg("mu0_target"),
        py::arg("tau0_target"), py::arg("draws") = 20000, py::arg("seed") = 1,
        "Estimate E(mu) at the target from a chain run at the proposal.");

  m.def("build_prior_set", [](double low, double high, std::size_t mu0_steps, std::size_t tau0_steps,
                              std::size_t samples, std::uint64_t seed) {
    ElicitationSpec s;
    s.low = low;
    s.high = high;
    s.mu0_steps = mu0_steps;
    s.tau0_steps = tau0_steps;
    s.mc_samples_per_cell = samples;
    s.seed = seed;
    return build_prior_set(s, {}).set;
  }, py::arg("low") = -20.0, py::arg("high") = 80.0, py::arg("mu0_steps") = 200, py::arg("tau0_steps") = 200,
        py::arg("samples_per_cell") = 10000, py::arg("seed") = 1);

  m.def("bound", [](const PriorSet& ps, const Dataset& d, const std::string& direction, std::size_t ess_target,
                    std::size_t max_iterations, std::uint64_t seed) {
    IISConfig cfg;
    cfg.ess_target = ess_target;
    cfg.max_outer_iterations = max_iterations;
    if (direction != "lower" && direction != "upper") throw InputError("direction must be lower or upper");
    cfg.direction = direction == "upper" ? Direction::kUpper : Direction::kLower;
    cfg.mcmc.seed = component_seed(seed, SeedStream::kMcmc);
    cfg.annealing.seed = component_seed(seed, SeedStream::kAnnealing);
    return report_dict(iterate_bound(ps, default_start(ps), d, {}, cfg));
  }, py::arg("prior_set"), py::arg("data"), py::arg("direction") = "lower", py::arg("ess_target") = 5000,
        py::arg("max_iterations") = 10000, py::arg("seed") = 1);

  m.def("grid_bound", [](const PriorSet& ps, const Dataset& d, std::size_t resolution, const std::string& direction) {
    GridRunnerOptions o;
    if (direction != "lower" && direction != "upper") throw InputError("direction must be lower or upper");
    o.direction = direction == "upper" ? Direction::kUpper : Direction::kLower;
    const auto r = grid_minimize(ps, resolution, d, {}, o);
    return py::make_tuple(sign_of(o.direction) * r.best.value, py::make_tuple(r.best.argmin.mu0, r.best.argmin.tau0));
  }, py::arg("prior_set"), py::arg("data"), py::arg("resolution") = 25, py::arg("direction") = "lower",
        "Oracle grid search; returns (bound, (mu0, tau0)).");
}
