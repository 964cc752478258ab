#include "riis/iis.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "riis/error.hpp"
#include "riis/format.hpp"
#include "riis/isampling.hpp"

namespace riis {

void IISConfig::validate() const {
  if (ess_target < 100) throw InputError("ess_target must be >= 100");
  if (!(mcmc_ess_margin >= 0.0)) throw InputError("mcmc_ess_margin must be >= 0");
  if (max_outer_iterations == 0) throw InputError("max_outer_iterations must be >= 1");
  mcmc.validate();
  annealing.validate();
}

Hyperparameters default_start(const PriorSet& ps) {
  return project(ps, {0.5 * (ps.mu0_lo + ps.mu0_hi), 0.5 * (ps.tau0_lo + ps.tau0_hi)});
}

PosteriorSummary posterior_summary(const Chain& chain) {
  const auto mu = chain.mu_series();
  PosteriorSummary s;
  s.draws = mu.size();
  const double n = static_cast<double>(mu.size());
  s.mean = std::accumulate(mu.begin(), mu.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : mu) ss += (v - s.mean) * (v - s.mean);
  s.ess = ess_mcmc(mu);
  s.std_error = std::sqrt(ss / n / s.ess);
  return s;
}

PosteriorSummary flat_prior_reference(const Dataset& d, const ModelConstants& c, const MCMCConfig& cfg) {
  return posterior_summary(run_chain({0.0, 1000.0}, d, c, cfg));
}

IISReport iterate_bound(const PriorSet& ps, const Hyperparameters& t0, const Dataset& d, const ModelConstants& c,
                        const IISConfig& cfg, const DrawFunction& f) {
  d.validate();
  c.validate();
  cfg.validate();
  ps.validate(c);
  if (!ps.contains(t0))
    throw InputError("starting hyperparameters (" + fmt_double(t0.mu0) + ", " + fmt_double(t0.tau0) +
                     ") are outside the prior set");
  const DrawFunction fx = f ? f : DrawFunction([](const ParameterState& x) { return x.mu; });
  const double sign = sign_of(cfg.direction);
  const double chain_ess_needed = (1.0 + cfg.mcmc_ess_margin) * static_cast<double>(cfg.ess_target);

  IISReport report;
  report.t0 = t0;
  Hyperparameters t = t0;
  for (std::size_t iter = 1; iter <= cfg.max_outer_iterations; ++iter) {
    const auto started = std::chrono::steady_clock::now();
    IISRow row;
    row.iteration = iter;
    row.t_current = t;

    MCMCConfig mc = cfg.mcmc;
    mc.seed = mix_seed(cfg.mcmc.seed, iter);
    // extend until the ESS of the mu series clears the margin
    double chain_ess = 0.0;
    const auto chain = run_chain_until(t, d, c, mc, [&](const Chain& ch) {
      chain_ess = ess_mcmc(ch.mu_series());
      return chain_ess >= chain_ess_needed;
    });
    row.draws = chain.size();
    row.chain_ess_mu = chain_ess;
    row.draw_budget_exhausted = chain_ess < chain_ess_needed;
    if (row.draw_budget_exhausted)
      row.warnings.push_back("draw budget " + std::to_string(mc.max_draws) + " reached with chain ESS " +
                             fmt_fixed(chain_ess, 1));
    std::vector<double> fv(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) fv[i] = sign * fx(chain.draws[i]);

    // minimize the reweighted estimate
    AnnealingConfig ac = cfg.annealing;
    ac.seed = mix_seed(cfg.annealing.seed, iter);
    const auto opt = anneal_minimize(ps, chain, fv, d, c, ac);
    row.t_star = opt.argmin;

    // combined ESS at the minimizer
    const auto ws = importance_log_weights(chain, opt.argmin, d, c);
    if (ws.warning) row.warnings.push_back(*ws.warning);
    const double est = self_normalized_estimate(ws, fv);
    row.estimate = sign * est;
    bool degenerate = false;
    try {
      const auto ce = combined_ess(ws, fv);
      row.ess = ce.ess;
      row.ess_is = ce.ess_is;
      row.ess_mcmc = ce.ess_mcmc_gtilde;
      row.std_error = std::sqrt(weighted_variance(ws, fv) / ce.ess);
    } catch (const DegenerateSeriesError& e) {
      degenerate = true;
      row.ess_is = ess_is(ws);
      row.warnings.push_back(e.what());
    }
    if (cfg.record_time)
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    report.rows.push_back(row);

    report.bound = row.estimate;
    report.t_star = row.t_star;
    report.iterations = iter;
    if (degenerate) {
      report.stop_reason = StopReason::kDegenerate;
      report.note = "f is constant under the weights; the estimate is exact and ESS is undefined";
      return report;
    }
    if (row.ess > static_cast<double>(cfg.ess_target)) {
      report.converged = true;
      report.stop_reason = StopReason::kConverged;
      return report;
    }
    // restart the chain at the minimizer
    t = opt.argmin;
  }
  report.stop_reason = StopReason::kIterationCap;
  return report;
}

IISReport iterate_lower_bound(const PriorSet& ps, const Hyperparameters& t0, const Dataset& d,
                              const ModelConstants& c, IISConfig cfg, const DrawFunction& f) {
  cfg.direction = Direction::kLower;
  return iterate_bound(ps, t0, d, c, cfg, f);
}

std::string format_report_csv(const IISReport& report) {
  std::string out = "iteration,draws,mu0_star,tau0_star,ess,ess_mcmc,ess_is,estimate,seconds\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.iteration) + "," + std::to_string(r.draws) + "," + fmt_double(r.t_star.mu0) + "," +
           fmt_double(r.t_star.tau0) + "," + fmt_double(r.ess) + "," + fmt_double(r.ess_mcmc) + "," +
           fmt_double(r.ess_is) + "," + fmt_double(r.estimate) + "," + fmt_double(r.seconds) + "\n";
  }
  return out;
}

std::string format_report_table(const IISReport& report) {
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::string out;
  out += pad("iter", 5) + pad("draws", 9) + pad("mu0*", 10) + pad("tau0*", 9) + pad("ESS", 10) + pad("ESS_MCMC", 10) +
         pad("ESS_IS", 10) + pad("estimate", 11) + pad("seconds", 9) + "\n";
  out += pad("0", 5) + pad("--", 9) + pad(fmt_fixed(report.t0.mu0, 3), 10) + pad(fmt_fixed(report.t0.tau0, 3), 9) +
         pad("--", 10) + pad("--", 10) + pad("--", 10) + pad("--", 11) + pad("--", 9) + "\n";
  for (const auto& r : report.rows) {
    out += pad(std::to_string(r.iteration), 5) + pad(std::to_string(r.draws), 9) + pad(fmt_fixed(r.t_star.mu0, 3), 10) +
           pad(fmt_fixed(r.t_star.tau0, 3), 9) + pad(fmt_fixed(r.ess, 0), 10) + pad(fmt_fixed(r.ess_mcmc, 0), 10) +
           pad(fmt_fixed(r.ess_is, 0), 10) + pad(fmt_fixed(r.estimate, 3), 11) + pad(fmt_fixed(r.seconds, 2), 9) +
           "\n";
  }
  const char* reason = report.stop_reason == StopReason::kConverged    ? "converged"
                       : report.stop_reason == StopReason::kDegenerate ? "degenerate (constant f)"
                                                                       : "iteration cap reached";
  out += "bound " + fmt_fixed(report.bound, 4) + " at (" + fmt_fixed(report.t_star.mu0, 4) + ", " +
         fmt_fixed(report.t_star.tau0, 4) + "), " + reason + " after " + std::to_string(report.iterations) +
         " iteration(s)\n";
  return out;
}

}  // namespace riis
