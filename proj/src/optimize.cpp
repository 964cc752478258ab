#include "riis/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riis/error.hpp"
#include "riis/format.hpp"
#include "riis/isampling.hpp"
#include "riis/parallel.hpp"

namespace riis {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& fn, const Hyperparameters& t) {
  try {
    const double v = fn(t);
    return std::isfinite(v) ? v : kInf;
  } catch (const EmptyOverlapError&) {
    return kInf;
  }
}

double axis_value(double lo, double hi, std::size_t steps, std::size_t i) {
  if (steps == 1) return 0.5 * (lo + hi);
  if (i + 1 == steps) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

}  // namespace

void AnnealingConfig::validate() const {
  if (!(cooling_factor > 0.0 && cooling_factor < 1.0)) throw InputError("cooling_factor must be in (0,1)");
  if (!(min_temperature_ratio > 0.0 && min_temperature_ratio < 1.0))
    throw InputError("min_temperature_ratio must be in (0,1)");
  if (steps_per_temperature == 0) throw InputError("steps_per_temperature must be >= 1");
  if (!(proposal_scale > 0.0)) throw InputError("proposal_scale must be > 0");
  if (!(initial_temperature >= 0.0) || !std::isfinite(initial_temperature))
    throw InputError("initial_temperature must be finite and >= 0");
}

double objective(const Hyperparameters& t, const Chain& chain, std::span<const double> f_values, const Dataset& d,
                 const ModelConstants& c) {
  const auto ws = importance_log_weights(chain, t, d, c);
  return self_normalized_estimate(ws, f_values);
}

OptimizationResult anneal_minimize(const PriorSet& ps, const Hyperparameters& start, const Objective& fn,
                                   const AnnealingConfig& cfg, bool record_trace) {
  cfg.validate();
  OptimizationResult res;
  Rng rng(cfg.seed);
  auto eval = [&](const Hyperparameters& t) {
    ++res.evaluations;
    return safe_eval(fn, t);
  };

  Hyperparameters cur = project(ps, start);
  double f_cur = eval(cur);
  Hyperparameters best = cur;
  double f_best = f_cur;

  const double wm = ps.mu0_width(), wt = ps.tau0_width();
  if (wm <= 0.0 && wt <= 0.0) {
    res.argmin = cur;
    res.value = f_cur;
    return res;
  }

  double t0 = cfg.initial_temperature;
  if (t0 <= 0.0) {
    double lo = std::isfinite(f_cur) ? f_cur : kInf, hi = std::isfinite(f_cur) ? f_cur : -kInf;
    for (std::size_t i = 0; i < cfg.probe_count; ++i) {
      const auto p = sample_feasible(ps, rng);
      const double v = eval(p);
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      if (v < f_best) {
        f_best = v;
        best = p;
      }
    }
    t0 = (std::isfinite(lo) && hi > lo) ? hi - lo : 1e-3 * std::max(1.0, std::isfinite(lo) ? std::abs(lo) : 1.0);
  }
  const double t_min = cfg.min_temperature_ratio * t0;

  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t feasible_total = 0, step = 0;
  for (double temp = t0; temp >= t_min; temp *= cfg.cooling_factor) {
    const double scale = cfg.proposal_scale * std::sqrt(temp / t0);
    for (std::size_t s = 0; s < cfg.steps_per_temperature; ++s, ++step) {
      Hyperparameters prop{cur.mu0 + (wm > 0.0 ? scale * wm * normal(rng) : 0.0),
                           cur.tau0 + (wt > 0.0 ? scale * wt * normal(rng) : 0.0)};
      if (!ps.contains(prop)) continue;
      ++feasible_total;
      const double f_prop = eval(prop);
      bool accept = false;
      if (std::isfinite(f_prop)) {
        accept = f_prop <= f_cur || unif(rng) < std::exp(-(f_prop - f_cur) / temp);
      }
      if (record_trace) res.trace.push_back({step, temp, prop, f_prop, accept});
      if (!accept) continue;
      cur = prop;
      f_cur = f_prop;
      ++res.accepted_moves;
      if (f_cur < f_best) {
        f_best = f_cur;
        best = cur;
      }
    }
  }
  if (feasible_total == 0)
    throw StuckError("annealing produced no feasible proposal over the full ladder (start mu0=" + fmt_double(cur.mu0) +
                     ", tau0=" + fmt_double(cur.tau0) + ", proposal_scale=" + fmt_double(cfg.proposal_scale) + ")");

  if (cfg.polish && std::isfinite(f_best)) {
    // compass search on the deterministic objective
    double hm = 0.01 * wm, ht = 0.01 * wt;
    while (hm > 1e-9 * wm || ht > 1e-9 * wt) {
      bool improved = false;
      const Hyperparameters dirs[4] = {{best.mu0 + hm, best.tau0},
                                       {best.mu0 - hm, best.tau0},
                                       {best.mu0, best.tau0 + ht},
                                       {best.mu0, best.tau0 - ht}};
      for (const auto& cand : dirs) {
        if (cand == best || !ps.contains(cand)) continue;
        const double v = eval(cand);
        if (v < f_best) {
          f_best = v;
          best = cand;
          improved = true;
        }
      }
      if (!improved) {
        hm *= 0.5;
        ht *= 0.5;
      }
    }
  }

  res.argmin = best;
  res.value = safe_eval(fn, best);
  ++res.evaluations;
  return res;
}

OptimizationResult anneal_minimize(const PriorSet& ps, const Chain& chain, std::span<const double> f_values,
                                   const Dataset& d, const ModelConstants& c, const AnnealingConfig& cfg,
                                   bool record_trace) {
  const Objective fn = [&](const Hyperparameters& t) { return objective(t, chain, f_values, d, c); };
  return anneal_minimize(ps, chain.hyperparameters_used, fn, cfg, record_trace);
}

GridResult grid_minimize(const PriorSet& ps, std::size_t resolution, const Objective& fn) {
  if (resolution == 0) throw InputError("grid resolution must be >= 1");
  GridResult out;
  for (std::size_t i = 0; i < resolution; ++i)
    for (std::size_t j = 0; j < resolution; ++j) {
      const Hyperparameters t{axis_value(ps.mu0_lo, ps.mu0_hi, resolution, i),
                              axis_value(ps.tau0_lo, ps.tau0_hi, resolution, j)};
      if (ps.contains(t)) out.points.push_back({t, 0.0, {}, {}, {}});
    }
  if (out.points.empty()) throw InputError("no feasible grid points at resolution " + std::to_string(resolution));
  parallel_for(out.points.size(), [&](std::size_t i) { out.points[i].value = safe_eval(fn, out.points[i].t); });
  std::size_t best = out.points.size();
  for (std::size_t i = 0; i < out.points.size(); ++i)
    if (std::isfinite(out.points[i].value) && (best == out.points.size() || out.points[i].value < out.points[best].value))
      best = i;
  if (best == out.points.size()) throw EmptyOverlapError("objective undefined at every feasible grid point");
  out.best.argmin = out.points[best].t;
  out.best.value = out.points[best].value;
  out.best.evaluations = out.points.size();
  return out;
}

GridResult grid_minimize(const PriorSet& ps, std::size_t resolution, const Dataset& d, const ModelConstants& c,
                         const GridRunnerOptions& opts) {
  const double sign = sign_of(opts.direction);
  switch (opts.runner) {
    case GridRunner::kOracle: {
      return grid_minimize(ps, resolution, [&](const Hyperparameters& t) {
        return sign * posterior_mean_mu(t, d, c, opts.quadrature).mean;
      });
    }
    case GridRunner::kFreshMcmc: {
      // per-point seeds keyed by the point's position in the feasible list
      std::vector<Hyperparameters> order;
      auto seed_of = [&](const Hyperparameters& t) {
        const auto it = std::find(order.begin(), order.end(), t);
        return mix_seed(opts.mcmc.seed, static_cast<std::uint64_t>(it - order.begin()));
      };
      for (std::size_t i = 0; i < resolution; ++i)
        for (std::size_t j = 0; j < resolution; ++j) {
          const Hyperparameters t{axis_value(ps.mu0_lo, ps.mu0_hi, resolution, i),
                                  axis_value(ps.tau0_lo, ps.tau0_hi, resolution, j)};
          if (ps.contains(t)) order.push_back(t);
        }
      return grid_minimize(ps, resolution, [&](const Hyperparameters& t) {
        MCMCConfig cfg = opts.mcmc;
        cfg.seed = seed_of(t);
        const auto chain = run_chain(t, d, c, cfg);
        const auto mu = chain.mu_series();
        double acc = 0.0;
        for (double v : mu) acc += v;
        return sign * acc / static_cast<double>(mu.size());
      });
    }
    case GridRunner::kReuseWeights: {
      if (opts.chain == nullptr) throw InputError("reuse-weights grid runner needs a chain");
      const Chain& chain = *opts.chain;
      std::vector<double> f(chain.size());
      for (std::size_t i = 0; i < chain.size(); ++i) f[i] = sign * chain.draws[i].mu;
      auto res = grid_minimize(ps, resolution, [&](const Hyperparameters& t) { return objective(t, chain, f, d, c); });
      if (opts.emit_ess) {
        parallel_for(res.points.size(), [&](std::size_t i) {
          auto& p = res.points[i];
          try {
            const auto ws = importance_log_weights(chain, p.t, d, c);
            const auto ce = combined_ess(ws, f);
            p.ess = ce.ess;
            p.ess_is = ce.ess_is;
            p.ess_mcmc = ce.ess_mcmc_gtilde;
          } catch (const NumericalError&) {
          }
        });
      }
      return res;
    }
  }
  throw InputError("unknown grid runner");
}

std::string format_trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "step,temperature,mu0,tau0,objective,accepted\n";
  for (const auto& r : trace)
    out += std::to_string(r.step) + "," + fmt_double(r.temperature) + "," + fmt_double(r.t.mu0) + "," +
           fmt_double(r.t.tau0) + "," + fmt_double(r.objective) + "," + (r.accepted ? "1" : "0") + "\n";
  return out;
}

}  // namespace riis
