#include "riis/isampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riis/error.hpp"
#include "riis/format.hpp"

namespace riis {

namespace {

// exp(log w - max log w); throws if every weight is zero.
std::vector<double> shifted_weights(const WeightedSample& ws) {
  if (ws.log_weights.empty()) throw EmptyOverlapError("weighted sample is empty");
  const double top = *std::max_element(ws.log_weights.begin(), ws.log_weights.end());
  if (top == kLogZero || !std::isfinite(top))
    throw EmptyOverlapError("all importance weights are zero: target shares no support with the draws");
  std::vector<double> w(ws.log_weights.size());
  std::transform(ws.log_weights.begin(), ws.log_weights.end(), w.begin(),
                 [top](double lw) { return lw == kLogZero ? 0.0 : std::exp(lw - top); });
  return w;
}

void check_aligned(const WeightedSample& ws, std::span<const double> f_values) {
  if (f_values.size() != ws.log_weights.size())
    throw InputError("f_values length " + std::to_string(f_values.size()) + " does not match " +
                     std::to_string(ws.log_weights.size()) + " draws");
}

}  // namespace

// The likelihood and the k prior cancel in the ratio, so the data are not read.
WeightedSample importance_log_weights(const Chain& chain, const Hyperparameters& target, const Dataset& /*d*/,
                                      const ModelConstants& c) {
  if (chain.draws.empty()) throw InputError("importance_log_weights: chain is empty");
  c.validate();
  target.validate(c);
  const auto& proposal = chain.hyperparameters_used;
  WeightedSample ws;
  ws.chain = &chain;
  ws.target = target;
  ws.log_weights.resize(chain.size());
  const double log_ratio = std::log(proposal.tau0 - c.tau_l) - std::log(target.tau0 - c.tau_l);
  const double shift = target.mu0 - proposal.mu0;
  std::size_t uncovered = 0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto& x = chain.draws[i];
    if (!(x.tau_mu < target.tau0)) {
      ws.log_weights[i] = kLogZero;
      ++uncovered;
      continue;
    }
    // log N(mu; mu0_t, tau^2) - log N(mu; mu0_p, tau^2)
    //   = [(mu - mu0_p)^2 - (mu - mu0_t)^2] / (2 tau^2)
    //   = (mu0_t - mu0_p)(2 mu - mu0_t - mu0_p) / (2 tau^2)
    ws.log_weights[i] = shift * (2.0 * x.mu - target.mu0 - proposal.mu0) / (2.0 * x.tau_mu * x.tau_mu) + log_ratio;
  }
  ws.uncovered_fraction = static_cast<double>(uncovered) / static_cast<double>(chain.size());
  if (target.tau0 > proposal.tau0) {
    ws.warning = "support deficiency: target tau0 " + fmt_double(target.tau0) + " exceeds proposal tau0 " +
                 fmt_double(proposal.tau0) + "; tau_mu in (" + fmt_double(proposal.tau0) + ", " +
                 fmt_double(target.tau0) + ") is never sampled";
  }
  if (uncovered == chain.size())
    throw EmptyOverlapError("all draws have tau_mu >= target tau0 = " + fmt_double(target.tau0));
  return ws;
}

std::vector<double> importance_log_weights_full(const Chain& chain, const Hyperparameters& target,
                                                const Dataset& d, const ModelConstants& c) {
  std::vector<double> out(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const double num = log_unnormalized_posterior(chain.draws[i], target, d, c);
    out[i] = num == kLogZero ? kLogZero
                             : num - log_unnormalized_posterior(chain.draws[i], chain.hyperparameters_used, d, c);
  }
  return out;
}

double self_normalized_estimate(const WeightedSample& ws, std::span<const double> f_values) {
  check_aligned(ws, f_values);
  const auto w = shifted_weights(ws);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    num += w[i] * f_values[i];
    den += w[i];
  }
  return num / den;
}

double ess_is(const WeightedSample& ws) {
  const auto w = shifted_weights(ws);
  double s1 = 0.0, s2 = 0.0;
  for (double v : w) {
    s1 += v;
    s2 += v * v;
  }
  return s1 * s1 / s2;
}

std::vector<double> g_tilde_series(const WeightedSample& ws, std::span<const double> f_values) {
  const double est = self_normalized_estimate(ws, f_values);
  const auto w = shifted_weights(ws);
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) g[i] = w[i] == 0.0 ? 0.0 : (f_values[i] - est) * w[i];
  return g;
}

CombinedEss combined_ess(const WeightedSample& ws, std::span<const double> f_values) {
  const char* degenerate =
      "combined ESS undefined: the g~ series is constant (f is constant under the weights); "
      "the self-normalized estimate is exact in that case";
  double f_lo = std::numeric_limits<double>::infinity();
  double f_hi = -f_lo;
  for (std::size_t i = 0; i < f_values.size() && i < ws.log_weights.size(); ++i) {
    if (ws.log_weights[i] == kLogZero) continue;
    f_lo = std::min(f_lo, f_values[i]);
    f_hi = std::max(f_hi, f_values[i]);
  }
  if (f_hi - f_lo <= 1e-14 * std::max(std::abs(f_lo), std::abs(f_hi))) throw DegenerateSeriesError(degenerate);
  const auto g = g_tilde_series(ws, f_values);
  CombinedEss out;
  out.ess_is = ess_is(ws);
  try {
    out.ess_mcmc_gtilde = ess_mcmc(g);
  } catch (const DegenerateSeriesError&) {
    throw DegenerateSeriesError(degenerate);
  }
  const double n = static_cast<double>(g.size());
  out.ess = std::min(out.ess_mcmc_gtilde / n, 1.0) * out.ess_is;
  return out;
}

double weighted_variance(const WeightedSample& ws, std::span<const double> f_values) {
  const double est = self_normalized_estimate(ws, f_values);
  const auto w = shifted_weights(ws);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double r = f_values[i] - est;
    num += w[i] * r * r;
    den += w[i];
  }
  return num / den;
}

std::string format_weights_csv(const WeightedSample& ws, std::span<const double> f_values) {
  const auto g = g_tilde_series(ws, f_values);
  std::string out = "draw_index,log_weight,f_value,g_tilde\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    out += std::to_string(i) + "," + (ws.log_weights[i] == kLogZero ? std::string("-inf") : fmt_double(ws.log_weights[i])) +
           "," + fmt_double(f_values[i]) + "," + fmt_double(g[i]) + "\n";
  }
  return out;
}

}  // namespace riis
