#include "riis/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "riis/error.hpp"
#include "riis/format.hpp"

namespace riis {

namespace {

constexpr double kConvergedTol = 1e-6;
constexpr double kAccuracyTol = 1e-3;

void check_a(const ABCCoefficients& coef) {
  if (!(coef.a > 0.0) || !std::isfinite(coef.a)) throw InputError("quadratic coefficient a must be > 0");
}

}  // namespace

GaussLegendre gauss_legendre(std::size_t n) {
  if (n == 0) throw InputError("gauss_legendre: n must be >= 1");
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // three-term recurrence for P_n(x) and P_{n-1}(x)
      double p0 = 1.0, p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const double jj = static_cast<double>(j);
        const double p2 = ((2.0 * jj - 1.0) * x * p1 - (jj - 1.0) * p0) / jj;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = static_cast<double>(n) * (x * pn - pnm1) / (x * x - 1.0);
      const double step = pn / dp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (std::size_t j = 2; j <= n; ++j) {
      const double jj = static_cast<double>(j);
      const double p2 = ((2.0 * jj - 1.0) * x * p1 - (jj - 1.0) * p0) / jj;
      p0 = p1;
      p1 = p2;
    }
    const double pn = n == 1 ? x : p1;
    const double pnm1 = n == 1 ? 1.0 : p0;
    dp = static_cast<double>(n) * (x * pn - pnm1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

void QuadratureSpec::validate() const {
  if (nodes_per_axis < 8) throw InputError("quadrature needs at least 8 nodes per axis");
  if (max_nodes_per_axis < nodes_per_axis) throw InputError("max_nodes_per_axis must be >= nodes_per_axis");
}

ABCCoefficients abc_coefficients(double tau_mu, double k, const Hyperparameters& t, const Dataset& d) {
  if (!(tau_mu > 0.0) || !(k > 0.0)) throw InputError("abc_coefficients: tau_mu and k must be > 0");
  const double between = k * k * tau_mu * tau_mu;
  const double prior_precision = 1.0 / (tau_mu * tau_mu);
  ABCCoefficients coef{prior_precision, t.mu0 * prior_precision, t.mu0 * t.mu0 * prior_precision};
  for (const auto& s : d.studies) {
    const double p = 1.0 / (s.std_error * s.std_error + between);
    coef.a += p;
    coef.b += s.effect * p;
    coef.c += s.effect * s.effect * p;
  }
  return coef;
}

double log_lemma1_integral(const ABCCoefficients& coef) {
  check_a(coef);
  return 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(coef.a) - 0.5 * (coef.c - coef.b * coef.b / coef.a);
}

double lemma1_integral(const ABCCoefficients& coef) { return std::exp(log_lemma1_integral(coef)); }

double lemma2_integral(const ABCCoefficients& coef) {
  check_a(coef);
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(coef.a, -1.5) * coef.b *
         std::exp(-0.5 * (coef.c - coef.b * coef.b / coef.a));
}

OracleResult posterior_mean_mu_fixed(const Hyperparameters& t, const Dataset& d, const ModelConstants& c,
                                     std::size_t nodes_per_axis) {
  d.validate();
  c.validate();
  t.validate(c);
  const auto rule = gauss_legendre(nodes_per_axis);
  const std::size_t n = nodes_per_axis;

  // tau_mu = exp(u), u in (log tau_l, log tau0); dtau = tau du cancels the 1/tau_mu factor.
  const double u_lo = std::log(c.tau_l), u_hi = std::log(t.tau0);
  const double u_half = 0.5 * (u_hi - u_lo), u_mid = 0.5 * (u_hi + u_lo);
  const double k_half = 0.5 * (c.k_u - c.k_l), k_mid = 0.5 * (c.k_u + c.k_l);

  std::vector<double> log_terms(n * n);
  std::vector<double> cond_means(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = std::exp(u_mid + u_half * rule.nodes[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const double k = k_mid + k_half * rule.nodes[j];
      const double between = k * k * tau * tau;
      const double prior_precision = 1.0 / (tau * tau);
      double a = prior_precision, b = t.mu0 * prior_precision, log_det = 0.0;
      for (const auto& s : d.studies) {
        const double v = s.std_error * s.std_error + between;
        a += 1.0 / v;
        b += s.effect / v;
        log_det += std::log(v);
      }
      const double m = b / a;
      // c - b^2/a written as the residual sum of squares at the conditional mean
      double resid = (t.mu0 - m) * (t.mu0 - m) * prior_precision;
      for (const auto& s : d.studies) {
        const double r = s.effect - m;
        resid += r * r / (s.std_error * s.std_error + between);
      }
      const double log_inner = 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(a) - 0.5 * resid;
      log_terms[i * n + j] = std::log(rule.weights[i] * u_half * rule.weights[j] * k_half) - 0.5 * log_det + log_inner;
      cond_means[i * n + j] = m;
    }
  }
  const double shift = *std::max_element(log_terms.begin(), log_terms.end());
  double num = 0.0, den = 0.0;
  for (std::size_t idx = 0; idx < log_terms.size(); ++idx) {
    const double w = std::exp(log_terms[idx] - shift);
    num += w * cond_means[idx];
    den += w;
  }
  if (!(den > 0.0) || !std::isfinite(num)) throw NumericalError("posterior_mean_mu: quadrature sum degenerate");
  OracleResult res;
  res.mean = num / den;
  res.log_normalization = shift + std::log(den);
  res.nodes_per_axis = n;
  return res;
}

OracleResult posterior_mean_mu(const Hyperparameters& t, const Dataset& d, const ModelConstants& c,
                               const QuadratureSpec& spec) {
  spec.validate();
  auto coarse = posterior_mean_mu_fixed(t, d, c, spec.nodes_per_axis);
  for (;;) {
    auto fine = posterior_mean_mu_fixed(t, d, c, coarse.nodes_per_axis * 2);
    fine.convergence_delta = std::abs(fine.mean - coarse.mean) / std::max(std::abs(fine.mean), 1.0);
    if (fine.convergence_delta < kConvergedTol || fine.nodes_per_axis * 2 > spec.max_nodes_per_axis) {
      if (fine.convergence_delta > kAccuracyTol)
        throw AccuracyError("posterior_mean_mu: quadrature not converged at " + std::to_string(fine.nodes_per_axis) +
                            " nodes per axis (delta " + fmt_double(fine.convergence_delta) + ")");
      if (fine.convergence_delta >= kConvergedTol)
        fine.warning = "quadrature delta " + fmt_double(fine.convergence_delta) + " above 1e-6";
      return fine;
    }
    coarse = std::move(fine);
  }
}

}  // namespace riis
