#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "riis/model.hpp"

namespace riis {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendre gauss_legendre(std::size_t n);

struct QuadratureSpec {
  std::size_t nodes_per_axis = 64;
  /// Refinement stops doubling here even if not yet converged.
  std::size_t max_nodes_per_axis = 1024;

  void validate() const;
};

/// Coefficients of the quadratic form a mu^2 - 2 b mu + c in the exponent of
/// likelihood x N(mu; mu0, tau_mu^2), for fixed (tau_mu, k).
struct ABCCoefficients {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
};

ABCCoefficients abc_coefficients(double tau_mu, double k, const Hyperparameters& t, const Dataset& d);

/// \int exp{-(a x^2 - 2 b x + c)/2} dx
double lemma1_integral(const ABCCoefficients& coef);
/// \int x exp{-(a x^2 - 2 b x + c)/2} dx
double lemma2_integral(const ABCCoefficients& coef);
/// log of lemma1_integral; finite even when the integral itself underflows.
double log_lemma1_integral(const ABCCoefficients& coef);

struct OracleResult {
  double mean = 0.0;
  /// log of \iint W(tau_mu, k) * lemma1 dk dtau_mu, i.e. the normalizing
  /// constant without the 1/(tau0 - tau_l) and 1/(k_u - k_l) prior factors.
  double log_normalization = 0.0;
  std::size_t nodes_per_axis = 0;
  /// |mean(2n) - mean(n)| / max(|mean(2n)|, 1)
  double convergence_delta = 0.0;
  std::optional<std::string> warning;
};

/// Posterior mean of mu at fixed hyperparameters by analytic integration over
/// mu followed by tensor Gauss-Legendre over (log tau_mu, k).
///
/// Starts at spec.nodes_per_axis and doubles until two successive rules agree
/// to 1e-6 (relative, unit floor) or max_nodes_per_axis is reached. The finer
/// of the last two rules is reported. A warning is attached when the final
/// delta is above 1e-6; AccuracyError is thrown when it is above 1e-3.
OracleResult posterior_mean_mu(const Hyperparameters& t, const Dataset& d, const ModelConstants& c,
                               const QuadratureSpec& spec = {});

/// Single evaluation at exactly `nodes_per_axis` nodes, no convergence check.
OracleResult posterior_mean_mu_fixed(const Hyperparameters& t, const Dataset& d, const ModelConstants& c,
                                     std::size_t nodes_per_axis);

}  // namespace riis
