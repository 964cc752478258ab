#include "riis/mcmc.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "riis/error.hpp"
#include "riis/format.hpp"

namespace riis {

namespace {

constexpr std::size_t kMaxLagCap = 10000;
// Series shorter than this use the direct O(N * lag) estimator.
constexpr std::size_t kFftThreshold = 4096;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double to_box(double z, double lo, double hi) { return lo + (hi - lo) * logistic(z); }

double log_jacobian(double z, double lo, double hi) { return std::log(hi - lo) - softplus(-z) - softplus(z); }

void check_series(std::span<const double> series) {
  if (series.size() < 10) throw InputError("autocorrelation needs at least 10 values");
  for (double v : series)
    if (!std::isfinite(v)) throw InputError("autocorrelation: non-finite value in series");
}

// Centered series and its biased variance; throws on constant input.
double center(std::span<const double> series, std::vector<double>& centered) {
  const double n = static_cast<double>(series.size());
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  centered.resize(series.size());
  double c0 = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    centered[i] = series[i] - mean;
    c0 += centered[i] * centered[i];
  }
  c0 /= n;
  const double scale = std::max(std::abs(mean), 1e-300);
  if (!(c0 > 0.0) || std::sqrt(c0) <= 1e-14 * scale)
    throw DegenerateSeriesError("series has zero variance; autocorrelation is undefined");
  return c0;
}

std::mutex fftw_planner_mutex;

// Autocovariance sums sum_i x_i x_{i+k} for k = 0..max_lag via zero-padded FFT.
std::vector<double> lagged_sums_fft(const std::vector<double>& x, std::size_t max_lag) {
  std::size_t m = 1;
  while (m < 2 * x.size()) m <<= 1;
  const std::size_t nc = m / 2 + 1;
  double* in = fftw_alloc_real(m);
  fftw_complex* spec = fftw_alloc_complex(nc);
  fftw_plan fwd, bwd;
  {
    std::lock_guard lock(fftw_planner_mutex);
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(m), in, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(m), spec, in, FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), in);
  std::fill(in + x.size(), in + m, 0.0);
  fftw_execute(fwd);
  for (std::size_t i = 0; i < nc; ++i) {
    spec[i][0] = spec[i][0] * spec[i][0] + spec[i][1] * spec[i][1];
    spec[i][1] = 0.0;
  }
  fftw_execute(bwd);
  std::vector<double> out(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) out[k] = in[k] / static_cast<double>(m);
  {
    std::lock_guard lock(fftw_planner_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(in);
  fftw_free(spec);
  return out;
}

double lagged_sum_direct(const std::vector<double>& x, std::size_t k) {
  double acc = 0.0;
  for (std::size_t i = 0; i + k < x.size(); ++i) acc += x[i] * x[i + k];
  return acc;
}

}  // namespace

void MCMCConfig::validate() const {
  if (burn_in < 500) throw InputError("mcmc burn_in must be >= 500");
  if (batch_size < 1000) throw InputError("mcmc batch_size must be >= 1000");
  if (max_draws < batch_size) throw InputError("mcmc max_draws must be >= batch_size");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("mcmc target_accept must be in (0,1)");
}

std::vector<double> Chain::mu_series() const {
  std::vector<double> out(draws.size());
  std::transform(draws.begin(), draws.end(), out.begin(), [](const ParameterState& x) { return x.mu; });
  return out;
}

MetropolisSampler::MetropolisSampler(const Hyperparameters& t, const Dataset& d, const ModelConstants& c,
                                     const MCMCConfig& cfg)
    : t_(t), d_(d), c_(c), cfg_(cfg), rng_(cfg.seed) {
  d_.validate();
  c_.validate();
  t_.validate(c_);
  cfg_.validate();
  // start at the box midpoints with mu at its conditional posterior mean
  const double tau = 0.5 * (c_.tau_l + t_.tau0);
  const double k = 0.5 * (c_.k_l + c_.k_u);
  double a = 1.0 / (tau * tau), b = t_.mu0 * a;
  for (const auto& s : d_.studies) {
    const double v = s.std_error * s.std_error + k * k * tau * tau;
    a += 1.0 / v;
    b += s.effect / v;
  }
  cur_.z[0] = b / a;
  cur_.z[1] = 0.0;
  cur_.z[2] = 0.0;
  cur_.log_target = log_target(cur_.z);
  chol_[0][0] = 2.38 / std::sqrt(3.0) / std::sqrt(a);
  chol_[1][1] = 0.5;
  chol_[2][2] = 0.5;
}

ParameterState MetropolisSampler::to_state(const double (&z)[3]) const {
  return {z[0], to_box(z[1], c_.tau_l, t_.tau0), to_box(z[2], c_.k_l, c_.k_u)};
}

double MetropolisSampler::log_target(const double (&z)[3]) const {
  const auto x = to_state(z);
  const double lp = log_unnormalized_posterior(x, t_, d_, c_);
  if (lp == kLogZero) return kLogZero;
  return lp + log_jacobian(z[1], c_.tau_l, t_.tau0) + log_jacobian(z[2], c_.k_l, c_.k_u);
}

bool MetropolisSampler::step(Point& cur) {
  std::normal_distribution<double> normal;
  const double e[3] = {normal(rng_), normal(rng_), normal(rng_)};
  Point prop;
  for (int r = 0; r < 3; ++r) {
    prop.z[r] = cur.z[r];
    for (int s = 0; s <= r; ++s) prop.z[r] += chol_[r][s] * e[s];
  }
  prop.log_target = log_target(prop.z);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  if (prop.log_target != kLogZero && std::log(u) < prop.log_target - cur.log_target) {
    cur = prop;
    return true;
  }
  return false;
}

void MetropolisSampler::burn_in() {
  if (burned_in_) return;
  const std::size_t n = cfg_.burn_in;
  const std::size_t adapt_start = n / 4;
  double log_scale = 0.0;
  Eigen::Matrix3d base = Eigen::Matrix3d::Zero();
  for (int r = 0; r < 3; ++r) base(r, r) = chol_[r][r] * chol_[r][r];

  // running moments over the adaptation window
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();
  std::size_t count = 0;
  std::size_t accepted = 0;

  auto set_proposal = [&](const Eigen::Matrix3d& cov) {
    Eigen::Matrix3d scaled = std::exp(2.0 * log_scale) * cov;
    Eigen::LLT<Eigen::Matrix3d> llt(scaled);
    if (llt.info() != Eigen::Success) return;
    const Eigen::Matrix3d l = llt.matrixL();
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) chol_[r][s] = s <= r ? l(r, s) : 0.0;
  };
  auto empirical = [&]() -> Eigen::Matrix3d {
    const double m = static_cast<double>(count);
    const Eigen::Vector3d mean = sum / m;
    Eigen::Matrix3d cov = outer / m - mean * mean.transpose();
    cov *= 2.38 * 2.38 / 3.0;
    cov.diagonal().array() += 1e-10;
    return cov;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const bool acc = step(cur_);
    accepted += acc ? 1 : 0;
    // Robbins-Monro step on the global scale toward the target acceptance
    const double gain = 1.0 / std::pow(static_cast<double>(i) + 10.0, 0.6);
    log_scale += gain * ((acc ? 1.0 : 0.0) - cfg_.target_accept);
    log_scale = std::clamp(log_scale, -10.0, 5.0);
    if (i >= adapt_start) {
      const Eigen::Vector3d z(cur_.z[0], cur_.z[1], cur_.z[2]);
      sum += z;
      outer += z * z.transpose();
      ++count;
    }
    if (count >= 200 && i % 50 == 0) {
      set_proposal(empirical());
    } else if (i % 50 == 0) {
      set_proposal(base);
    }
  }
  if (accepted == 0) {
    const auto x = to_state(cur_.z);
    throw InitializationError("no proposal accepted during burn-in; start (mu=" + fmt_double(x.mu) +
                              ", tau_mu=" + fmt_double(x.tau_mu) + ", k=" + fmt_double(x.k) + "), scales (" +
                              fmt_double(chol_[0][0]) + ", " + fmt_double(chol_[1][1]) + ", " +
                              fmt_double(chol_[2][2]) + ")");
  }
  if (count >= 200) set_proposal(empirical());
  burned_in_ = true;
}

void MetropolisSampler::extend(Chain& chain, std::size_t n) {
  burn_in();
  chain.hyperparameters_used = t_;
  chain.seed = cfg_.seed;
  chain.draws.reserve(chain.draws.size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    recorded_accepts_ += step(cur_) ? 1 : 0;
    ++recorded_steps_;
    chain.draws.push_back(to_state(cur_.z));
  }
  chain.accept_rate = static_cast<double>(recorded_accepts_) / static_cast<double>(recorded_steps_);
}

Chain run_chain(const Hyperparameters& t, const Dataset& d, const ModelConstants& c, const MCMCConfig& cfg) {
  MetropolisSampler sampler(t, d, c, cfg);
  Chain chain;
  sampler.extend(chain, cfg.max_draws);
  return chain;
}

Chain run_chain_until(const Hyperparameters& t, const Dataset& d, const ModelConstants& c, const MCMCConfig& cfg,
                      const std::function<bool(const Chain&)>& enough) {
  MetropolisSampler sampler(t, d, c, cfg);
  Chain chain;
  while (chain.size() < cfg.max_draws) {
    sampler.extend(chain, std::min(cfg.batch_size, cfg.max_draws - chain.size()));
    if (enough(chain)) break;
  }
  return chain;
}

std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag) {
  check_series(series);
  if (max_lag >= series.size()) throw InputError("autocorrelation: max_lag must be < series length");
  std::vector<double> x;
  const double c0 = center(series, x);
  const double n = static_cast<double>(series.size());
  std::vector<double> rho(max_lag + 1);
  if (series.size() >= kFftThreshold && max_lag > 32) {
    const auto sums = lagged_sums_fft(x, max_lag);
    for (std::size_t k = 0; k <= max_lag; ++k) rho[k] = sums[k] / n / c0;
  } else {
    for (std::size_t k = 0; k <= max_lag; ++k) rho[k] = lagged_sum_direct(x, k) / n / c0;
  }
  rho[0] = 1.0;
  return rho;
}

EssDetail ess_mcmc_detail(std::span<const double> series) {
  check_series(series);
  std::vector<double> x;
  const double c0 = center(series, x);
  const std::size_t n = series.size();
  const double nd = static_cast<double>(n);
  const std::size_t max_lag = std::min(n - 1, kMaxLagCap);

  EssDetail out;
  // direct scan first, FFT only when no negative value has appeared yet
  constexpr std::size_t kDirectLags = 64;
  std::size_t k = 1;
  for (; k <= std::min(max_lag, kDirectLags); ++k) {
    const double rho = lagged_sum_direct(x, k) / nd / c0;
    if (rho < 0.0) break;
    out.rho_sum += rho;
    out.truncation_lag = k;
  }
  if (k > kDirectLags && k <= max_lag) {
    const auto sums = lagged_sums_fft(x, max_lag);
    for (; k <= max_lag; ++k) {
      const double rho = sums[k] / nd / c0;
      if (rho < 0.0) break;
      out.rho_sum += rho;
      out.truncation_lag = k;
    }
  }
  const double denom = 1.0 + 2.0 * out.rho_sum;
  out.ess = std::clamp(nd / denom, std::numeric_limits<double>::min(), nd);
  return out;
}

double ess_mcmc(std::span<const double> series) { return ess_mcmc_detail(series).ess; }

std::string format_chain_csv(const Chain& chain) {
  std::string out = "draw_index,mu,tau_mu,k\n";
  for (std::size_t i = 0; i < chain.draws.size(); ++i) {
    const auto& x = chain.draws[i];
    out += std::to_string(i) + "," + fmt_double(x.mu) + "," + fmt_double(x.tau_mu) + "," + fmt_double(x.k) + "\n";
  }
  return out;
}

}  // namespace riis
