#include "riis/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "riis/error.hpp"
#include "riis/format.hpp"
#include "riis/random.hpp"

namespace riis {

namespace {

bool all_finite(const ParameterState& x) {
  return std::isfinite(x.mu) && std::isfinite(x.tau_mu) && std::isfinite(x.k);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

void Dataset::validate() const {
  if (studies.size() < 2) throw InputError("dataset needs at least 2 studies, got " + std::to_string(studies.size()));
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const auto& s = studies[i];
    if (!std::isfinite(s.effect)) throw InputError("study " + std::to_string(i) + ": effect is not finite");
    if (!std::isfinite(s.std_error) || !(s.std_error > 0.0))
      throw InputError("study " + std::to_string(i) + ": std_error must be finite and > 0");
  }
}

void ModelConstants::validate() const {
  if (!(std::isfinite(tau_l) && tau_l > 0.0)) throw InputError("tau_l must be > 0");
  if (!(std::isfinite(k_l) && k_l > 0.0)) throw InputError("k_l must be > 0");
  if (!(std::isfinite(k_u) && k_u > k_l)) throw InputError("k_u must exceed k_l");
}

void Hyperparameters::validate(const ModelConstants& c) const {
  if (!std::isfinite(mu0) || !std::isfinite(tau0)) throw InputError("hyperparameters must be finite");
  if (!(tau0 > c.tau_l))
    throw InputError("tau0 = " + fmt_double(tau0) + " must exceed tau_l = " + fmt_double(c.tau_l));
}

double log_normal_density(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + r * r / variance);
}

double log_likelihood(const ParameterState& x, const Dataset& d) {
  const double between = x.k * x.k * x.tau_mu * x.tau_mu;
  double acc = 0.0;
  for (const auto& s : d.studies) acc += log_normal_density(s.effect, x.mu, s.std_error * s.std_error + between);
  return acc;
}

double log_prior(const ParameterState& x, const Hyperparameters& t, const ModelConstants& c) {
  if (!all_finite(x) || !std::isfinite(t.mu0) || !std::isfinite(t.tau0))
    throw InputError("non-finite parameter state or hyperparameters");
  if (!x.in_support(t, c)) return kLogZero;
  return log_normal_density(x.mu, t.mu0, x.tau_mu * x.tau_mu) - std::log(t.tau0 - c.tau_l) -
         std::log(c.k_u - c.k_l);
}

double log_unnormalized_posterior(const ParameterState& x, const Hyperparameters& t, const Dataset& d,
                                  const ModelConstants& c) {
  const double lp = log_prior(x, t, c);
  if (lp == kLogZero) return kLogZero;
  return log_likelihood(x, d) + lp;
}

std::vector<double> prior_predictive_sample(const Hyperparameters& t, const ModelConstants& c, std::size_t m,
                                            std::uint64_t seed) {
  if (m == 0) throw InputError("prior_predictive_sample: m must be >= 1");
  c.validate();
  t.validate(c);
  Rng rng(seed);
  std::uniform_real_distribution<double> tau_dist(c.tau_l, t.tau0);
  std::uniform_real_distribution<double> k_dist(c.k_l, c.k_u);
  std::normal_distribution<double> z;
  std::vector<double> out(m);
  for (auto& delta : out) {
    double tau = tau_dist(rng);
    // uniform_real_distribution may return the upper endpoint through rounding
    while (!(tau > c.tau_l && tau < t.tau0)) tau = tau_dist(rng);
    const double k = k_dist(rng);
    const double mu = t.mu0 + tau * z(rng);
    delta = mu + k * tau * z(rng);
  }
  return out;
}

Dataset parse_dataset_csv(const std::string& text, bool negate_effects) {
  std::istringstream in(text);
  std::string line;
  Dataset d;
  bool header_seen = false;
  std::size_t lineno = 0;
  int col_id = -1, col_effect = -1, col_se = -1;
  while (std::getline(in, line)) {
    ++lineno;
    auto view = trim(line);
    if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (view.empty() || view.front() == '#') continue;
    auto cells = split_commas(view);
    if (!header_seen) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "study_id") col_id = static_cast<int>(i);
        if (cells[i] == "effect") col_effect = static_cast<int>(i);
        if (cells[i] == "std_error") col_se = static_cast<int>(i);
      }
      if (col_id < 0 || col_effect < 0 || col_se < 0)
        throw InputError("dataset CSV header must contain study_id,effect,std_error");
      header_seen = true;
      continue;
    }
    const auto need = static_cast<std::size_t>(std::max({col_id, col_effect, col_se}));
    if (cells.size() <= need) throw InputError("dataset CSV line " + std::to_string(lineno) + ": too few columns");
    Study s;
    s.id = std::string(cells[col_id]);
    if (!parse_double(cells[col_effect], s.effect) || !parse_double(cells[col_se], s.std_error))
      throw InputError("dataset CSV line " + std::to_string(lineno) + ": malformed number");
    if (negate_effects) s.effect = -s.effect;
    d.studies.push_back(std::move(s));
  }
  if (!header_seen) throw InputError("dataset CSV is empty");
  d.validate();
  return d;
}

Dataset read_dataset_csv(const std::filesystem::path& path, bool negate_effects) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto d = parse_dataset_csv(buf.str(), negate_effects);
  d.label = path.stem().string();
  return d;
}

std::string format_dataset_csv(const Dataset& d) {
  std::string out = "study_id,effect,std_error\n";
  for (std::size_t i = 0; i < d.studies.size(); ++i) {
    const auto& s = d.studies[i];
    out += (s.id.empty() ? std::to_string(i + 1) : s.id) + "," + fmt_double(s.effect) + "," +
           fmt_double(s.std_error) + "\n";
  }
  return out;
}

}  // namespace riis
