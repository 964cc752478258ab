#include "riis/prior_set.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "riis/error.hpp"
#include "riis/format.hpp"
#include "riis/parallel.hpp"

namespace riis {

namespace {

double grid_value(double lo, double hi, std::size_t steps, std::size_t i) {
  if (steps == 1) return 0.5 * (lo + hi);
  if (i + 1 == steps) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

// Least-squares polynomial of degree < 3 through (x, y); returns {alpha, beta, gamma}.
std::array<double, 3> fit_quadratic(const std::vector<CellCoverage>& pts) {
  const std::size_t n = pts.size();
  const std::size_t degree = std::min<std::size_t>(2, n - 1);
  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p <= degree; ++p) design(i, p) = std::pow(pts[i].mu0, static_cast<double>(p));
    rhs(i) = pts[i].tau0;
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
  std::array<double, 3> out{0.0, 0.0, 0.0};
  out[2] = coef(0);
  if (degree >= 1) out[1] = coef(1);
  if (degree >= 2) out[0] = coef(2);
  return out;
}

}  // namespace

void ElicitationSpec::validate(const ModelConstants& c) const {
  if (!(std::isfinite(low) && std::isfinite(high) && low < high)) throw InputError("elicited range needs low < high");
  if (!(coverage > 0.0 && coverage < 1.0)) throw InputError("target coverage must be in (0,1)");
  if (!(mu0_lo <= mu0_hi) || !(tau0_lo <= tau0_hi)) throw InputError("grid bounds must be ordered");
  if (!(tau0_lo > c.tau_l)) throw InputError("grid tau0 lower bound must exceed tau_l");
  if (mu0_steps == 0 || tau0_steps == 0) throw InputError("grid must be nonempty");
  if (mc_samples_per_cell == 0) throw InputError("mc_samples_per_cell must be >= 1");
  if (!(margin >= 0.0)) throw InputError("margin must be >= 0");
}

bool PriorSet::contains(const Hyperparameters& t) const {
  if (!(t.mu0 >= mu0_lo && t.mu0 <= mu0_hi && t.tau0 >= tau0_lo && t.tau0 <= tau0_hi)) return false;
  const double rr = r(t);
  return side == BoundarySide::kBelow ? margin - rr >= 0.0 : rr + margin >= 0.0;
}

PriorSet PriorSet::box(double mu0_lo, double mu0_hi, double tau0_lo, double tau0_hi) {
  PriorSet ps;
  ps.mu0_lo = mu0_lo;
  ps.mu0_hi = mu0_hi;
  ps.tau0_lo = tau0_lo;
  ps.tau0_hi = tau0_hi;
  ps.gamma = tau0_hi;
  ps.margin = 0.0;
  ps.side = BoundarySide::kBelow;
  return ps;
}

void PriorSet::validate(const ModelConstants& c) const {
  for (double v : {mu0_lo, mu0_hi, tau0_lo, tau0_hi, alpha, beta, gamma, margin})
    if (!std::isfinite(v)) throw InputError("prior set has non-finite fields");
  if (!(mu0_lo <= mu0_hi && tau0_lo <= tau0_hi)) throw InputError("prior set box bounds must be ordered");
  if (!(tau0_lo > c.tau_l)) throw InputError("prior set tau0 lower bound must exceed tau_l");
  if (!(margin >= 0.0)) throw InputError("prior set margin must be >= 0");
  constexpr std::size_t kProbe = 64;
  for (std::size_t i = 0; i < kProbe; ++i)
    for (std::size_t j = 0; j < kProbe; ++j)
      if (contains({grid_value(mu0_lo, mu0_hi, kProbe, i), grid_value(tau0_lo, tau0_hi, kProbe, j)})) return;
  throw InputError("prior set is empty");
}

double coverage_proportion(const Hyperparameters& t, const ElicitationSpec& spec, const ModelConstants& c,
                           std::uint64_t seed) {
  const auto draws = prior_predictive_sample(t, c, spec.mc_samples_per_cell, seed);
  const auto inside = std::count_if(draws.begin(), draws.end(),
                                    [&](double v) { return v >= spec.low && v <= spec.high; });
  return static_cast<double>(inside) / static_cast<double>(draws.size());
}

double coverage_proportion(const Hyperparameters& t, const ElicitationSpec& spec, const ModelConstants& c) {
  return coverage_proportion(t, spec, c, spec.seed);
}

PriorSetBuild build_prior_set(const ElicitationSpec& spec, const ModelConstants& c) {
  c.validate();
  spec.validate(c);
  const std::size_t nm = spec.mu0_steps, nt = spec.tau0_steps;
  PriorSetBuild out;
  out.grid.resize(nm * nt);
  parallel_for(nm * nt, [&](std::size_t cell) {
    const std::size_t i = cell / nt, j = cell % nt;
    const Hyperparameters t{grid_value(spec.mu0_lo, spec.mu0_hi, nm, i), grid_value(spec.tau0_lo, spec.tau0_hi, nt, j)};
    out.grid[cell] = {t.mu0, t.tau0, coverage_proportion(t, spec, c, mix_seed(spec.seed, cell))};
  });

  auto complies = [&](std::size_t i, std::size_t j) { return out.grid[i * nt + j].coverage >= spec.coverage; };

  double mu_min = 0, mu_max = 0, tau_min = 0, tau_max = 0;
  int votes_below = 0, votes_above = 0;
  for (std::size_t i = 0; i < nm; ++i) {
    bool any = false, all = true;
    for (std::size_t j = 0; j < nt; ++j) {
      const auto& cell = out.grid[i * nt + j];
      if (complies(i, j)) {
        if (out.complying_cells == 0) {
          mu_min = mu_max = cell.mu0;
          tau_min = tau_max = cell.tau0;
        }
        ++out.complying_cells;
        any = true;
        mu_min = std::min(mu_min, cell.mu0);
        mu_max = std::max(mu_max, cell.mu0);
        tau_min = std::min(tau_min, cell.tau0);
        tau_max = std::max(tau_max, cell.tau0);
      } else {
        all = false;
      }
    }
    if (any && !all) {
      // coverage typically falls as tau0 widens the prior predictive
      if (out.grid[i * nt].coverage >= out.grid[i * nt + nt - 1].coverage)
        ++votes_below;
      else
        ++votes_above;
    }
  }
  if (out.complying_cells == 0)
    throw InputError("no grid cell reaches coverage " + fmt_double(spec.coverage) + " for range [" +
                     fmt_double(spec.low) + ", " + fmt_double(spec.high) + "]");

  PriorSet& ps = out.set;
  ps.mu0_lo = mu_min;
  ps.mu0_hi = mu_max;
  ps.tau0_lo = tau_min;
  ps.tau0_hi = tau_max;
  ps.margin = spec.margin;
  ps.side = votes_above > votes_below ? BoundarySide::kAbove : BoundarySide::kBelow;
  const bool below = ps.side == BoundarySide::kBelow;

  std::size_t non_monotone = 0;
  for (std::size_t i = 0; i < nm; ++i) {
    // walk away from the complying edge; the boundary is the last complying
    // cell of the first complying run
    std::size_t first = nt, last = nt;
    bool crossed = false, recomplied = false;
    for (std::size_t step = 0; step < nt; ++step) {
      const std::size_t j = below ? step : nt - 1 - step;
      if (complies(i, j)) {
        if (crossed) {
          recomplied = true;
          break;
        }
        if (first == nt) first = j;
        last = j;
      } else if (first != nt) {
        crossed = true;
      }
    }
    if (recomplied) ++non_monotone;
    if (first != nt && crossed) out.boundary_points.push_back(out.grid[i * nt + last]);
  }
  if (non_monotone > 0)
    out.warnings.push_back("coverage not monotone in tau0 in " + std::to_string(non_monotone) +
                           " mu0 column(s); first crossing used");

  if (out.boundary_points.empty()) {
    // every complying column complies over its whole tau0 range
    ps.alpha = ps.beta = 0.0;
    ps.gamma = below ? spec.tau0_hi : spec.tau0_lo;
    out.warnings.push_back("no coverage crossing inside the grid; boundary placed at the grid edge");
  } else {
    const auto coef = fit_quadratic(out.boundary_points);
    ps.alpha = coef[0];
    ps.beta = coef[1];
    ps.gamma = coef[2];
  }

  std::size_t excluded = 0;
  for (std::size_t i = 0; i < nm; ++i)
    for (std::size_t j = 0; j < nt; ++j)
      if (complies(i, j) && !ps.contains({out.grid[i * nt + j].mu0, out.grid[i * nt + j].tau0})) ++excluded;
  out.excluded_fraction = static_cast<double>(excluded) / static_cast<double>(out.complying_cells);
  if (excluded == out.complying_cells) throw InputError("fitted prior set excludes every complying cell");
  return out;
}

Hyperparameters project(const PriorSet& ps, const Hyperparameters& t) {
  Hyperparameters p{std::clamp(t.mu0, ps.mu0_lo, ps.mu0_hi), std::clamp(t.tau0, ps.tau0_lo, ps.tau0_hi)};
  if (ps.contains(p)) return p;
  // tau0 limit allowed by the boundary at a given mu0
  auto best_tau = [&](double mu0) {
    const double edge = ps.side == BoundarySide::kBelow ? ps.boundary(mu0) + ps.margin : ps.boundary(mu0) - ps.margin;
    const double target = ps.side == BoundarySide::kBelow ? std::min(t.tau0, edge) : std::max(t.tau0, edge);
    return std::clamp(target, ps.tau0_lo, ps.tau0_hi);
  };
  Hyperparameters candidate{p.mu0, best_tau(p.mu0)};
  if (ps.contains(candidate)) return candidate;

  const double wm = std::max(ps.mu0_width(), 1e-12), wt = std::max(ps.tau0_width(), 1e-12);
  constexpr std::size_t kScan = 2001;
  double best_d = std::numeric_limits<double>::infinity();
  Hyperparameters best = p;
  for (std::size_t i = 0; i < kScan; ++i) {
    const double mu0 = grid_value(ps.mu0_lo, ps.mu0_hi, kScan, i);
    const Hyperparameters q{mu0, best_tau(mu0)};
    if (!ps.contains(q)) continue;
    const double dm = (q.mu0 - t.mu0) / wm, dt = (q.tau0 - t.tau0) / wt;
    const double dist = dm * dm + dt * dt;
    if (dist < best_d) {
      best_d = dist;
      best = q;
    }
  }
  if (!std::isfinite(best_d)) throw InputError("prior set is empty; cannot project");
  return best;
}

Hyperparameters sample_feasible(const PriorSet& ps, Rng& rng) {
  std::uniform_real_distribution<double> um(ps.mu0_lo, ps.mu0_hi), ut(ps.tau0_lo, ps.tau0_hi);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const Hyperparameters t{ps.mu0_width() > 0 ? um(rng) : ps.mu0_lo, ps.tau0_width() > 0 ? ut(rng) : ps.tau0_lo};
    if (ps.contains(t)) return t;
  }
  throw InputError("could not sample a feasible point from the prior set");
}

void to_json(nlohmann::json& j, const PriorSet& ps) {
  j = nlohmann::json{{"mu0_bounds", {ps.mu0_lo, ps.mu0_hi}},
                     {"tau0_bounds", {ps.tau0_lo, ps.tau0_hi}},
                     {"boundary", {{"alpha", ps.alpha}, {"beta", ps.beta}, {"gamma", ps.gamma}}},
                     {"margin", ps.margin},
                     {"side", ps.side == BoundarySide::kBelow ? "below" : "above"}};
}

void from_json(const nlohmann::json& j, PriorSet& ps) {
  const auto& mb = j.at("mu0_bounds");
  const auto& tb = j.at("tau0_bounds");
  ps.mu0_lo = mb.at(0).get<double>();
  ps.mu0_hi = mb.at(1).get<double>();
  ps.tau0_lo = tb.at(0).get<double>();
  ps.tau0_hi = tb.at(1).get<double>();
  const auto& b = j.at("boundary");
  ps.alpha = b.at("alpha").get<double>();
  ps.beta = b.at("beta").get<double>();
  ps.gamma = b.at("gamma").get<double>();
  ps.margin = j.value("margin", 0.9);
  const auto side = j.value("side", std::string("below"));
  if (side != "below" && side != "above") throw InputError("prior set side must be 'below' or 'above'");
  ps.side = side == "below" ? BoundarySide::kBelow : BoundarySide::kAbove;
}

void to_json(nlohmann::json& j, const ElicitationSpec& s) {
  j = nlohmann::json{{"range", {s.low, s.high}},
                     {"coverage", s.coverage},
                     {"mu0_range", {s.mu0_lo, s.mu0_hi}},
                     {"tau0_range", {s.tau0_lo, s.tau0_hi}},
                     {"mu0_steps", s.mu0_steps},
                     {"tau0_steps", s.tau0_steps},
                     {"mc_samples_per_cell", s.mc_samples_per_cell},
                     {"margin", s.margin},
                     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, ElicitationSpec& s) {
  if (j.contains("range")) {
    s.low = j["range"].at(0).get<double>();
    s.high = j["range"].at(1).get<double>();
  }
  s.coverage = j.value("coverage", s.coverage);
  if (j.contains("mu0_range")) {
    s.mu0_lo = j["mu0_range"].at(0).get<double>();
    s.mu0_hi = j["mu0_range"].at(1).get<double>();
  }
  if (j.contains("tau0_range")) {
    s.tau0_lo = j["tau0_range"].at(0).get<double>();
    s.tau0_hi = j["tau0_range"].at(1).get<double>();
  }
  s.mu0_steps = j.value("mu0_steps", s.mu0_steps);
  s.tau0_steps = j.value("tau0_steps", s.tau0_steps);
  s.mc_samples_per_cell = j.value("mc_samples_per_cell", s.mc_samples_per_cell);
  s.margin = j.value("margin", s.margin);
  s.seed = j.value("seed", s.seed);
}

std::string format_grid_csv(const std::vector<CellCoverage>& grid) {
  std::string out = "mu0,tau0,coverage\n";
  for (const auto& g : grid) out += fmt_double(g.mu0) + "," + fmt_double(g.tau0) + "," + fmt_double(g.coverage) + "\n";
  return out;
}

}  // namespace riis
