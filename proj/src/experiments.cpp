#include "qsparse/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "qsparse/error.hpp"

namespace qsparse {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Largest of f(n) over n = 1..limit, skipping non-finite values.
template <class F>
double sup_over(Index limit, F f) {
  double best = 0.0;
  for (Index n = 1; n <= limit; ++n) {
    const double v = f(n);
    if (std::isfinite(v)) best = std::max(best, v);
  }
  return best;
}

}  // namespace

const char* to_string(SolutionClass c) {
  switch (c) {
    case SolutionClass::PowerDecay:
      return "power-decay";
    case SolutionClass::ExpDecay:
      return "exp-decay";
    case SolutionClass::Sparse:
      return "sparse";
    case SolutionClass::HolderSource:
      return "holder-source";
  }
  return "?";
}

SolutionClass solution_class_from_string(const std::string& s) {
  if (s == "power-decay") return SolutionClass::PowerDecay;
  if (s == "exp-decay") return SolutionClass::ExpDecay;
  if (s == "sparse") return SolutionClass::Sparse;
  if (s == "holder-source") return SolutionClass::HolderSource;
  throw InvalidArgument("unknown solution class '" + s + "'");
}

void ProblemSpec::validate() const {
  if (!(operator_decay > 0.0)) throw InvalidArgument("problem: operator decay a must be positive");
  if (n < 1) throw InvalidArgument("problem: N must be at least 1");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("problem: delta must be nonnegative");
  if (!(scale > 0.0)) throw InvalidArgument("problem: scale c must be positive");
  switch (solution_class) {
    case SolutionClass::PowerDecay:
      if (!(mu > 0.0)) throw InvalidArgument("problem: mu must be positive");
      break;
    case SolutionClass::ExpDecay:
      if (!(sigma_exp > 0.0)) throw InvalidArgument("problem: sigma must be positive");
      break;
    case SolutionClass::Sparse:
      if (k_max < 1 || k_max > n) throw InvalidArgument("problem: k_max must lie in [1, N]");
      break;
    case SolutionClass::HolderSource:
      if (!(theta > 0.0 && theta < 1.0)) throw InvalidArgument("problem: theta must lie in (0, 1)");
      break;
  }
}

Problem gen_problem(const ProblemSpec& spec) {
  spec.validate();
  const Index n = spec.n;
  Vector sigma(n);
  Vector x(n);
  for (Index k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k + 1);
    const double alt = (k % 2 == 0) ? 1.0 : -1.0;
    sigma[k] = std::pow(kk, -spec.operator_decay);
    switch (spec.solution_class) {
      case SolutionClass::PowerDecay:
        x[k] = spec.scale * alt * std::pow(kk, -(spec.mu + 1.0));
        break;
      case SolutionClass::ExpDecay:
        x[k] = spec.scale * std::exp(-std::pow(kk, spec.sigma_exp));
        break;
      case SolutionClass::Sparse:
        x[k] = k < spec.k_max ? spec.scale * alt / kk : 0.0;
        break;
      case SolutionClass::HolderSource:
        x[k] = 0.0;
        break;
    }
  }
  LinOp op = LinOp::diagonal(sigma);
  if (spec.solution_class == SolutionClass::HolderSource) {
    std::mt19937_64 rng(splitmix64(spec.seed ^ 0x486f6c646572ULL));
    std::bernoulli_distribution coin(0.5);
    Vector w(n);
    for (Index k = 0; k < n; ++k) {
      w[k] = (coin(rng) ? 1.0 : -1.0) / std::sqrt(static_cast<double>(k + 1));
    }
    w.normalize();
    x = spec.scale * fractional_normal_power(singular_system(op), spec.theta, w);
  }

  Problem base;
  base.x_dagger = SeqVec(x);
  base.y = SeqVec(op.apply(x));
  base.op = std::move(op);
  return with_noise(base, spec.delta, spec.seed);
}

Problem with_noise(const Problem& base, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("noise: delta must be nonnegative");
  Problem p{base.op, base.x_dagger, base.y, delta, base.y, seed};
  if (delta == 0.0) return p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector u(base.y.size());
  for (Index k = 0; k < u.size(); ++k) u[k] = normal(rng);
  u.normalize();
  p.y_delta = SeqVec(base.y.values() + delta * u);
  return p;
}

std::uint64_t row_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

SmoothnessModel smoothness_model(const ProblemSpec& spec, const Problem& problem,
                                 const SmoothnessOptions& options) {
  const Vector& x = problem.x_dagger.values();
  const Index n = x.size();
  const double a = spec.operator_decay;

  Vector tail = Vector::Zero(n + 1);
  for (Index k = n - 1; k >= 0; --k) tail[k] = tail[k + 1] + std::abs(x[k]);
  const Vector norms = representer_norms(problem.op).norms;
  Vector prefix = Vector::Zero(n + 1);
  for (Index k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + norms[k];

  SmoothnessModel m;
  m.nu = a + 1.0;
  m.k2 = sup_over(n, [&](Index k) { return prefix[k] / std::pow(static_cast<double>(k), m.nu); });

  switch (spec.solution_class) {
    case SolutionClass::PowerDecay:
      m.mu = spec.mu;
      break;
    case SolutionClass::HolderSource:
      // x_k ~ k^{-a theta - 1/2}, hence tail sums ~ n^{-(a theta - 1/2)}.
      m.theta = spec.theta;
      if (a * spec.theta > 0.5) m.mu = a * spec.theta - 0.5;
      break;
    case SolutionClass::ExpDecay:
      m.sigma_exp = spec.sigma_exp;
      m.k1 = sup_over(n / 2, [&](Index k) {
        return tail[k] > 0.0 ? std::exp(std::log(tail[k]) + std::pow(static_cast<double>(k), spec.sigma_exp))
                             : 0.0;
      });
      break;
    case SolutionClass::Sparse:
      break;
  }
  if (m.mu) {
    m.k1 = sup_over(n / 2, [&](Index k) { return tail[k] * std::pow(static_cast<double>(k), *m.mu); });
  }

  const DistanceFunction dist(problem.op, x);
  m.in_range = dist.in_range(options.range_rel_threshold, options.range_radius_factor);
  m.big_k = m.in_range ? dist.source_radius() : 2.0;

  if (spec.solution_class == SolutionClass::Sparse) {
    m.kappa_pred = 1.0;
    m.kappa_branch = "l0";
  } else if (spec.solution_class == SolutionClass::ExpDecay) {
    m.kappa_pred = 1.0;
    m.kappa_branch = "exp-decay";
  } else {
    const double holder_l1 = m.mu ? *m.mu / (*m.mu + m.nu) : 0.0;
    if (m.in_range) {
      m.kappa_pred = holder_l1;
      m.kappa_branch = "range";
    } else {
      m.kappa_pred = m.theta ? std::min(holder_l1, 2.0 * *m.theta / (*m.theta + 1.0)) : holder_l1;
      m.kappa_branch = "non-range";
    }
  }
  return m;
}

double bound_constant(const RuleConfig& rule) {
  switch (rule.rule) {
    case Rule::TDP:
      return rule.tau2 + 1.0;
    case Rule::SDP: {
      const double t = rule.tau;
      const double inner = 2.0 * (t * t + 1.0) / (rule.q * (t - 1.0) * (t - 1.0) * (t + 1.0));
      return (t + 1.0) * std::max(inner, 1.0);
    }
    case Rule::LEP:
      return 34.0 / rule.q;
  }
  return 0.0;
}

AuditReport error_bound_audit(const Problem& problem, const RuleOutcome& outcome, const RuleConfig& rule,
                              const PenaltyConfig& penalty, const RateFunctions& rates) {
  if (penalty.family != PenaltyFamily::ElasticNet) {
    throw InvalidArgument("error_bound_audit: the bound is stated for the elastic-net penalty");
  }
  if (problem.x_dagger.empty()) throw InvalidArgument("error_bound_audit: x_dagger is unknown");
  AuditReport r;
  r.delta = problem.delta;
  r.c_star = bound_constant(rule);
  r.phi_delta = rates.phi(problem.delta);
  r.psi_delta = rates.psi(problem.delta);
  r.big_k = rates.big_k();
  r.bound = r.c_star * (2.0 * penalty.eta * r.phi_delta + r.big_k * r.psi_delta);
  r.e_eta = ErrorMeasure::eta_measure(penalty.eta)(outcome.solution.x.values(), problem.x_dagger.values());
  r.margin = r.bound - r.e_eta;
  r.ok = r.margin >= 0.0;
  return r;
}

AuditReport error_bound_audit(const Problem& problem, const RuleConfig& rule, const PenaltyConfig& penalty,
                              const SmoothnessModel& smoothness, const SmoothnessOptions& options) {
  const RateFunctions rates(problem.op, problem.x_dagger, options);
  const RuleOutcome outcome = choose(problem, penalty, rule);
  AuditReport r = error_bound_audit(problem, outcome, rule, penalty, rates);
  // K is a property of x_dagger; a model that disagrees with the detection
  // would silently change the bound.
  if (smoothness.in_range != rates.in_range()) {
    throw InvalidArgument("error_bound_audit: smoothness model disagrees with range detection");
  }
  return r;
}

std::vector<double> RateReport::deltas() const {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.delta);
  return v;
}
std::vector<double> RateReport::errors_l1() const {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.err_l1);
  return v;
}
std::vector<double> RateReport::errors_l2() const {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.err_l2);
  return v;
}
std::vector<double> RateReport::e_eta() const {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.e_eta);
  return v;
}
std::vector<double> RateReport::gammas() const {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.gamma);
  return v;
}

std::vector<double> geometric_grid(double start, double end, int count) {
  if (!(start > 0.0) || !(end > 0.0) || count < 1) {
    throw InvalidArgument("delta grid: need positive endpoints and count >= 1");
  }
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double w = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    g[static_cast<std::size_t>(i)] = std::exp((1.0 - w) * std::log(start) + w * std::log(end));
  }
  g.front() = start;
  g.back() = count == 1 ? start : end;
  return g;
}

std::vector<double> parse_delta_grid(const std::string& text) {
  std::stringstream ss(text);
  std::string a;
  std::string b;
  std::string c;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c) || a.empty() ||
      b.empty() || c.empty()) {
    throw InvalidArgument("delta grid: expected start:end:count, got '" + text + "'");
  }
  try {
    std::size_t used = 0;
    const double start = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    const double end = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
    const int count = std::stoi(c, &used);
    if (used != c.size()) throw std::invalid_argument(c);
    return geometric_grid(start, end, count);
  } catch (const std::logic_error&) {
    throw InvalidArgument("delta grid: malformed '" + text + "'");
  }
}

RateReport rate_sweep(const ProblemSpec& spec, const RuleConfig& rule, const PenaltyConfig& penalty,
                      const std::vector<double>& delta_grid, const SweepOptions& options) {
  if (delta_grid.size() < 5) throw InvalidArgument("rate_sweep: the delta grid needs at least 5 points");
  for (double d : delta_grid) {
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidArgument("rate_sweep: delta values must be positive");
  }
  rule.validate();
  penalty.validate();

  ProblemSpec base_spec = spec;
  base_spec.delta = 0.0;
  const Problem base = gen_problem(base_spec);

  RateReport report;
  report.spec = spec;
  report.rule = rule;
  report.penalty = penalty;
  report.smoothness = smoothness_model(spec, base, options.smoothness);
  report.predicted_kappa = report.smoothness.kappa_pred;

  std::optional<RateFunctions> rates;
  if (penalty.family == PenaltyFamily::ElasticNet) rates.emplace(base.op, base.x_dagger, options.smoothness);
  const ErrorMeasure e_eta = ErrorMeasure::eta_measure(penalty.eta);

  report.rows.resize(delta_grid.size());
  auto run_row = [&](std::size_t i) {
    RateRow& row = report.rows[i];
    row.delta = delta_grid[i];
    const Problem p = with_noise(base, delta_grid[i], row_seed(spec.seed, i));
    try {
      const RuleOutcome out = choose(p, penalty, rule, options.solver);
      const Vector diff = out.solution.x.values() - p.x_dagger.values();
      row.gamma = out.gamma_star;
      row.err_l1 = diff.lpNorm<1>();
      row.err_l2 = diff.norm();
      row.e_eta = e_eta(out.solution.x.values(), p.x_dagger.values());
      row.discrepancy = out.solution.discrepancy;
      row.satisfied = out.satisfied;
      row.ok = true;
      if (rates) row.audit = error_bound_audit(p, out, rule, penalty, *rates);
    } catch (const Error& e) {
      row.ok = false;
      row.error_code = e.code();
    }
  };

  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(delta_grid.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < delta_grid.size(); ++i) run_row(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < delta_grid.size(); i = next++) run_row(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& r : report.rows) {
    if (r.ok && r.err_l1 > 0.0) {
      xs.push_back(r.delta);
      ys.push_back(r.err_l1);
    }
  }
  try {
    const ExponentFit fit = fit_exponent(xs, ys);
    report.fitted_slope_l1 = fit.slope;
    report.fit_r2 = fit.r2;
    report.fit_ok = true;
  } catch (const InvalidArgument&) {
    report.fit_ok = false;
  }
  report.pass = report.fit_ok && report.fitted_slope_l1 >= report.predicted_kappa - 0.1 && report.fit_r2 >= 0.95;
  return report;
}

}  // namespace qsparse
