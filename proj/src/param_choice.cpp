#include "qsparse/param_choice.hpp"

#include <cmath>
#include <map>

#include "qsparse/error.hpp"

namespace qsparse {

namespace {

// Memoizes solves by parameter value so bracketing, bisection and the
// balancing comparisons never re-solve the same functional.
class Evaluator {
 public:
  Evaluator(const Problem& p, const PenaltyConfig& penalty, const SolverOptions& options)
      : problem_(p), penalty_(penalty), options_(options) {}

  const SolveResult& at(double gamma) {
    auto it = cache_.find(gamma);
    if (it == cache_.end()) {
      it = cache_.emplace(gamma, solve(problem_, penalty_.with_reg_param(gamma), options_)).first;
    }
    return it->second;
  }

  double discrepancy(double gamma) { return at(gamma).discrepancy; }

 private:
  const Problem& problem_;
  PenaltyConfig penalty_;
  SolverOptions options_;
  std::map<double, SolveResult> cache_;
};

void require_noise(const Problem& p) {
  if (!(p.delta > 0.0)) throw InvalidArgument("parameter choice: delta must be positive");
}

// Smallest parameter at which the l1 part of the penalty forces x = 0; a
// scale for the default search start.
double zero_threshold(const Problem& p, const PenaltyConfig& penalty) {
  const double z = p.op.adjoint_apply(p.y_delta.values()).lpNorm<Eigen::Infinity>();
  const double scale = std::max(z, 1e-300);
  switch (penalty.family) {
    case PenaltyFamily::ElasticNet:
      return scale / penalty.eta;
    case PenaltyFamily::L1:
      return scale;
    case PenaltyFamily::L2:
      return std::pow(op_norm_estimate(p.op), 2);
  }
  return scale;
}

RuleOutcome make_outcome(Rule rule, double gamma, const SolveResult& sol,
                         std::vector<TraceEntry> trace, bool satisfied) {
  RuleOutcome out;
  out.rule = rule;
  out.gamma_star = gamma;
  out.solution = sol;
  out.trace = std::move(trace);
  out.satisfied = satisfied;
  return out;
}

}  // namespace

const char* to_string(Rule r) {
  switch (r) {
    case Rule::TDP:
      return "tdp";
    case Rule::SDP:
      return "sdp";
    case Rule::LEP:
      return "lep";
  }
  return "?";
}

Rule rule_from_string(const std::string& s) {
  if (s == "tdp") return Rule::TDP;
  if (s == "sdp") return Rule::SDP;
  if (s == "lep") return Rule::LEP;
  throw InvalidArgument("unknown rule '" + s + "'");
}

void RuleConfig::validate() const {
  if (max_steps < 1) throw InvalidArgument("rule: max_steps must be at least 1");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("rule: q must lie in (0, 1)");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidArgument("rule: lambda must lie in (0, 1]");
  if (c_e > 0.0 && c_e < 1.0) throw InvalidArgument("rule: C_E must be at least 1");
  switch (rule) {
    case Rule::TDP:
      if (!(tau1 >= 1.0 && tau2 >= tau1) || !std::isfinite(tau2)) {
        throw InvalidArgument("rule: TDP needs 1 <= tau1 <= tau2");
      }
      break;
    case Rule::SDP:
      if (!(tau > 1.0)) throw InvalidArgument("rule: SDP needs tau > 1");
      break;
    case Rule::LEP:
      if (!(tau > 0.0)) throw InvalidArgument("rule: LEP stop rule needs tau > 0");
      break;
  }
}

ErrorMeasure ErrorMeasure::eta_measure(double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("error measure: eta must be positive");
  return ErrorMeasure(Kind::EtaMeasure, eta);
}

ErrorMeasure ErrorMeasure::for_penalty(const PenaltyConfig& c) {
  return c.family == PenaltyFamily::ElasticNet ? eta_measure(c.eta) : l1_metric();
}

double ErrorMeasure::operator()(const Vector& a, const Vector& b) const {
  if (a.size() != b.size()) throw DimensionMismatch("error measure: length mismatch");
  const Vector d = a - b;
  if (kind_ == Kind::L1Metric) return d.lpNorm<1>();
  return eta_ * d.lpNorm<1>() + 0.25 * d.squaredNorm();
}

double error_measure_eval(const ErrorMeasure& m, const SeqVec& x1, const SeqVec& x2) {
  return m(x1.values(), x2.values());
}

RuleOutcome choose_tdp(const Problem& p, const PenaltyConfig& penalty, const RuleConfig& config,
                       const SolverOptions& options) {
  config.validate();
  require_noise(p);
  Evaluator eval(p, penalty, options);

  double lower = config.tau1 * p.delta;
  double upper = config.tau2 * p.delta;
  // With tau1 = tau2 the band is the bisection tolerance around tau delta.
  const double mid = 0.5 * (lower + upper);
  lower = std::min(lower, mid * (1.0 - 1e-3));
  upper = std::max(upper, mid * (1.0 + 1e-3));

  std::vector<TraceEntry> trace;
  auto probe = [&](double g) {
    const double d = eval.discrepancy(g);
    trace.push_back({g, d, 0.0});
    return d;
  };
  auto done = [&](double g) { return make_outcome(Rule::TDP, g, eval.at(g), trace, true); };

  const double start = config.gamma0 > 0.0 ? config.gamma0 : zero_threshold(p, penalty);
  double g = start;
  double d = probe(g);
  if (d >= lower && d <= upper) return done(g);

  double lo = 0.0;  // discrepancy below the band
  double hi = 0.0;  // discrepancy above the band
  constexpr double kFactor = 10.0;
  if (d < lower) {
    lo = g;
    for (int i = 0; i < 60; ++i) {
      g *= kFactor;
      d = probe(g);
      if (d >= lower && d <= upper) return done(g);
      if (d > upper) {
        hi = g;
        break;
      }
      lo = g;
    }
    if (hi == 0.0) {
      throw NoBracket("TDP: discrepancy stays below tau1*delta for every parameter (data norm " +
                      std::to_string(p.y_delta.values().norm()) + " vs delta " +
                      std::to_string(p.delta) + ")");
    }
  } else {
    hi = g;
    const double floor = start * 1e-16;
    while (true) {
      g /= kFactor;
      d = probe(g);
      if (d >= lower && d <= upper) return done(g);
      if (d < lower) {
        lo = g;
        break;
      }
      hi = g;
      if (g < floor) {
        throw NoBracket("TDP: discrepancy exceeds tau2*delta even as the parameter tends to zero; "
                        "decrease delta's ratio to the truncation residual or enlarge N");
      }
    }
  }

  double log_lo = std::log(lo);
  double log_hi = std::log(hi);
  for (int it = 0; it < 200 && log_hi - log_lo > 1e-14 * std::max(1.0, std::abs(log_lo)); ++it) {
    const double m = 0.5 * (log_lo + log_hi);
    g = std::exp(m);
    d = probe(g);
    if (d >= lower && d <= upper) return done(g);
    if (d < lower) {
      log_lo = m;
    } else {
      log_hi = m;
    }
  }
  // The discrepancy jumped across the band (inexact solves); report the
  // nearest point without claiming the condition.
  const double glo = std::exp(log_lo);
  const double ghi = std::exp(log_hi);
  const double best =
      std::abs(eval.discrepancy(glo) - mid) <= std::abs(eval.discrepancy(ghi) - mid) ? glo : ghi;
  return make_outcome(Rule::TDP, best, eval.at(best), trace, false);
}

RuleOutcome choose_sdp(const Problem& p, const PenaltyConfig& penalty, const RuleConfig& config,
                       const SolverOptions& options) {
  config.validate();
  require_noise(p);
  Evaluator eval(p, penalty, options);
  const double target = config.tau * p.delta;

  double gamma0 = config.gamma0;
  std::vector<TraceEntry> trace;
  if (gamma0 <= 0.0) {
    gamma0 = 2.0 * zero_threshold(p, penalty);
    for (int i = 0; i < 60 && eval.discrepancy(gamma0) <= target; ++i) gamma0 *= 10.0;
  }
  const double d0 = eval.discrepancy(gamma0);
  trace.push_back({gamma0, d0, 0.0});
  if (d0 <= target) {
    throw Gamma0TooSmall("SDP: discrepancy at gamma0 is already <= tau*delta; increase gamma0");
  }
  for (int j = 1; j <= config.max_steps; ++j) {
    const double g = gamma0 * std::pow(config.q, j);
    const double d = eval.discrepancy(g);
    trace.push_back({g, d, 0.0});
    if (d <= target) return make_outcome(Rule::SDP, g, eval.at(g), trace, true);
  }
  throw Exhausted("SDP: no parameter within max_steps reached discrepancy <= tau*delta");
}

RuleOutcome choose_lep(const Problem& p, const PenaltyConfig& penalty, const RuleConfig& config,
                       const ErrorMeasure& measure, const SolverOptions& options) {
  config.validate();
  require_noise(p);
  Evaluator eval(p, penalty, options);
  const double c_e = config.c_e > 0.0 ? config.c_e : measure.c_e();
  const double gamma0 = config.gamma0 > 0.0 ? config.gamma0 : config.q * p.delta * p.delta;
  const double stop = 10.0 * config.tau * p.delta;

  std::vector<double> grid;
  std::vector<TraceEntry> trace;
  int best = 0;
  bool stopped = false;
  for (int j = 0; j < config.max_steps; ++j) {
    const double g = gamma0 / std::pow(config.q, j);
    grid.push_back(g);
    const SolveResult& xj = eval.at(g);
    double worst = 0.0;
    for (int i = 0; i < j; ++i) {
      const double e = measure(eval.at(grid[i]).x.values(), xj.x.values());
      worst = std::max(worst, e / (2.0 * c_e * lepskii_threshold(p.delta, config.lambda, grid[i])));
    }
    trace.push_back({g, xj.discrepancy, worst});
    if (worst <= 1.0) best = j;
    if (xj.discrepancy >= stop) {
      stopped = true;
      break;
    }
  }

  RuleOutcome out = make_outcome(Rule::LEP, grid[best], eval.at(grid[best]), trace, true);
  out.exhausted = !stopped;
  if (!p.x_dagger.empty()) {
    const double e0 = measure(eval.at(gamma0).x.values(), p.x_dagger.values());
    out.start_condition = e0 <= lepskii_threshold(p.delta, config.lambda, gamma0);
  }
  return out;
}

RuleOutcome choose(const Problem& p, const PenaltyConfig& penalty, const RuleConfig& config,
                   const SolverOptions& options) {
  switch (config.rule) {
    case Rule::TDP:
      return choose_tdp(p, penalty, config, options);
    case Rule::SDP:
      return choose_sdp(p, penalty, config, options);
    case Rule::LEP:
      return choose_lep(p, penalty, config, ErrorMeasure::for_penalty(penalty), options);
  }
  throw InvalidArgument("choose: unknown rule");
}

}  // namespace qsparse
