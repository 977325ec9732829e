#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsparse/problem.hpp"
#include "qsparse/solvers.hpp"

namespace qsparse {

// A-posteriori choice of the regularization parameter (gamma for l1/l2,
// beta for the elastic net).
//
//   TDP  two-sided discrepancy:  tau1 delta <= ||A x_g - y_delta|| <= tau2 delta
//   SDP  sequential discrepancy on g_j = q^j g0: first g_j whose discrepancy
//        drops to tau delta, so that
//        ||A x_g - y_delta|| <= tau delta < ||A x_{g/q} - y_delta||
//   LEP  balancing on g_j = g0 / q^j: largest g such that
//        E(x_g', x_g) <= 2 C_E Theta(g') for every grid g' in [g0, g), with
//        Theta(g) = 17 delta^2 / (2 lambda g)
enum class Rule { TDP, SDP, LEP };

const char* to_string(Rule r);
Rule rule_from_string(const std::string& s);

struct RuleConfig {
  Rule rule = Rule::TDP;
  double tau1 = 1.0;
  double tau2 = 1.2;
  double tau = 1.5;
  double q = 0.5;
  double gamma0 = 0.0;  // <= 0 selects the documented default per rule
  double lambda = 1.0;
  double c_e = 0.0;  // <= 0 takes C_E from the error measure
  int max_steps = 200;

  void validate() const;
};

class ErrorMeasure {
 public:
  enum class Kind { L1Metric, EtaMeasure };

  static ErrorMeasure l1_metric() { return ErrorMeasure(Kind::L1Metric, 1.0); }
  // E_eta(a, b) = eta ||a - b||_1 + 1/4 ||a - b||_2^2
  static ErrorMeasure eta_measure(double eta);
  // L1 metric for the l1 family, E_eta otherwise.
  static ErrorMeasure for_penalty(const PenaltyConfig& c);

  Kind kind() const noexcept { return kind_; }
  double eta() const noexcept { return eta_; }
  // Quasi-triangle constant: 1 for a metric, 2 for E_eta.
  double c_e() const noexcept { return kind_ == Kind::L1Metric ? 1.0 : 2.0; }

  double operator()(const Vector& a, const Vector& b) const;

 private:
  ErrorMeasure(Kind kind, double eta) : kind_(kind), eta_(eta) {}
  Kind kind_;
  double eta_;
};

double error_measure_eval(const ErrorMeasure& m, const SeqVec& x1, const SeqVec& x2);

struct TraceEntry {
  double gamma = 0.0;
  double discrepancy = 0.0;
  // LEP only: max over earlier grid points of E / (2 C_E Theta); <= 1 means
  // the comparisons hold. Zero for the other rules.
  double comparison = 0.0;
};

struct RuleOutcome {
  Rule rule = Rule::TDP;
  double gamma_star = 0.0;
  SolveResult solution;
  std::vector<TraceEntry> trace;
  bool satisfied = false;
  bool exhausted = false;  // LEP: max_steps reached before the stop rule fired
  // LEP: whether E(x_g0, x_dagger) <= Theta(g0) holds; empty when x_dagger is unknown.
  std::optional<bool> start_condition;
};

RuleOutcome choose_tdp(const Problem& p, const PenaltyConfig& penalty, const RuleConfig& config,
                       const SolverOptions& options = {});
RuleOutcome choose_sdp(const Problem& p, const PenaltyConfig& penalty, const RuleConfig& config,
                       const SolverOptions& options = {});
RuleOutcome choose_lep(const Problem& p, const PenaltyConfig& penalty, const RuleConfig& config,
                       const ErrorMeasure& measure, const SolverOptions& options = {});

// Dispatches on config.rule; LEP uses ErrorMeasure::for_penalty.
RuleOutcome choose(const Problem& p, const PenaltyConfig& penalty, const RuleConfig& config,
                   const SolverOptions& options = {});

// Theta(g) = 17 delta^2 / (2 lambda g)
inline double lepskii_threshold(double delta, double lambda, double gamma) {
  return 17.0 * delta * delta / (2.0 * lambda * gamma);
}

}  // namespace qsparse
