#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsparse/param_choice.hpp"
#include "qsparse/problem.hpp"
#include "qsparse/smoothness.hpp"
#include "qsparse/solvers.hpp"

namespace qsparse {

enum class SolutionClass { PowerDecay, ExpDecay, Sparse, HolderSource };

const char* to_string(SolutionClass c);
SolutionClass solution_class_from_string(const std::string& s);

// Synthetic benchmark on the diagonal operator sigma_k = k^{-a}.
//
//   PowerDecay    x_k = c (-1)^{k+1} k^{-(mu+1)}
//   ExpDecay      x_k = c exp(-k^sigma)
//   Sparse        x_k = c (-1)^{k+1} / k for k <= k_max, zero otherwise
//   HolderSource  x = c (A*A)^{theta/2} w, w_k proportional to s_k k^{-1/2}
//                 with seeded random signs s_k, ||w|| = 1
//
// Noise: y_delta = y + delta u with u seeded standard normal, ||u|| = 1.
struct ProblemSpec {
  double operator_decay = 1.0;  // a
  SolutionClass solution_class = SolutionClass::PowerDecay;
  double mu = 2.0;
  double sigma_exp = 1.0;
  int k_max = 5;
  double theta = 0.5;
  double scale = 1.0;  // c
  Index n = 4096;
  double delta = 1e-3;
  std::uint64_t seed = 7;

  void validate() const;
};

Problem gen_problem(const ProblemSpec& spec);

// Same operator and exact data, fresh noise of level delta from `seed`.
Problem with_noise(const Problem& base, double delta, std::uint64_t seed);

// Seed of the i-th row of a sweep, derived from the problem seed.
std::uint64_t row_seed(std::uint64_t seed, std::size_t index);

// Smoothness exponents and constants of a generated problem together with
// the predicted Hoelder rate exponent kappa.
struct SmoothnessModel {
  std::optional<double> mu;         // tail decay exponent (absent when x is sparse)
  double nu = 0.0;                  // representer-sum growth exponent, a + 1
  std::optional<double> sigma_exp;  // exponential decay exponent
  std::optional<double> theta;      // Hoelder source exponent
  double k1 = 0.0;
  double k2 = 0.0;
  double kappa_pred = 1.0;
  double big_k = 2.0;    // K in g_eta: 2 outside range(A*), R0 inside
  bool in_range = false;
  std::string kappa_branch;  // "l0", "exp-decay", "range", "non-range"
};

SmoothnessModel smoothness_model(const ProblemSpec& spec, const Problem& problem,
                                 const SmoothnessOptions& options = {});

// Constant C* of the a-posteriori error bound
//   E_eta(x, x_dagger) <= C* (2 eta phi(delta) + K psi(delta)).
double bound_constant(const RuleConfig& rule);

struct AuditReport {
  double delta = 0.0;
  double c_star = 0.0;
  double phi_delta = 0.0;
  double psi_delta = 0.0;
  double big_k = 0.0;
  double bound = 0.0;
  double e_eta = 0.0;
  double margin = 0.0;  // bound - e_eta
  bool ok = false;
};

AuditReport error_bound_audit(const Problem& problem, const RuleOutcome& outcome, const RuleConfig& rule,
                              const PenaltyConfig& penalty, const RateFunctions& rates);
AuditReport error_bound_audit(const Problem& problem, const RuleConfig& rule, const PenaltyConfig& penalty,
                              const SmoothnessModel& smoothness, const SmoothnessOptions& options = {});

struct RateRow {
  double delta = 0.0;
  double gamma = 0.0;
  double err_l1 = 0.0;
  double err_l2 = 0.0;
  double e_eta = 0.0;
  double discrepancy = 0.0;
  bool satisfied = false;
  bool ok = false;          // false when the rule raised an error
  std::string error_code;
  std::optional<AuditReport> audit;  // elastic-net sweeps only
};

struct RateReport {
  ProblemSpec spec;
  RuleConfig rule;
  PenaltyConfig penalty;
  SmoothnessModel smoothness;
  std::vector<RateRow> rows;
  double fitted_slope_l1 = 0.0;
  double fit_r2 = 0.0;
  bool fit_ok = false;
  double predicted_kappa = 0.0;
  bool pass = false;  // slope >= kappa - 0.1 and r2 >= 0.95

  std::vector<double> deltas() const;
  std::vector<double> errors_l1() const;
  std::vector<double> errors_l2() const;
  std::vector<double> e_eta() const;
  std::vector<double> gammas() const;
};

struct SweepOptions {
  int threads = 1;
  SolverOptions solver;
  SmoothnessOptions smoothness;
};

// Geometric grid "start:end:count".
std::vector<double> parse_delta_grid(const std::string& text);
std::vector<double> geometric_grid(double start, double end, int count);

RateReport rate_sweep(const ProblemSpec& spec, const RuleConfig& rule, const PenaltyConfig& penalty,
                      const std::vector<double>& delta_grid, const SweepOptions& options = {});

}  // namespace qsparse
