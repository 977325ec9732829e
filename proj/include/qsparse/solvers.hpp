#pragma once

#include <string>

#include "qsparse/lin_op.hpp"
#include "qsparse/problem.hpp"
#include "qsparse/seq_vec.hpp"

namespace qsparse {

enum class PenaltyFamily { L1, ElasticNet, L2 };

// Tikhonov functional  1/2 ||A x - b||^2 + P(x)  with
//   L1          P(x) = gamma ||x||_1
//   ElasticNet  P(x) = beta (eta ||x||_1 + 1/2 ||x||_2^2)
//   L2          P(x) = gamma ||x||_2^2          (penalty not halved)
// reg_param holds gamma or beta; eta is only read for ElasticNet.
struct PenaltyConfig {
  PenaltyFamily family = PenaltyFamily::L1;
  double eta = 1.0;
  double reg_param = 1.0;

  static PenaltyConfig l1(double gamma) { return {PenaltyFamily::L1, 1.0, gamma}; }
  static PenaltyConfig elastic_net(double beta, double eta) {
    return {PenaltyFamily::ElasticNet, eta, beta};
  }
  static PenaltyConfig l2(double gamma) { return {PenaltyFamily::L2, 1.0, gamma}; }

  PenaltyConfig with_reg_param(double value) const {
    PenaltyConfig c = *this;
    c.reg_param = value;
    return c;
  }

  void validate() const;
};

const char* to_string(PenaltyFamily f);
PenaltyFamily penalty_family_from_string(const std::string& s);

double penalty_value(const PenaltyConfig& config, const Vector& x);

enum class SolverMethod {
  Auto,              // closed form when A*A is diagonal, proximal gradient otherwise
  ProximalGradient,  // always iterate (L1 / ElasticNet)
  ClosedForm         // requires a diagonal normal operator
};

struct SolverOptions {
  SolverMethod method = SolverMethod::Auto;
  double tol_scale = 1e-8;
  int max_iterations = 50000;
};

struct SolveResult {
  SeqVec x;
  int iterations = 0;
  double objective = 0.0;
  double discrepancy = 0.0;
  double optimality_residual = 0.0;
  bool converged = false;
};

// prox of step * (eta |.| + 1/2 (.)^2), componentwise.
Vector prox_elastic_net(const Vector& z, double step, double eta);
Vector soft_threshold(const Vector& z, double threshold);

SolveResult solve_elastic_net(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                              const SolverOptions& options = {});
SolveResult solve_l1(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                     const SolverOptions& options = {});
SolveResult solve_l2(const LinOp& op, const Vector& data, const PenaltyConfig& config);

// Dispatch on config.family.
SolveResult solve(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                  const SolverOptions& options = {});

inline SolveResult solve_elastic_net(const Problem& p, const PenaltyConfig& c,
                                     const SolverOptions& o = {}) {
  return solve_elastic_net(p.op, p.y_delta.values(), c, o);
}
inline SolveResult solve_l1(const Problem& p, const PenaltyConfig& c, const SolverOptions& o = {}) {
  return solve_l1(p.op, p.y_delta.values(), c, o);
}
inline SolveResult solve_l2(const Problem& p, const PenaltyConfig& c) {
  return solve_l2(p.op, p.y_delta.values(), c);
}
inline SolveResult solve(const Problem& p, const PenaltyConfig& c, const SolverOptions& o = {}) {
  return solve(p.op, p.y_delta.values(), c, o);
}

// l-infinity distance of 0 to the subdifferential of the functional at x.
double optimality_residual(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                           const Vector& x);

struct OptimalityReport {
  SeqVec zeta;  // reconstructed l1 subgradient, |zeta_k| <= 1
  SeqVec xi;    // eta * zeta + x (ElasticNet), zeta (L1)
  double max_violation = 0.0;
};

// Reconstructs zeta from the first-order condition and measures how far it
// is from a valid l1 subgradient at x.
OptimalityReport certify_optimality(const SolveResult& result, const LinOp& op, const Vector& data,
                                    const PenaltyConfig& config);
inline OptimalityReport certify_optimality(const SolveResult& r, const Problem& p,
                                           const PenaltyConfig& c) {
  return certify_optimality(r, p.op, p.y_delta.values(), c);
}

}  // namespace qsparse
