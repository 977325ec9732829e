#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsparse/lin_op.hpp"
#include "qsparse/seq_vec.hpp"

namespace qsparse {

// ---------------------------------------------------------------------------
// Tabulated index functions
// ---------------------------------------------------------------------------

enum class TableLabel { Phi, PsiHat, Psi, GEta, Dist, BigPhi };

const char* to_string(TableLabel l);

struct IndexFnTable {
  Vector grid;    // strictly increasing, positive
  Vector values;  // nonnegative
  TableLabel label = TableLabel::Phi;

  // Piecewise linear in t. Increasing labels interpolate from the origin
  // below the grid; every label is held constant beyond it.
  double interpolate(double t) const;

  // Checks the monotonicity invariant for the label (nondecreasing for
  // phi/psi_hat/psi/g_eta, nonincreasing for dist/Phi), with slack `tol`
  // relative to the largest value.
  bool monotone(double tol = 1e-12) const;
};

// Geometric grid of `count` points from lo to hi (inclusive).
Vector log_grid(double lo, double hi, int count);

// ---------------------------------------------------------------------------
// Distance function  d(R) = min_{||v|| <= R} ||x_dagger - A* v||
// ---------------------------------------------------------------------------

struct DistanceEvaluation {
  double r = 0.0;
  double value = 0.0;
  SeqVec v_r;  // minimizing source element, ||v_r|| <= R
  SeqVec u_r;  // x_dagger - A* v_r
  double multiplier = 0.0;
};

// Works in the singular basis of A, where the constrained least-squares
// problem decouples: for multiplier nu >= 0,
//   c_i(nu) = s_i b_i / (s_i^2 + nu),   residual_i(nu) = nu b_i / (s_i^2 + nu),
// with b = V^T x_dagger. ||c(nu)|| decreases and ||residual(nu)|| increases in nu.
class DistanceFunction {
 public:
  DistanceFunction(const LinOp& op, const Vector& x_dagger);

  double value(double r) const;
  DistanceEvaluation evaluate(double r) const;

  // ||v(0)||: the smallest radius with d(R) = 0 (x_dagger = A* v(0)).
  double source_radius() const noexcept { return source_radius_; }

  // Phi(R) = d(R)^2 / R
  double big_phi(double r) const;
  // psi_hat(t) = d(Phi^{-1}(t))^2, computed by bisection on the multiplier.
  double psi_hat(double t) const;

  // Source-condition detection: d(radius_factor * ||x_dagger||) below
  // rel_threshold * ||x_dagger||.
  bool in_range(double rel_threshold = 1e-12, double radius_factor = 1e6) const;

  double x_norm() const noexcept { return x_norm_; }
  const SingularSystem& system() const noexcept { return sys_; }

 private:
  double radius_at(double nu) const;
  double distance_at(double nu) const;
  double multiplier_for(double r) const;

  SingularSystem sys_;
  Vector coeff_;
  double x_norm_ = 0.0;
  double source_radius_ = 0.0;
};

DistanceEvaluation distance_fn(const LinOp& op, const SeqVec& x_dagger, double r);

// ---------------------------------------------------------------------------
// phi(t) = min_n ( sum_{k>n} |x_k| + t sum_{k<=n} ||f^(k)|| ),  n in {0..N}
// ---------------------------------------------------------------------------

class PhiFunction {
 public:
  PhiFunction(const Vector& x_dagger, const Vector& representer_norms);

  double operator()(double t) const;
  // Smallest minimizing n.
  Index argmin(double t) const;

 private:
  Vector tail_;    // tail_[n] = sum_{k>n} |x_k|, n = 0..N
  Vector prefix_;  // prefix_[n] = sum_{k<=n} ||f^(k)||
};

IndexFnTable phi_fn(const SeqVec& x_dagger, const Vector& representer_norms, const Vector& t_grid);

// ---------------------------------------------------------------------------
// psi_hat, its concave majorant psi, and Phi
// ---------------------------------------------------------------------------

struct SmoothnessOptions {
  double range_rel_threshold = 1e-12;
  double range_radius_factor = 1e6;
};

struct PsiResult {
  IndexFnTable psi_hat;
  IndexFnTable psi;       // concave majorant, or t -> t when in range
  IndexFnTable big_phi;   // Phi on the radii Phi^{-1}(t_grid)
  bool in_range = false;
  double r0 = 0.0;        // source radius when in range, 0 otherwise
};

PsiResult psi_fn(const LinOp& op, const SeqVec& x_dagger, const Vector& t_grid,
                 const SmoothnessOptions& options = {});

// Least concave majorant through the origin of the step function
// t -> values[i+1] on [t_i, t_{i+1}], sampled at the grid. Dominates any
// nondecreasing function whose grid samples are `values`.
Vector concave_majorant(const Vector& grid, const Vector& values);

IndexFnTable g_eta_fn(const IndexFnTable& phi, const IndexFnTable& psi, double eta, double big_k);

// Rate functions of a concrete problem, evaluated at arbitrary t.
class RateFunctions {
 public:
  RateFunctions(const LinOp& op, const SeqVec& x_dagger, const SmoothnessOptions& options = {});

  double phi(double t) const { return phi_(t); }
  double psi_hat(double t) const { return dist_.psi_hat(t); }
  double psi(double t) const;
  double big_k() const noexcept { return in_range_ ? dist_.source_radius() : 2.0; }
  bool in_range() const noexcept { return in_range_; }
  double g_eta(double t, double eta) const { return 2.0 * eta * phi(t) + big_k() * psi(t); }

  const DistanceFunction& distance() const noexcept { return dist_; }
  const IndexFnTable& psi_table() const noexcept { return psi_table_; }

 private:
  DistanceFunction dist_;
  PhiFunction phi_;
  bool in_range_;
  IndexFnTable psi_table_;
};

// ---------------------------------------------------------------------------
// Infeasibility of the source condition for the elastic-net subgradient
// ---------------------------------------------------------------------------

// Approximates min_{||v|| <= r_max} || xi - A* v ||_inf, xi = eta sgn(x) + x,
// by projected subgradient descent (Polyak steps towards 0). Returns the best
// value reached, an upper estimate of the infimum.
double infeasibility_gap(const LinOp& op, const SeqVec& x_dagger, double eta, double r_max,
                         int iterations = 500);

// ---------------------------------------------------------------------------
// Exponent fitting
// ---------------------------------------------------------------------------

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least-squares fit of log y = slope log x + intercept.
ExponentFit fit_exponent(const std::vector<double>& xs, const std::vector<double>& ys);

// ---------------------------------------------------------------------------
// Variational inequalities
// ---------------------------------------------------------------------------

struct ViCheckConfig {
  int samples = 10000;
  double eta = 1.0;
  double rel_slack = 1e-9;
  std::uint64_t seed = 1;
};

struct ViResult {
  int samples = 0;
  int violations = 0;
  double worst = 0.0;  // max (lhs - rhs) / scale; <= rel_slack when satisfied
};

struct ViReport {
  ViResult l1;           // ||x-xd||_1 <= ||x||_1 - ||xd||_1 + 2 phi(t)
  ViResult l2;           // 1/4||x-xd||^2 <= 1/2||x||^2 - 1/2||xd||^2 + 2 psi_hat(t)
  ViResult elastic_net;  // E_eta <= R_eta(x) - R_eta(xd) + g_eta(t)
  bool in_range = false;
  double big_k = 0.0;
};

// Samples sparse, dense and rescaled perturbations x of x_dagger and checks
// the three inequalities with t = ||A (x - x_dagger)||.
ViReport vi_check(const LinOp& op, const SeqVec& x_dagger, const ViCheckConfig& config,
                  const SmoothnessOptions& options = {});

}  // namespace qsparse
