#include "qsparse/solvers.hpp"

#include <cmath>
#include <optional>
#include <vector>

#include "qsparse/error.hpp"

namespace qsparse {

namespace {

// Diagonal of A*A when it is diagonal (Diagonal and Stacked-over-Diagonal).
std::optional<Vector> diagonal_normal_operator(const LinOp& op) {
  switch (op.kind()) {
    case OpKind::Diagonal:
      return op.singular_values().cwiseAbs2();
    case OpKind::Stacked:
      if (auto base = diagonal_normal_operator(op.base())) {
        return Vector(base->array() + op.ridge_weight());
      }
      return std::nullopt;
    case OpKind::Dense:
      return std::nullopt;
  }
  return std::nullopt;
}

void check_data(const LinOp& op, const Vector& data) {
  if (data.size() != op.range_dim()) {
    throw DimensionMismatch("solve: data length " + std::to_string(data.size()) +
                            " does not match operator range " + std::to_string(op.range_dim()));
  }
  if (!data.allFinite()) throw InvalidArgument("solve: non-finite data");
}

// l1 weight and l2 (unhalved-by-convention 1/2 ||x||^2) weight of the penalty.
struct Weights {
  double l1 = 0.0;
  double ridge = 0.0;  // coefficient of 1/2 ||x||^2
};

Weights weights_of(const PenaltyConfig& c) {
  switch (c.family) {
    case PenaltyFamily::L1:
      return {c.reg_param, 0.0};
    case PenaltyFamily::ElasticNet:
      return {c.reg_param * c.eta, c.reg_param};
    case PenaltyFamily::L2:
      return {0.0, 2.0 * c.reg_param};
  }
  return {};
}

SolveResult finish(const LinOp& op, const Vector& data, const PenaltyConfig& config, Vector x,
                   int iterations, double tol) {
  SolveResult r;
  const Vector residual = op.apply(x) - data;
  r.discrepancy = residual.norm();
  r.objective = 0.5 * residual.squaredNorm() + penalty_value(config, x);
  r.optimality_residual = optimality_residual(op, data, config, x);
  r.iterations = iterations;
  r.converged = r.optimality_residual <= tol;
  r.x = SeqVec(std::move(x));
  return r;
}

SolveResult closed_form(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                        const Vector& normal_diag, double tol) {
  const Weights w = weights_of(config);
  const Vector z = op.adjoint_apply(data);
  Vector x = soft_threshold(z, w.l1);
  x.array() /= normal_diag.array() + w.ridge;
  return finish(op, data, config, std::move(x), 0, tol);
}

// With the signs s of x fixed, the minimizer restricted to the support S of x
// solves (A_S* A_S + ridge I) x_S = A_S* b - l1 s. The solution replaces x only
// if its signs agree with s and its optimality residual is smaller, so a
// wrong support guess costs nothing.
Vector refine_on_support(const LinOp& op, const Vector& data, const PenaltyConfig& config, const Weights& w,
                         Vector x) {
  constexpr double kMaxDenseEntries = 4e6;
  std::vector<Index> support;
  for (Index k = 0; k < x.size(); ++k) {
    if (x[k] != 0.0) support.push_back(k);
  }
  const Index m = static_cast<Index>(support.size());
  if (m == 0) return x;
  Vector s(m);
  for (Index i = 0; i < m; ++i) s[i] = sign(x[support[i]]);

  Vector xs;
  if (op.kind() == OpKind::Diagonal) {
    const Vector sv = op.singular_values();
    xs.resize(m);
    for (Index i = 0; i < m; ++i) {
      const Index k = support[i];
      xs[i] = (sv[k] * data[k] - w.l1 * s[i]) / (sv[k] * sv[k] + w.ridge);
    }
  } else {
    if (static_cast<double>(op.range_dim()) * static_cast<double>(op.domain_dim()) > kMaxDenseEntries) return x;
    const Matrix a = op.to_dense();
    Matrix as(a.rows(), m);
    for (Index i = 0; i < m; ++i) as.col(i) = a.col(support[i]);
    Matrix normal = as.transpose() * as;
    normal.diagonal().array() += w.ridge;
    const Eigen::LDLT<Matrix> ldlt(normal);
    if (ldlt.info() != Eigen::Success) return x;
    xs = ldlt.solve(as.transpose() * data - w.l1 * s);
  }
  if (!xs.allFinite()) return x;
  Vector candidate = Vector::Zero(x.size());
  for (Index i = 0; i < m; ++i) {
    if (sign(xs[i]) != s[i]) return x;
    candidate[support[i]] = xs[i];
  }
  if (optimality_residual(op, data, config, candidate) < optimality_residual(op, data, config, x)) return candidate;
  return x;
}

SolveResult proximal_gradient(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                              const SolverOptions& options, double tol) {
  const Weights w = weights_of(config);
  const double lip = std::pow(op_norm_estimate(op), 2);
  const double step = 1.0 / lip;
  const Index n = op.domain_dim();

  auto prox = [&](const Vector& z) -> Vector {
    Vector out = soft_threshold(z, step * w.l1);
    if (w.ridge > 0.0) out /= 1.0 + step * w.ridge;
    return out;
  };
  auto objective = [&](const Vector& x, const Vector& ax) {
    return 0.5 * (ax - data).squaredNorm() + penalty_value(config, x);
  };

  Vector x = Vector::Zero(n);
  Vector ax = Vector::Zero(op.range_dim());
  Vector y = x;
  Vector ay = ax;
  double t = 1.0;
  double f = objective(x, ax);

  int it = 0;
  while (it < options.max_iterations) {
    ++it;
    const Vector grad = op.adjoint_apply(ay - data);
    Vector x_new = prox(y - step * grad);
    Vector ax_new = op.apply(x_new);
    const double f_new = objective(x_new, ax_new);

    if (f_new > f && t > 1.0) {
      // Restart: drop momentum and take a plain proximal step from x. That
      // step is accepted even if rounding makes it look like an increase,
      // otherwise the iteration would stall at x.
      y = x;
      ay = ax;
      t = 1.0;
    } else {
      const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double mom = (t - 1.0) / t_new;
      y = x_new + mom * (x_new - x);
      ay = op.apply(y);
      x = std::move(x_new);
      ax = std::move(ax_new);
      f = f_new;
      t = t_new;
    }
    if (it % 10 == 0 && optimality_residual(op, data, config, x) <= tol) break;
  }
  x = refine_on_support(op, data, config, w, std::move(x));
  return finish(op, data, config, std::move(x), it, tol);
}

}  // namespace

void PenaltyConfig::validate() const {
  if (!(reg_param > 0.0) || !std::isfinite(reg_param)) {
    throw InvalidArgument("penalty: regularization parameter must be positive");
  }
  if (family == PenaltyFamily::ElasticNet && (!(eta > 0.0) || !std::isfinite(eta))) {
    throw InvalidArgument("penalty: eta must be positive for the elastic net");
  }
}

const char* to_string(PenaltyFamily f) {
  switch (f) {
    case PenaltyFamily::L1:
      return "l1";
    case PenaltyFamily::ElasticNet:
      return "elastic-net";
    case PenaltyFamily::L2:
      return "l2";
  }
  return "?";
}

PenaltyFamily penalty_family_from_string(const std::string& s) {
  if (s == "l1") return PenaltyFamily::L1;
  if (s == "elastic-net") return PenaltyFamily::ElasticNet;
  if (s == "l2") return PenaltyFamily::L2;
  throw InvalidArgument("unknown penalty family '" + s + "'");
}

double penalty_value(const PenaltyConfig& c, const Vector& x) {
  switch (c.family) {
    case PenaltyFamily::L1:
      return c.reg_param * x.lpNorm<1>();
    case PenaltyFamily::ElasticNet:
      return c.reg_param * (c.eta * x.lpNorm<1>() + 0.5 * x.squaredNorm());
    case PenaltyFamily::L2:
      return c.reg_param * x.squaredNorm();
  }
  return 0.0;
}

Vector soft_threshold(const Vector& z, double threshold) {
  return z.unaryExpr([threshold](double v) { return sign(v) * std::max(std::abs(v) - threshold, 0.0); });
}

Vector prox_elastic_net(const Vector& z, double step, double eta) {
  if (!(step > 0.0) || !(eta > 0.0)) throw InvalidArgument("prox_elastic_net: step and eta must be positive");
  return soft_threshold(z, step * eta) / (1.0 + step);
}

double optimality_residual(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                           const Vector& x) {
  const Weights w = weights_of(config);
  const Vector g = op.adjoint_apply(op.apply(x) - data) + w.ridge * x;
  double worst = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    const double r = x[k] != 0.0 ? std::abs(g[k] + w.l1 * sign(x[k]))
                                 : std::max(std::abs(g[k]) - w.l1, 0.0);
    worst = std::max(worst, r);
  }
  return worst;
}

SolveResult solve_elastic_net(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                              const SolverOptions& options) {
  if (config.family != PenaltyFamily::ElasticNet) {
    throw InvalidArgument("solve_elastic_net: penalty family must be elastic-net");
  }
  return solve(op, data, config, options);
}

SolveResult solve_l1(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                     const SolverOptions& options) {
  if (config.family != PenaltyFamily::L1) throw InvalidArgument("solve_l1: penalty family must be l1");
  return solve(op, data, config, options);
}

SolveResult solve_l2(const LinOp& op, const Vector& data, const PenaltyConfig& config) {
  if (config.family != PenaltyFamily::L2) throw InvalidArgument("solve_l2: penalty family must be l2");
  config.validate();
  check_data(op, data);
  const double tol = 1e-8 * (1.0 + op.adjoint_apply(data).lpNorm<Eigen::Infinity>());
  if (auto diag = diagonal_normal_operator(op)) return closed_form(op, data, config, *diag, tol);

  // (A*A + 2 gamma I) x = A* b
  const Matrix a = op.to_dense();
  Matrix normal = a.transpose() * a;
  normal.diagonal().array() += 2.0 * config.reg_param;
  Eigen::LDLT<Matrix> ldlt(normal);
  Vector x = ldlt.solve(a.transpose() * data);
  return finish(op, data, config, std::move(x), 0, tol);
}

SolveResult solve(const LinOp& op, const Vector& data, const PenaltyConfig& config,
                  const SolverOptions& options) {
  if (config.family == PenaltyFamily::L2) return solve_l2(op, data, config);
  config.validate();
  check_data(op, data);
  const double tol = options.tol_scale * (1.0 + op.adjoint_apply(data).lpNorm<Eigen::Infinity>());

  const auto diag = diagonal_normal_operator(op);
  switch (options.method) {
    case SolverMethod::Auto:
      if (diag) return closed_form(op, data, config, *diag, tol);
      return proximal_gradient(op, data, config, options, tol);
    case SolverMethod::ClosedForm:
      if (!diag) throw InvalidArgument("solve: closed form requires a diagonal normal operator");
      return closed_form(op, data, config, *diag, tol);
    case SolverMethod::ProximalGradient:
      return proximal_gradient(op, data, config, options, tol);
  }
  return proximal_gradient(op, data, config, options, tol);
}

OptimalityReport certify_optimality(const SolveResult& result, const LinOp& op, const Vector& data,
                                    const PenaltyConfig& config) {
  if (config.family == PenaltyFamily::L2) {
    throw InvalidArgument("certify_optimality: only l1 and elastic-net results carry an l1 subgradient");
  }
  const Vector& x = result.x.values();
  const Weights w = weights_of(config);
  // A*(Ax - b) + ridge x + l1 zeta = 0
  const Vector g = op.adjoint_apply(op.apply(x) - data) + w.ridge * x;
  Vector zeta = -g / w.l1;
  Vector xi = config.family == PenaltyFamily::ElasticNet ? Vector(config.eta * zeta + x) : zeta;

  const double support_floor = 1e-12 * x.lpNorm<Eigen::Infinity>();
  double excess = 0.0;
  double mismatch = 0.0;
  for (Index k = 0; k < x.size(); ++k) {
    excess = std::max(excess, std::abs(zeta[k]) - 1.0);
    if (std::abs(x[k]) > support_floor) mismatch = std::max(mismatch, std::abs(zeta[k] - sign(x[k])));
  }
  OptimalityReport rep;
  rep.max_violation = std::max(excess, 0.0) + mismatch;
  rep.zeta = SeqVec(std::move(zeta));
  rep.xi = SeqVec(std::move(xi));
  return rep;
}

}  // namespace qsparse
