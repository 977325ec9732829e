#include "qsparse/lin_op.hpp"

#include <cmath>
#include <random>
#include <string>

#include "qsparse/error.hpp"

namespace qsparse {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dim(Index got, Index want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": expected length " + std::to_string(want) +
                            ", got " + std::to_string(got));
  }
}

}  // namespace

LinOp LinOp::diagonal(Vector sigma) {
  if (sigma.size() == 0) throw InvalidArgument("diagonal operator: empty sigma");
  for (Index k = 0; k < sigma.size(); ++k) {
    if (!std::isfinite(sigma[k]) || sigma[k] <= 0.0) {
      throw InvalidArgument("diagonal operator: sigma_k must be positive and finite");
    }
    if (k > 0 && sigma[k] > sigma[k - 1]) {
      throw InvalidArgument("diagonal operator: sigma must be nonincreasing");
    }
  }
  return LinOp(Diagonal{std::move(sigma)});
}

LinOp LinOp::dense(Matrix m) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidArgument("dense operator: empty matrix");
  if (!m.allFinite()) throw InvalidArgument("dense operator: non-finite entry");
  return LinOp(Dense{std::move(m)});
}

LinOp LinOp::stacked(LinOp base, double ridge_weight) {
  if (!(ridge_weight >= 0.0) || !std::isfinite(ridge_weight)) {
    throw InvalidArgument("stacked operator: ridge weight must be nonnegative");
  }
  return LinOp(Stacked{std::make_shared<const LinOp>(std::move(base)), ridge_weight});
}

OpKind LinOp::kind() const noexcept {
  return std::visit(Overloaded{[](const Diagonal&) { return OpKind::Diagonal; },
                               [](const Dense&) { return OpKind::Dense; },
                               [](const Stacked&) { return OpKind::Stacked; }},
                    rep_);
}

Index LinOp::domain_dim() const noexcept {
  return std::visit(Overloaded{[](const Diagonal& d) { return d.sigma.size(); },
                               [](const Dense& d) { return d.m.cols(); },
                               [](const Stacked& s) { return s.base->domain_dim(); }},
                    rep_);
}

Index LinOp::range_dim() const noexcept {
  return std::visit(
      Overloaded{[](const Diagonal& d) { return d.sigma.size(); },
                 [](const Dense& d) { return d.m.rows(); },
                 [](const Stacked& s) { return s.base->range_dim() + s.base->domain_dim(); }},
      rep_);
}

Vector LinOp::apply(const Vector& x) const {
  check_dim(x.size(), domain_dim(), "apply");
  return std::visit(Overloaded{[&](const Diagonal& d) -> Vector { return d.sigma.cwiseProduct(x); },
                               [&](const Dense& d) -> Vector { return d.m * x; },
                               [&](const Stacked& s) -> Vector {
                                 const Index m = s.base->range_dim();
                                 Vector out(range_dim());
                                 out.head(m) = s.base->apply(x);
                                 out.tail(x.size()) = std::sqrt(s.ridge_weight) * x;
                                 return out;
                               }},
                    rep_);
}

Vector LinOp::adjoint_apply(const Vector& v) const {
  check_dim(v.size(), range_dim(), "adjoint_apply");
  return std::visit(
      Overloaded{[&](const Diagonal& d) -> Vector { return d.sigma.cwiseProduct(v); },
                 [&](const Dense& d) -> Vector { return d.m.transpose() * v; },
                 [&](const Stacked& s) -> Vector {
                   const Index m = s.base->range_dim();
                   const Index n = s.base->domain_dim();
                   Vector out = s.base->adjoint_apply(v.head(m));
                   out += std::sqrt(s.ridge_weight) * v.tail(n);
                   return out;
                 }},
      rep_);
}

const Vector& LinOp::singular_values() const {
  if (const auto* d = std::get_if<Diagonal>(&rep_)) return d->sigma;
  throw InvalidArgument("singular_values: operator is not diagonal");
}

const Matrix& LinOp::matrix() const {
  if (const auto* d = std::get_if<Dense>(&rep_)) return d->m;
  throw InvalidArgument("matrix: operator is not dense");
}

const LinOp& LinOp::base() const {
  if (const auto* s = std::get_if<Stacked>(&rep_)) return *s->base;
  throw InvalidArgument("base: operator is not stacked");
}

double LinOp::ridge_weight() const {
  if (const auto* s = std::get_if<Stacked>(&rep_)) return s->ridge_weight;
  throw InvalidArgument("ridge_weight: operator is not stacked");
}

Matrix LinOp::to_dense() const {
  return std::visit(Overloaded{[](const Diagonal& d) -> Matrix { return d.sigma.asDiagonal(); },
                               [](const Dense& d) -> Matrix { return d.m; },
                               [](const Stacked& s) -> Matrix {
                                 const Index m = s.base->range_dim();
                                 const Index n = s.base->domain_dim();
                                 Matrix out(m + n, n);
                                 out.topRows(m) = s.base->to_dense();
                                 out.bottomRows(n) =
                                     std::sqrt(s.ridge_weight) * Matrix::Identity(n, n);
                                 return out;
                               }},
                    rep_);
}

SeqVec apply(const LinOp& op, const SeqVec& x) { return SeqVec(op.apply(x.values())); }

SeqVec adjoint_apply(const LinOp& op, const SeqVec& v) {
  return SeqVec(op.adjoint_apply(v.values()));
}

Representers representer_norms(const LinOp& op) {
  if (op.kind() == OpKind::Diagonal) {
    return Representers{op.singular_values().cwiseInverse(), std::nullopt};
  }

  // f^(k) = A (A*A)^{-1} e^(k) is the least-norm solution of A* f = e^(k).
  const Matrix a = op.to_dense();
  const Index n = a.cols();
  if (a.rows() < n) throw RankDeficient("representers: operator has fewer rows than columns");
  Matrix gram = a.transpose() * a;
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    gram.diagonal().array() += 1e-12 * gram.trace() / static_cast<double>(n);
    llt.compute(gram);
    if (llt.info() != Eigen::Success) throw RankDeficient("representers: A*A is not positive definite");
  }
  Matrix f = a * llt.solve(Matrix::Identity(n, n));

  const Matrix residual = a.transpose() * f - Matrix::Identity(n, n);
  if (!residual.allFinite() || residual.colwise().norm().maxCoeff() > 1e-8) {
    throw RankDeficient("representers: A* f = e^(k) cannot be solved (rank deficient operator)");
  }
  Vector norms = f.colwise().norm().transpose();
  return Representers{std::move(norms), std::move(f)};
}

double op_norm_estimate(const LinOp& op) {
  if (op.kind() == OpKind::Diagonal) return 1.01 * op.singular_values()[0];

  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  Vector v(op.domain_dim());
  for (Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
  v.normalize();

  double best = 0.0;
  for (int it = 0; it < 500; ++it) {
    const Vector av = op.apply(v);
    best = std::max(best, av.norm());
    Vector w = op.adjoint_apply(av);
    const double wn = w.norm();
    if (wn == 0.0) break;
    v = w / wn;
  }
  return 1.01 * best;
}

Vector SingularSystem::to_right(const Vector& x) const {
  return identity_basis ? x : Vector(right.transpose() * x);
}

Vector SingularSystem::from_right(const Vector& c) const {
  return identity_basis ? c : Vector(right * c);
}

Vector SingularSystem::from_left(const Vector& c) const {
  return identity_basis ? c : Vector(left * c);
}

SingularSystem singular_system(const LinOp& op) {
  SingularSystem sys;
  if (op.kind() == OpKind::Diagonal) {
    sys.values = op.singular_values();
    sys.identity_basis = true;
    return sys;
  }
  const Matrix a = op.to_dense();
  if (a.rows() < a.cols()) throw RankDeficient("singular_system: operator is not injective");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  sys.values = svd.singularValues();
  sys.left = svd.matrixU();
  sys.right = svd.matrixV();
  const double smax = sys.values.size() > 0 ? sys.values[0] : 0.0;
  if (sys.values.size() == 0 || sys.values.minCoeff() <= 1e-14 * smax) {
    throw RankDeficient("singular_system: operator is not injective at working precision");
  }
  return sys;
}

Vector fractional_normal_power(const SingularSystem& sys, double theta, const Vector& x) {
  const Vector scale = sys.values.array().pow(theta);
  return sys.from_right(scale.cwiseProduct(sys.to_right(x)));
}

}  // namespace qsparse
