#pragma once

#include <memory>
#include <optional>
#include <variant>

#include "qsparse/seq_vec.hpp"

namespace qsparse {

enum class OpKind { Diagonal, Dense, Stacked };

// Bounded linear forward operator A : R^N -> R^M with exact adjoint.
//
//   Diagonal  A = diag(sigma), sigma_k > 0 and nonincreasing
//   Dense     explicit M x N matrix
//   Stacked   [B; sqrt(beta) I] for a base operator B and ridge weight beta,
//             so that ||A x||^2 = ||B x||^2 + beta ||x||^2
//
// Operators are immutable after construction and cheap to copy (a Stacked
// operator shares its base).
class LinOp {
 public:
  // The empty operator on R^0; a placeholder until a real one is assigned.
  LinOp() = default;

  static LinOp diagonal(Vector sigma);
  static LinOp dense(Matrix m);
  static LinOp stacked(LinOp base, double ridge_weight);

  OpKind kind() const noexcept;
  Index domain_dim() const noexcept;
  Index range_dim() const noexcept;

  Vector apply(const Vector& x) const;
  Vector adjoint_apply(const Vector& v) const;

  // Accessors for the representation; each throws InvalidArgument when
  // called on the wrong kind.
  const Vector& singular_values() const;
  const Matrix& matrix() const;
  const LinOp& base() const;
  double ridge_weight() const;

  Matrix to_dense() const;

 private:
  struct Diagonal {
    Vector sigma;
  };
  struct Dense {
    Matrix m;
  };
  struct Stacked {
    std::shared_ptr<const LinOp> base;
    double ridge_weight;
  };

  explicit LinOp(std::variant<Diagonal, Dense, Stacked> rep) : rep_(std::move(rep)) {}

  std::variant<Diagonal, Dense, Stacked> rep_{Diagonal{}};
};

SeqVec apply(const LinOp& op, const SeqVec& x);
SeqVec adjoint_apply(const LinOp& op, const SeqVec& v);

// Representers f^(k) with A* f^(k) = e^(k). For a Diagonal operator only the
// norms 1/sigma_k are stored; otherwise column k of `vectors` is f^(k), the
// least-norm solution of A* f = e^(k).
struct Representers {
  Vector norms;
  std::optional<Matrix> vectors;
};

Representers representer_norms(const LinOp& op);

// Upper estimate of ||A||: exact for Diagonal, otherwise power iteration on
// A*A with a fixed seed, inflated by 1.01.
double op_norm_estimate(const LinOp& op);

// Thin SVD A = U diag(s) V^T with s > 0. For a Diagonal operator the bases
// are the identity and left empty (identity_basis = true).
struct SingularSystem {
  Vector values;
  Matrix left;
  Matrix right;
  bool identity_basis = false;

  // Coefficients of x in the right singular basis, V^T x.
  Vector to_right(const Vector& x) const;
  Vector from_right(const Vector& c) const;
  Vector from_left(const Vector& c) const;
};

SingularSystem singular_system(const LinOp& op);

// (A*A)^{theta/2} x, realized spectrally.
Vector fractional_normal_power(const SingularSystem& sys, double theta, const Vector& x);

}  // namespace qsparse
