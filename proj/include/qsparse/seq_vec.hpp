#pragma once

#include <initializer_list>

#include <Eigen/Dense>

namespace qsparse {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Norm { L1, L2, Linf };

// A truncated real sequence x = (x_1, ..., x_N), the finite stand-in for an
// element of l^2. Entries are always finite. A default-constructed SeqVec is
// empty and only exists so results can be declared before they are filled.
class SeqVec {
 public:
  SeqVec() = default;
  explicit SeqVec(Vector values);
  SeqVec(std::initializer_list<double> values);

  static SeqVec zeros(Index n);

  Index size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.size() == 0; }
  double operator[](Index k) const { return values_[k]; }

  const Vector& values() const noexcept { return values_; }
  operator const Vector&() const noexcept { return values_; }

  friend bool operator==(const SeqVec& a, const SeqVec& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Vector values_;
};

double norm(const Vector& x, Norm p);
inline double norm(const SeqVec& x, Norm p) { return norm(x.values(), p); }

// sgn with sgn(0) = 0.
inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace qsparse
