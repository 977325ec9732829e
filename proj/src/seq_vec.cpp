#include "qsparse/seq_vec.hpp"

#include <cmath>

#include "qsparse/error.hpp"

namespace qsparse {

SeqVec::SeqVec(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) throw InvalidArgument("SeqVec: empty sequence");
  if (!values_.allFinite()) throw InvalidArgument("SeqVec: non-finite entry");
}

SeqVec::SeqVec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index k = 0;
  for (double x : values) v[k++] = x;
  *this = SeqVec(std::move(v));
}

SeqVec SeqVec::zeros(Index n) { return SeqVec(Vector::Zero(n)); }

double norm(const Vector& x, Norm p) {
  switch (p) {
    case Norm::L1:
      return x.lpNorm<1>();
    case Norm::L2:
      return x.norm();
    case Norm::Linf:
      return x.size() == 0 ? 0.0 : x.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

}  // namespace qsparse
