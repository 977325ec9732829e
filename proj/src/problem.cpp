#include "qsparse/problem.hpp"

#include <algorithm>
#include <string>

#include "qsparse/error.hpp"

namespace qsparse {

void validate(const Problem& p) {
  const Index n = p.op.domain_dim();
  const Index m = p.op.range_dim();
  if (!(p.delta >= 0.0)) throw InvalidArgument("problem: delta must be nonnegative");
  if (p.y_delta.size() != m) {
    throw DimensionMismatch("problem: y_delta has length " + std::to_string(p.y_delta.size()) +
                            ", operator range has dimension " + std::to_string(m));
  }
  if (!p.y.empty() && p.y.size() != m) throw DimensionMismatch("problem: y does not match the operator range");
  if (p.x_dagger.empty()) return;
  if (p.x_dagger.size() != n) throw DimensionMismatch("problem: x_dagger does not match the operator domain");
  if (p.y.empty()) throw InvalidArgument("problem: x_dagger given without exact data y");
  const Vector ax = p.op.apply(p.x_dagger.values());
  if ((ax - p.y.values()).norm() > 1e-12 * std::max(1.0, ax.norm())) {
    throw InvalidArgument("problem: y differs from A x_dagger");
  }
}

}  // namespace qsparse
