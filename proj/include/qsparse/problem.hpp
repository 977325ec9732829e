#pragma once

#include <cstdint>

#include "qsparse/lin_op.hpp"
#include "qsparse/seq_vec.hpp"

namespace qsparse {

// An instance of A x = y with known exact solution and noisy data
// y_delta = y + delta * u, ||u|| = 1.
struct Problem {
  LinOp op;
  SeqVec x_dagger;
  SeqVec y;
  double delta = 0.0;
  SeqVec y_delta;
  std::uint64_t noise_seed = 0;
};

// Validates dimensions and the exact-data relation y = A x_dagger.
void validate(const Problem& p);

}  // namespace qsparse
