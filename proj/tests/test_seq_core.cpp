#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "qsparse/error.hpp"
#include "qsparse/lin_op.hpp"
#include "qsparse/serialization.hpp"

using namespace qsparse;

namespace {

Vector random_vector(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  Vector v(n);
  for (Index k = 0; k < n; ++k) v[k] = g(rng);
  return v;
}

Matrix random_matrix(std::mt19937_64& rng, Index m, Index n) {
  Matrix a(m, n);
  for (Index c = 0; c < n; ++c) a.col(c) = random_vector(rng, m);
  return a;
}

LinOp power_diagonal(Index n, double a) {
  Vector s(n);
  for (Index k = 0; k < n; ++k) s[k] = std::pow(static_cast<double>(k + 1), -a);
  return LinOp::diagonal(s);
}

}  // namespace

TEST_CASE("norm examples") {
  CHECK(norm(SeqVec{3, 4}, Norm::L2) == doctest::Approx(5.0));
  CHECK(norm(SeqVec{3, 4}, Norm::L1) == doctest::Approx(7.0));
  CHECK(norm(SeqVec{-3, 4, 0}, Norm::Linf) == doctest::Approx(4.0));
}

TEST_CASE("SeqVec rejects non-finite and empty input") {
  CHECK_THROWS_AS(SeqVec({1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidArgument);
  CHECK_THROWS_AS(SeqVec({std::numeric_limits<double>::infinity()}), InvalidArgument);
  CHECK_THROWS_AS(SeqVec(Vector(0)), InvalidArgument);
  CHECK(SeqVec().empty());
  CHECK(SeqVec::zeros(3) == SeqVec{0, 0, 0});
}

TEST_CASE("norm ordering on random vectors") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 40);
  for (int i = 0; i < 1000; ++i) {
    const SeqVec x(random_vector(rng, len(rng)));
    const double inf = norm(x, Norm::Linf);
    const double two = norm(x, Norm::L2);
    const double one = norm(x, Norm::L1);
    CHECK(inf <= two * (1 + 1e-15));
    CHECK(two <= one * (1 + 1e-15));
  }
}

TEST_CASE("apply examples") {
  const LinOp d = LinOp::diagonal(Vector::Map(std::vector<double>{1.0, 0.5}.data(), 2));
  CHECK(apply(d, SeqVec{2, 2}) == SeqVec{2, 1});
  CHECK(adjoint_apply(d, SeqVec{4, 6}) == SeqVec{4, 3});
  Matrix m(2, 2);
  m << 1, 1, 0, 1;
  CHECK(apply(LinOp::dense(m), SeqVec{1, 1}) == SeqVec{2, 1});
  CHECK_THROWS_AS(apply(d, SeqVec{1, 2, 3}), DimensionMismatch);
  CHECK_THROWS_AS(adjoint_apply(LinOp::dense(Matrix::Ones(3, 2)), SeqVec{1, 2}), DimensionMismatch);
}

TEST_CASE("diagonal operators must be positive and nonincreasing") {
  Vector inc(2);
  inc << 0.5, 1.0;
  CHECK_THROWS_AS(LinOp::diagonal(inc), InvalidArgument);
  Vector zero(2);
  zero << 1.0, 0.0;
  CHECK_THROWS_AS(LinOp::diagonal(zero), InvalidArgument);
  CHECK_THROWS_AS(LinOp::stacked(power_diagonal(3, 1), -1.0), InvalidArgument);
}

TEST_CASE("adjoint consistency for every operator kind") {
  std::mt19937_64 rng(5);
  const LinOp diag = power_diagonal(30, 1.5);
  const LinOp dense = LinOp::dense(random_matrix(rng, 25, 30));
  const LinOp stacked = LinOp::stacked(dense, 0.3);
  const LinOp nested = LinOp::stacked(LinOp::stacked(diag, 0.1), 2.0);
  for (const LinOp* op : {&diag, &dense, &stacked, &nested}) {
    for (int i = 0; i < 100; ++i) {
      const Vector x = random_vector(rng, op->domain_dim());
      const Vector v = random_vector(rng, op->range_dim());
      const Vector ax = op->apply(x);
      const Vector atv = op->adjoint_apply(v);
      const double scale = v.norm() * ax.norm() + atv.norm() * x.norm();
      CHECK(std::abs(v.dot(ax) - atv.dot(x)) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("stacked operator identity") {
  std::mt19937_64 rng(6);
  const LinOp base = LinOp::dense(random_matrix(rng, 8, 6));
  const double beta = 0.7;
  const LinOp st = LinOp::stacked(base, beta);
  CHECK(st.range_dim() == 14);
  CHECK(st.domain_dim() == 6);
  for (int i = 0; i < 50; ++i) {
    const Vector x = random_vector(rng, 6);
    const double lhs = st.apply(x).squaredNorm();
    const double rhs = base.apply(x).squaredNorm() + beta * x.squaredNorm();
    CHECK(std::abs(lhs - rhs) <= 1e-12 * rhs);
  }
  // Explicit block form.
  Matrix expect(14, 6);
  expect.topRows(8) = base.matrix();
  expect.bottomRows(6) = std::sqrt(beta) * Matrix::Identity(6, 6);
  CHECK((st.to_dense() - expect).norm() <= 1e-14);
}

TEST_CASE("representer norm examples") {
  const Representers diag = representer_norms(power_diagonal(4, 1.0));
  for (Index k = 0; k < 4; ++k) CHECK(diag.norms[k] == doctest::Approx(k + 1.0).epsilon(1e-15));
  CHECK_FALSE(diag.vectors.has_value());

  const Representers id = representer_norms(LinOp::dense(Matrix::Identity(3, 3)));
  for (Index k = 0; k < 3; ++k) CHECK(id.norms[k] == doctest::Approx(1.0));

  Matrix m(2, 2);
  m << 2, 0, 0, 1;
  const Representers r = representer_norms(LinOp::dense(m));
  CHECK(r.norms[0] == doctest::Approx(0.5));
  CHECK(r.norms[1] == doctest::Approx(1.0));
}

TEST_CASE("stored representers satisfy A* f = e_k and are least-norm") {
  std::mt19937_64 rng(8);
  const Matrix a = random_matrix(rng, 20, 12);
  const LinOp op = LinOp::dense(a);
  const Representers r = representer_norms(op);
  REQUIRE(r.vectors.has_value());
  // Oracle: least-norm solutions via the pseudo-inverse of A^T from a
  // complete orthogonal decomposition.
  const Matrix pinv_t = a.transpose().completeOrthogonalDecomposition().pseudoInverse();
  for (Index k = 0; k < 12; ++k) {
    const Vector f = r.vectors->col(k);
    Vector e = Vector::Zero(12);
    e[k] = 1.0;
    CHECK((op.adjoint_apply(f) - e).norm() <= 1e-10);
    CHECK((f - pinv_t.col(k)).norm() <= 1e-10 * pinv_t.col(k).norm());
    CHECK(r.norms[k] == doctest::Approx(f.norm()).epsilon(1e-12));
  }
}

TEST_CASE("rank deficiency is reported") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1.0;
  CHECK_THROWS_AS(representer_norms(LinOp::dense(m)), RankDeficient);
  CHECK_THROWS_AS(representer_norms(LinOp::dense(Matrix::Ones(2, 3))), RankDeficient);
  CHECK_THROWS_AS(singular_system(LinOp::dense(m)), RankDeficient);
}

TEST_CASE("operator norm estimate examples") {
  Vector s(2);
  s << 1.0, 0.5;
  const double d = op_norm_estimate(LinOp::diagonal(s));
  CHECK(d >= 1.0);
  CHECK(d == doctest::Approx(1.01));
  const double id = op_norm_estimate(LinOp::dense(Matrix::Identity(5, 5)));
  CHECK(id >= 1.0);
  CHECK(id <= 1.02);
  Matrix nil(2, 2);
  nil << 0, 1, 0, 0;
  const double n = op_norm_estimate(LinOp::dense(nil));
  CHECK(n >= 1.0);
  CHECK(n <= 1.02);
}

TEST_CASE("operator norm estimate bounds the spectral norm") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10; ++i) {
    const LinOp op = LinOp::stacked(LinOp::dense(random_matrix(rng, 15, 10)), 0.2 * i);
    const double exact = Eigen::JacobiSVD<Matrix>(op.to_dense()).singularValues()[0];
    const double est = op_norm_estimate(op);
    CHECK(est >= exact);
    CHECK(est <= 1.02 * exact);
  }
}

TEST_CASE("singular system reconstructs the operator") {
  std::mt19937_64 rng(10);
  const LinOp op = LinOp::dense(random_matrix(rng, 9, 6));
  const SingularSystem sys = singular_system(op);
  const Matrix rebuilt = sys.left * sys.values.asDiagonal() * sys.right.transpose();
  CHECK((rebuilt - op.matrix()).norm() <= 1e-12 * op.matrix().norm());
  const Vector x = random_vector(rng, 6);
  CHECK((sys.from_right(sys.to_right(x)) - x).norm() <= 1e-12 * x.norm());

  const SingularSystem dsys = singular_system(power_diagonal(5, 1.0));
  CHECK(dsys.identity_basis);
  CHECK(dsys.to_right(x.head(5)) == x.head(5));
}

TEST_CASE("fractional normal power matches the eigendecomposition of A*A") {
  std::mt19937_64 rng(12);
  const LinOp op = LinOp::dense(random_matrix(rng, 10, 7));
  const Matrix ata = op.matrix().transpose() * op.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> es(ata);
  const double theta = 0.6;
  const Vector lam = es.eigenvalues().array().pow(theta / 2.0);
  const Matrix power = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  const Vector x = random_vector(rng, 7);
  const Vector got = fractional_normal_power(singular_system(op), theta, x);
  CHECK((got - power * x).norm() <= 1e-10 * (power * x).norm());

  const LinOp d = power_diagonal(6, 1.0);
  const Vector w = Vector::Ones(6);
  const Vector gd = fractional_normal_power(singular_system(d), 0.5, w);
  for (Index k = 0; k < 6; ++k) CHECK(gd[k] == doctest::Approx(std::pow(k + 1.0, -0.5)));
}

TEST_CASE("operator JSON round trip") {
  std::mt19937_64 rng(13);
  const LinOp ops[] = {power_diagonal(5, 1.0), LinOp::dense(random_matrix(rng, 3, 4)),
                       LinOp::stacked(LinOp::dense(random_matrix(rng, 4, 4)), 0.25)};
  for (const LinOp& op : ops) {
    const Json j = to_json(op);
    const LinOp back = lin_op_from_json(j);
    CHECK(back.kind() == op.kind());
    CHECK(back.to_dense() == op.to_dense());
    CHECK(op_hash(back) == op_hash(op));
  }
  CHECK(to_json(power_diagonal(2, 1.0)).dump() == R"({"kind":"diagonal","sigma":[1.0,0.5]})");
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  CHECK(to_json(LinOp::dense(m))["data"] == Json::array({1.0, 2.0, 3.0, 4.0}));
  CHECK_THROWS_AS(lin_op_from_json(Json::parse(R"({"kind":"diagonal","sigma":[1],"extra":1})")),
                  InvalidArgument);
  CHECK_THROWS_AS(lin_op_from_json(Json::parse(R"({"kind":"dense","rows":2,"cols":2,"data":[1,2,3]})")),
                  DimensionMismatch);
}
