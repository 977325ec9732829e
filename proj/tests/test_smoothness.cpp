#include <doctest.h>

#include <cmath>
#include <random>

#include "qsparse/error.hpp"
#include "qsparse/experiments.hpp"
#include "qsparse/smoothness.hpp"

using namespace qsparse;

namespace {

Vector power_seq(Index n, double p, bool alternate = false) {
  Vector v(n);
  for (Index k = 0; k < n; ++k) {
    v[k] = std::pow(static_cast<double>(k + 1), p) * (alternate && k % 2 ? -1.0 : 1.0);
  }
  return v;
}

LinOp power_diagonal(Index n, double a) { return LinOp::diagonal(power_seq(n, -a)); }

// Projected gradient on v for min_{||v|| <= r} ||x - A* v||.
double projected_gradient_distance(const LinOp& op, const Vector& x, double r, int iterations) {
  const double lip = std::pow(op_norm_estimate(op), 2);
  Vector v = Vector::Zero(op.range_dim());
  Vector y = v;
  double t = 1.0;
  for (int i = 0; i < iterations; ++i) {
    const Vector grad = op.apply(op.adjoint_apply(y) - x);
    Vector nv = y - grad / lip;
    if (nv.norm() > r) nv *= r / nv.norm();
    const double nt = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    y = nv + ((t - 1) / nt) * (nv - v);
    v = nv;
    t = nt;
  }
  return (x - op.adjoint_apply(v)).norm();
}

// Exact min_{||v|| <= r} ||xi - diag(s) v||_inf by bisection on the level.
double water_filling_gap(const Vector& s, const Vector& xi, double r) {
  auto cost = [&](double g) {
    return ((xi.cwiseAbs().array() - g).max(0.0) / s.array()).matrix().norm();
  };
  double lo = 0.0;
  double hi = xi.lpNorm<Eigen::Infinity>();
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cost(mid) <= r ? hi : lo) = mid;
  }
  return hi;
}

// Least concave majorant at the grid of the point set {(0,0)} u {(t_i, v_{i+1})}
// by checking every chord.
Vector brute_majorant(const Vector& t, const Vector& v) {
  const Index n = t.size();
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  for (Index i = 0; i < n; ++i) pts.emplace_back(t[i], v[std::min(i + 1, n - 1)]);
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    double best = 0.0;
    for (const auto& p : pts) {
      for (const auto& q : pts) {
        if (p.first <= t[i] && t[i] <= q.first) {
          const double w = q.first > p.first ? (t[i] - p.first) / (q.first - p.first) : 0.0;
          best = std::max(best, (1 - w) * p.second + w * q.second);
        }
      }
    }
    out[i] = best;
  }
  return out;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("log grid and table interpolation") {
  const Vector g = log_grid(1e-4, 1.0, 5);
  CHECK(g[0] == 1e-4);
  CHECK(g[2] == doctest::Approx(1e-2));
  CHECK(g[4] == 1.0);
  CHECK_THROWS_AS(log_grid(0.0, 1.0, 3), InvalidArgument);

  IndexFnTable inc{g, g * 2.0, TableLabel::Phi};
  CHECK(inc.interpolate(0.0) == 0.0);
  CHECK(inc.interpolate(5e-5) == doctest::Approx(1e-4));
  CHECK(inc.interpolate(5e-3) == doctest::Approx(1e-2));
  CHECK(inc.interpolate(10.0) == 2.0);
  CHECK(inc.monotone());
  IndexFnTable dec{g, Vector(g.cwiseInverse()), TableLabel::Dist};
  CHECK(dec.monotone());
  CHECK(dec.interpolate(1e-9) == doctest::Approx(1e4));
  dec.label = TableLabel::Psi;
  CHECK_FALSE(dec.monotone());
}

TEST_CASE("distance function: source condition met") {
  const LinOp op = power_diagonal(30, 1.0);
  const Vector w = power_seq(30, -1.0, true);
  const Vector x = op.adjoint_apply(w);
  const DistanceFunction d(op, x);
  CHECK(d.source_radius() == doctest::Approx(w.norm()).epsilon(1e-14));
  CHECK(d.value(w.norm()) == 0.0);
  CHECK(d.value(2.0 * w.norm()) == 0.0);
  CHECK(d.value(0.5 * w.norm()) > 0.0);
  CHECK(d.in_range());

  // The same through a dense operator with a rotated singular basis.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Matrix q1(30, 30);
  Matrix q2(30, 30);
  for (Index i = 0; i < 30; ++i) {
    for (Index j = 0; j < 30; ++j) {
      q1(i, j) = g(rng);
      q2(i, j) = g(rng);
    }
  }
  const Matrix u = Eigen::HouseholderQR<Matrix>(q1).householderQ();
  const Matrix v = Eigen::HouseholderQR<Matrix>(q2).householderQ();
  const LinOp dense = LinOp::dense(u * op.singular_values().asDiagonal() * v.transpose());
  const Vector xr = v * power_seq(30, -2.0);
  const DistanceFunction dd(dense, xr);
  const DistanceFunction ddiag(op, power_seq(30, -2.0));
  for (double r : {0.1, 1.0, 3.0}) CHECK(dd.value(r) == doctest::Approx(ddiag.value(r)).epsilon(1e-9));
}

TEST_CASE("distance function matches a projected-gradient oracle") {
  const LinOp op = power_diagonal(50, 1.0);
  const Vector x = power_seq(50, -2.0);
  const DistanceEvaluation e = distance_fn(op, SeqVec(x), 1.0);
  CHECK(e.value == doctest::Approx(projected_gradient_distance(op, x, 1.0, 200000)).epsilon(1e-6));

  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Matrix a(12, 10);
  for (Index i = 0; i < 12; ++i) {
    for (Index j = 0; j < 10; ++j) a(i, j) = g(rng) / (1.0 + j);
  }
  const LinOp dense = LinOp::dense(a);
  Vector xd(10);
  for (Index j = 0; j < 10; ++j) xd[j] = g(rng);
  for (double r : {0.3, 1.0, 4.0}) {
    CHECK(distance_fn(dense, SeqVec(xd), r).value ==
          doctest::Approx(projected_gradient_distance(dense, xd, r, 200000)).epsilon(1e-6));
  }
}

TEST_CASE("distance evaluation invariants and monotonicity") {
  const LinOp op = power_diagonal(200, 1.0);
  const Vector x = power_seq(200, -1.2, true);
  const DistanceFunction d(op, x);
  double prev = INFINITY;
  double prev_phi = INFINITY;
  for (int i = 0; i <= 60; ++i) {
    const double r = std::pow(10.0, -3.0 + 0.1 * i);
    const DistanceEvaluation e = d.evaluate(r);
    CHECK(e.v_r.values().norm() <= r * (1 + 1e-9));
    CHECK(e.u_r.values().norm() == doctest::Approx(e.value).epsilon(1e-10));
    CHECK((x - op.adjoint_apply(e.v_r.values()) - e.u_r.values()).norm() <= 1e-12 * x.norm());
    if (e.multiplier == 0.0) CHECK(e.v_r.values().norm() <= r);
    CHECK(e.value <= prev);
    const double phi = d.big_phi(r);
    if (e.value > 0.0) {
      CHECK(phi < prev_phi);
    } else {
      CHECK(phi == 0.0);
    }
    prev = e.value;
    prev_phi = phi;
  }
  CHECK_THROWS_AS(d.value(0.0), InvalidArgument);
}

TEST_CASE("phi examples") {
  const Index n = 4096;
  const Vector x = power_seq(n, -3.0);
  const Vector norms = power_seq(n, 1.0);
  const PhiFunction phi(x, norms);
  // Brute-force minimum over n for a few t, including the tie rule.
  for (double t : {1e-9, 1e-6, 1e-3, 1.0}) {
    double best = INFINITY;
    Index arg = -1;
    for (Index m = 0; m <= n; ++m) {
      const double v = x.tail(n - m).cwiseAbs().sum() + t * norms.head(m).sum();
      if (v < best * (1 - 1e-15)) {
        best = v;
        arg = m;
      }
    }
    CHECK(phi(t) == doctest::Approx(best).epsilon(1e-12));
    CHECK(phi.argmin(t) == arg);
  }
  // Ties: x = (1, 1) and norms (1, 1) at t = 1 give 2 for every n.
  const PhiFunction flat(Vector::Ones(2), Vector::Ones(2));
  CHECK(flat.argmin(1.0) == 0);

  const Vector grid = log_grid(1e-8, 1e-2, 25);
  const IndexFnTable table = phi_fn(SeqVec(x), norms, grid);
  CHECK(table.monotone());
  const ExponentFit fit = fit_exponent(to_std(grid), to_std(table.values));
  CHECK(fit.slope == doctest::Approx(0.5).epsilon(0.1));
  CHECK(std::abs(fit.slope - 0.5) <= 0.05);

  // Sparse: phi(t) <= K t with K the representer mass of the support.
  Vector sparse = Vector::Zero(100);
  sparse.head(5) << 1, -0.5, 1.0 / 3, -0.25, 0.2;
  const Vector sn = power_seq(100, 1.0);
  const PhiFunction ps(sparse, sn);
  for (double t : {1e-8, 1e-5, 1e-3}) CHECK(ps(t) <= sn.head(5).sum() * t * (1 + 1e-14));
  CHECK(ps(1e-300) >= 0.0);
}

TEST_CASE("concave majorant equals the brute-force chord maximum") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector t = log_grid(1e-3, 10.0, 25);
    Vector v(25);
    double cur = 0.0;
    for (Index i = 0; i < 25; ++i) {
      cur += u(rng) * u(rng);
      v[i] = cur;
    }
    const Vector m = concave_majorant(t, v);
    const Vector b = brute_majorant(t, v);
    for (Index i = 0; i < 25; ++i) {
      CHECK(m[i] == doctest::Approx(b[i]).epsilon(1e-12));
      CHECK(m[i] >= v[i]);
      if (i + 1 < 25) CHECK(m[i] >= v[i + 1] * (1 - 1e-14));
    }
    // Chord slopes from the origin side are nonincreasing.
    double slope = m[0] / t[0];
    for (Index i = 1; i < 25; ++i) {
      const double s = (m[i] - m[i - 1]) / (t[i] - t[i - 1]);
      CHECK(s <= slope * (1 + 1e-9) + 1e-15);
      slope = s;
    }
  }
}

TEST_CASE("psi in and out of range") {
  const LinOp op = power_diagonal(200, 1.0);
  const Vector grid = log_grid(1e-8, 1e-1, 30);
  const PsiResult in = psi_fn(op, SeqVec(op.adjoint_apply(power_seq(200, -1.0))), grid);
  CHECK(in.in_range);
  CHECK(in.r0 > 0.0);
  CHECK(in.psi.values == grid);

  ProblemSpec s;
  s.solution_class = SolutionClass::HolderSource;
  s.n = 2000;
  const Problem p = gen_problem(s);
  const Vector tg = log_grid(1e-4, 1e-1, 13);
  // Every finite section lies in the range; the default detection rule says so.
  CHECK(psi_fn(p.op, p.x_dagger, tg).in_range);
  SmoothnessOptions strict;
  strict.range_radius_factor = 1.0;
  const PsiResult out = psi_fn(p.op, p.x_dagger, tg, strict);
  CHECK_FALSE(out.in_range);
  CHECK(out.r0 == 0.0);
  CHECK(out.psi_hat.monotone());
  CHECK(out.psi.monotone());
  for (Index i = 0; i < tg.size(); ++i) CHECK(out.psi.values[i] >= out.psi_hat.values[i]);
  const ExponentFit fit = fit_exponent(to_std(tg), to_std(out.psi_hat.values));
  CHECK(std::abs(fit.slope - 2.0 / 3.0) <= 0.1);
  CHECK(out.big_phi.monotone());

  // psi_hat against direct tabulation: invert Phi(R) = d(R)^2 / R by
  // bisection on R, then square the distance.
  const DistanceFunction d(p.op, p.x_dagger.values());
  for (Index i = 0; i < tg.size(); i += 4) {
    double lo = 1e-6;
    double hi = d.source_radius();
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      (d.big_phi(mid) > tg[i] ? lo : hi) = mid;
    }
    CHECK(out.psi_hat.values[i] == doctest::Approx(std::pow(d.value(hi), 2)).epsilon(1e-6));
  }
}

TEST_CASE("g_eta examples") {
  const Vector grid = log_grid(1e-6, 1.0, 10);
  const IndexFnTable id_phi{grid, grid, TableLabel::Phi};
  const IndexFnTable id_psi{grid, grid, TableLabel::Psi};
  const IndexFnTable g = g_eta_fn(id_phi, id_psi, 1.0, 2.0);
  for (Index i = 0; i < grid.size(); ++i) CHECK(g.values[i] == doctest::Approx(4.0 * grid[i]));
  CHECK(g.monotone());
  const IndexFnTable k = g_eta_fn(id_phi, IndexFnTable{grid, grid * 3.0, TableLabel::Psi}, 0.0, 2.0);
  CHECK(k.values == grid * 6.0);
  const IndexFnTable other{log_grid(1e-6, 2.0, 10), grid, TableLabel::Psi};
  CHECK_THROWS_AS(g_eta_fn(id_phi, other, 1.0, 2.0), DimensionMismatch);
}

TEST_CASE("rate functions dominate the sampled psi_hat") {
  ProblemSpec s;
  s.n = 1024;
  s.solution_class = SolutionClass::HolderSource;
  const Problem p = gen_problem(s);
  SmoothnessOptions strict;
  strict.range_radius_factor = 1.0;
  const RateFunctions rf(p.op, p.x_dagger, strict);
  CHECK_FALSE(rf.in_range());
  CHECK(rf.big_k() == 2.0);
  double prev = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = std::pow(10.0, -12.0 + 0.12 * i);
    const double v = rf.psi(t);
    CHECK(v >= rf.psi_hat(t) * (1 - 1e-12));
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(rf.g_eta(1e-3, 0.5) == doctest::Approx(rf.phi(1e-3) + 2.0 * rf.psi(1e-3)));
}

TEST_CASE("infeasibility gap") {
  const Index n = 200;
  const LinOp op = power_diagonal(n, 2.0);
  const Vector x = power_seq(n, -2.0);
  const Vector xi = x.array() + 1.0;
  const double g1 = infeasibility_gap(op, SeqVec(x), 1.0, 1e3);
  const double g2 = infeasibility_gap(op, SeqVec(x), 1.0, 2e3);
  const double exact1 = water_filling_gap(op.singular_values(), xi, 1e3);
  const double exact2 = water_filling_gap(op.singular_values(), xi, 2e3);
  CHECK(g1 >= exact1 * (1 - 1e-12));
  CHECK(g1 <= exact1 * 1.02);
  CHECK(g2 >= exact2 * (1 - 1e-12));
  CHECK(g1 >= 0.9);
  CHECK(std::abs(g2 - g1) / g1 < 0.05);

  Vector sparse = Vector::Zero(n);
  sparse.head(5) << 1, -0.5, 1.0 / 3, -0.25, 0.2;
  CHECK(infeasibility_gap(op, SeqVec(sparse), 1.0, 1e3) <= 0.05);
  CHECK_THROWS_AS(infeasibility_gap(op, SeqVec(x), 0.0, 1.0), InvalidArgument);
}

TEST_CASE("fit_exponent examples") {
  const std::vector<double> xs{1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> sq;
  std::vector<double> noisy;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 0.01);
  for (double x : xs) {
    sq.push_back(x * x);
    noisy.push_back(3.0 * std::sqrt(x) * (1.0 + g(rng)));
  }
  const ExponentFit id = fit_exponent(xs, xs);
  CHECK(id.slope == doctest::Approx(1.0));
  CHECK(id.r2 == doctest::Approx(1.0));
  CHECK(fit_exponent(xs, sq).slope == doctest::Approx(2.0));
  CHECK(std::abs(fit_exponent(xs, noisy).slope - 0.5) <= 0.02);
  CHECK_THROWS_AS(fit_exponent({1, 2, 3}, {1, 2, 3}), InvalidArgument);
  CHECK_THROWS_AS(fit_exponent(xs, {1, 1, 1, 1, 1}), InvalidArgument);
  CHECK_THROWS_AS(fit_exponent(xs, {1, -1, 1, 1, 1}), InvalidArgument);
}

TEST_CASE("variational inequalities hold on sampled points") {
  for (SolutionClass c : {SolutionClass::PowerDecay, SolutionClass::HolderSource, SolutionClass::Sparse,
                          SolutionClass::ExpDecay}) {
    ProblemSpec s;
    s.solution_class = c;
    s.n = 256;
    const Problem p = gen_problem(s);
    ViCheckConfig cfg;
    cfg.samples = 2000;
    const ViReport r = vi_check(p.op, p.x_dagger, cfg);
    CHECK(r.l1.samples == 2000);
    CHECK(r.l1.violations == 0);
    CHECK(r.l2.violations == 0);
    CHECK(r.elastic_net.violations == 0);
  }
}
