#include "qsparse/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qsparse/error.hpp"
#include "qsparse/solvers.hpp"

namespace qsparse {

namespace {

constexpr double kTiny = 1e-300;

bool increasing_label(TableLabel l) { return l != TableLabel::Dist && l != TableLabel::BigPhi; }

void check_grid(const Vector& grid) {
  if (grid.size() == 0) throw InvalidArgument("grid: empty");
  for (Index i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) throw InvalidArgument("grid: points must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidArgument("grid: points must be increasing");
  }
}

}  // namespace

const char* to_string(TableLabel l) {
  switch (l) {
    case TableLabel::Phi:
      return "phi";
    case TableLabel::PsiHat:
      return "psi_hat";
    case TableLabel::Psi:
      return "psi";
    case TableLabel::GEta:
      return "g_eta";
    case TableLabel::Dist:
      return "dist";
    case TableLabel::BigPhi:
      return "Phi";
  }
  return "?";
}

double IndexFnTable::interpolate(double t) const {
  const Index n = grid.size();
  if (n == 0) throw InvalidArgument("interpolate: empty table");
  if (t <= grid[0]) {
    if (increasing_label(label)) return t <= 0.0 ? 0.0 : values[0] * t / grid[0];
    return values[0];
  }
  if (t >= grid[n - 1]) return values[n - 1];
  const auto* begin = grid.data();
  const Index i = std::upper_bound(begin, begin + n, t) - begin;  // grid[i-1] < t < grid[i]
  const double w = (t - grid[i - 1]) / (grid[i] - grid[i - 1]);
  return (1.0 - w) * values[i - 1] + w * values[i];
}

bool IndexFnTable::monotone(double tol) const {
  if (values.size() == 0) return true;
  const double slack = tol * values.cwiseAbs().maxCoeff();
  for (Index i = 1; i < values.size(); ++i) {
    const double step = values[i] - values[i - 1];
    if (increasing_label(label) ? step < -slack : step > slack) return false;
  }
  return true;
}

Vector log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw InvalidArgument("log_grid: need 0 < lo < hi, count >= 2");
  Vector g(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < count; ++i) g[i] = std::exp(a + (b - a) * i / (count - 1));
  g[0] = lo;
  g[count - 1] = hi;
  return g;
}

// ---------------------------------------------------------------------------

DistanceFunction::DistanceFunction(const LinOp& op, const Vector& x_dagger)
    : sys_(singular_system(op)) {
  if (x_dagger.size() != op.domain_dim()) throw DimensionMismatch("distance function: x_dagger length");
  coeff_ = sys_.to_right(x_dagger);
  x_norm_ = x_dagger.norm();
  source_radius_ = radius_at(0.0);
}

double DistanceFunction::radius_at(double nu) const {
  const auto& s = sys_.values.array();
  return (s * coeff_.array() / (s.square() + nu)).matrix().norm();
}

double DistanceFunction::distance_at(double nu) const {
  if (nu == 0.0) return 0.0;
  const auto& s = sys_.values.array();
  return (nu * coeff_.array() / (s.square() + nu)).matrix().norm();
}

double DistanceFunction::multiplier_for(double r) const {
  if (!(r > 0.0)) throw InvalidArgument("distance function: radius must be positive");
  if (r >= source_radius_) return 0.0;
  // ||c(nu)|| <= ||S b|| / nu, so nu_hi gives a feasible radius.
  const double sb = (sys_.values.array() * coeff_.array()).matrix().norm();
  double hi = sb / r;
  double lo = hi;
  while (radius_at(lo) <= r) {
    hi = lo;
    lo /= 10.0;
    if (lo < kTiny) return hi;
  }
  // invariant: radius(lo) > r >= radius(hi)
  for (int it = 0; it < 200 && hi > lo * (1.0 + 1e-13); ++it) {
    const double mid = std::sqrt(lo * hi);
    if (radius_at(mid) > r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

double DistanceFunction::value(double r) const { return distance_at(multiplier_for(r)); }

DistanceEvaluation DistanceFunction::evaluate(double r) const {
  const double nu = multiplier_for(r);
  const auto& s = sys_.values.array();
  const Vector c = (s * coeff_.array() / (s.square() + nu)).matrix();
  const Vector res = (nu * coeff_.array() / (s.square() + nu)).matrix();
  DistanceEvaluation e;
  e.r = r;
  e.multiplier = nu;
  e.value = res.norm();
  e.v_r = SeqVec(sys_.from_left(c));
  e.u_r = SeqVec(sys_.from_right(res));
  return e;
}

double DistanceFunction::big_phi(double r) const {
  const double d = value(r);
  return d * d / r;
}

double DistanceFunction::psi_hat(double t) const {
  if (!(t > 0.0) || x_norm_ == 0.0) return 0.0;
  // Phi as a function of the multiplier is increasing from 0 to infinity.
  auto phi_at = [&](double nu) {
    const double d = distance_at(nu);
    const double r = radius_at(nu);
    return r > 0.0 ? d * d / r : std::numeric_limits<double>::infinity();
  };
  double lo = 1.0;
  double hi = 1.0;
  while (phi_at(lo) > t) {
    lo /= 1e3;
    if (lo < kTiny) return std::pow(distance_at(lo), 2);
  }
  while (phi_at(hi) < t) {
    hi *= 1e3;
    if (hi > 1e300) return std::pow(distance_at(hi), 2);
  }
  for (int it = 0; it < 200 && hi > lo * (1.0 + 1e-14); ++it) {
    const double mid = std::sqrt(lo * hi);
    if (phi_at(mid) < t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::pow(distance_at(hi), 2);
}

bool DistanceFunction::in_range(double rel_threshold, double radius_factor) const {
  if (x_norm_ == 0.0) return true;
  return value(radius_factor * x_norm_) < rel_threshold * x_norm_;
}

DistanceEvaluation distance_fn(const LinOp& op, const SeqVec& x_dagger, double r) {
  return DistanceFunction(op, x_dagger.values()).evaluate(r);
}

// ---------------------------------------------------------------------------

PhiFunction::PhiFunction(const Vector& x_dagger, const Vector& representer_norms) {
  const Index n = x_dagger.size();
  if (representer_norms.size() != n) throw DimensionMismatch("phi: representer norms length");
  tail_ = Vector::Zero(n + 1);
  prefix_ = Vector::Zero(n + 1);
  for (Index k = n - 1; k >= 0; --k) tail_[k] = tail_[k + 1] + std::abs(x_dagger[k]);
  for (Index k = 0; k < n; ++k) prefix_[k + 1] = prefix_[k] + representer_norms[k];
}

Index PhiFunction::argmin(double t) const {
  Index best = 0;
  double best_val = tail_[0];
  for (Index m = 1; m < tail_.size(); ++m) {
    const double v = tail_[m] + t * prefix_[m];
    if (v < best_val) {
      best_val = v;
      best = m;
    }
  }
  return best;
}

double PhiFunction::operator()(double t) const {
  const Index m = argmin(t);
  return tail_[m] + t * prefix_[m];
}

IndexFnTable phi_fn(const SeqVec& x_dagger, const Vector& representer_norms, const Vector& t_grid) {
  check_grid(t_grid);
  const PhiFunction phi(x_dagger.values(), representer_norms);
  IndexFnTable table{t_grid, Vector(t_grid.size()), TableLabel::Phi};
  for (Index i = 0; i < t_grid.size(); ++i) table.values[i] = phi(t_grid[i]);
  return table;
}

// ---------------------------------------------------------------------------

Vector concave_majorant(const Vector& grid, const Vector& values) {
  const Index n = grid.size();
  if (values.size() != n) throw DimensionMismatch("concave_majorant: length mismatch");
  struct Pt {
    double x;
    double y;
  };
  std::vector<Pt> pts;
  pts.reserve(n + 1);
  pts.push_back({0.0, 0.0});
  for (Index i = 0; i < n; ++i) pts.push_back({grid[i], values[std::min(i + 1, n - 1)]});

  // Upper hull, monotone chain.
  std::vector<Pt> hull;
  for (const Pt& p : pts) {
    while (hull.size() >= 2) {
      const Pt& a = hull[hull.size() - 2];
      const Pt& b = hull.back();
      const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(p);
  }

  Vector out(n);
  std::size_t seg = 0;
  for (Index i = 0; i < n; ++i) {
    const double t = grid[i];
    while (seg + 1 < hull.size() && hull[seg + 1].x < t) ++seg;
    if (seg + 1 >= hull.size()) {
      out[i] = hull.back().y;
      continue;
    }
    const Pt& a = hull[seg];
    const Pt& b = hull[seg + 1];
    const double w = (t - a.x) / (b.x - a.x);
    out[i] = (1.0 - w) * a.y + w * b.y;
  }
  return out;
}

PsiResult psi_fn(const LinOp& op, const SeqVec& x_dagger, const Vector& t_grid,
                 const SmoothnessOptions& options) {
  check_grid(t_grid);
  const DistanceFunction dist(op, x_dagger.values());
  PsiResult out;
  out.in_range = dist.in_range(options.range_rel_threshold, options.range_radius_factor);
  out.r0 = out.in_range ? dist.source_radius() : 0.0;

  const Index n = t_grid.size();
  out.psi_hat = IndexFnTable{t_grid, Vector(n), TableLabel::PsiHat};
  Vector radii(n);
  for (Index i = 0; i < n; ++i) {
    const double v = dist.psi_hat(t_grid[i]);
    out.psi_hat.values[i] = v;
    radii[i] = v / t_grid[i];  // d^2 = t R at R = Phi^{-1}(t)
  }
  out.psi = out.in_range ? IndexFnTable{t_grid, t_grid, TableLabel::Psi}
                         : IndexFnTable{t_grid, concave_majorant(t_grid, out.psi_hat.values),
                                        TableLabel::Psi};

  // Phi on the radii, reordered to an increasing R grid; degenerate (zero)
  // radii are dropped.
  std::vector<std::pair<double, double>> rp;
  for (Index i = 0; i < n; ++i) {
    if (radii[i] > 0.0 && std::isfinite(radii[i])) rp.emplace_back(radii[i], t_grid[i]);
  }
  std::sort(rp.begin(), rp.end());
  rp.erase(std::unique(rp.begin(), rp.end(), [](auto& a, auto& b) { return !(b.first > a.first); }),
           rp.end());
  out.big_phi.label = TableLabel::BigPhi;
  out.big_phi.grid.resize(static_cast<Index>(rp.size()));
  out.big_phi.values.resize(static_cast<Index>(rp.size()));
  for (std::size_t i = 0; i < rp.size(); ++i) {
    out.big_phi.grid[static_cast<Index>(i)] = rp[i].first;
    out.big_phi.values[static_cast<Index>(i)] = rp[i].second;
  }
  return out;
}

IndexFnTable g_eta_fn(const IndexFnTable& phi, const IndexFnTable& psi, double eta, double big_k) {
  if (phi.grid.size() != psi.grid.size() || phi.grid != psi.grid) {
    throw DimensionMismatch("g_eta: phi and psi tables must share a grid");
  }
  if (!(eta >= 0.0) || !(big_k > 0.0)) throw InvalidArgument("g_eta: need eta >= 0 and K > 0");
  return IndexFnTable{phi.grid, 2.0 * eta * phi.values + big_k * psi.values, TableLabel::GEta};
}

RateFunctions::RateFunctions(const LinOp& op, const SeqVec& x_dagger, const SmoothnessOptions& options)
    : dist_(op, x_dagger.values()),
      phi_(x_dagger.values(), representer_norms(op).norms),
      in_range_(dist_.in_range(options.range_rel_threshold, options.range_radius_factor)) {
  if (!in_range_) {
    const double scale = std::max(op.apply(x_dagger.values()).norm(), kTiny);
    const Vector grid = log_grid(1e-18 * scale, 1e2 * scale, 401);
    Vector hat(grid.size());
    for (Index i = 0; i < grid.size(); ++i) hat[i] = dist_.psi_hat(grid[i]);
    psi_table_ = IndexFnTable{grid, concave_majorant(grid, hat), TableLabel::Psi};
  }
}

double RateFunctions::psi(double t) const {
  if (in_range_) return t;
  const Index n = psi_table_.grid.size();
  // The majorant is certified on [t_0, t_{n-2}]; outside, fall back to psi_hat.
  if (t >= psi_table_.grid[0] && t <= psi_table_.grid[n - 2]) return psi_table_.interpolate(t);
  return std::max(psi_table_.interpolate(t), dist_.psi_hat(t));
}

// ---------------------------------------------------------------------------

double infeasibility_gap(const LinOp& op, const SeqVec& x_dagger, double eta, double r_max,
                         int iterations) {
  if (!(eta > 0.0) || !(r_max > 0.0)) throw InvalidArgument("infeasibility_gap: eta and r_max must be positive");
  const Vector& x = x_dagger.values();
  const Vector xi = x.unaryExpr([eta](double v) { return eta * sign(v) + v; });

  const bool diagonal = op.kind() == OpKind::Diagonal;
  const Matrix a = diagonal ? Matrix() : op.to_dense();
  Vector v = Vector::Zero(op.range_dim());
  Vector r = xi;
  double best = r.lpNorm<Eigen::Infinity>();

  for (int it = 0; it < iterations && best > 0.0; ++it) {
    Index j = 0;
    const double f = r.cwiseAbs().maxCoeff(&j);
    const double dir = sign(r[j]);
    if (diagonal) {
      const double s = op.singular_values()[j];
      v[j] += dir * f / s;
    } else {
      const auto col = a.col(j);
      v += (dir * f / col.squaredNorm()) * col;
    }
    const double vn = v.norm();
    if (vn > r_max) v *= r_max / vn;
    r = xi - op.adjoint_apply(v);
    best = std::min(best, r.lpNorm<Eigen::Infinity>());
  }
  return best;
}

// ---------------------------------------------------------------------------

ExponentFit fit_exponent(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DimensionMismatch("fit_exponent: length mismatch");
  if (xs.size() < 4) throw InvalidArgument("fit_exponent: need at least 4 points");
  const std::size_t n = xs.size();
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> lx(n);
  std::vector<double> ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw InvalidArgument("fit_exponent: values must be positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx <= 1e-300 || syy <= 1e-300) throw InvalidArgument("fit_exponent: degenerate (constant) input");
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = sxy * sxy / (sxx * syy);
  return fit;
}

// ---------------------------------------------------------------------------

ViReport vi_check(const LinOp& op, const SeqVec& x_dagger, const ViCheckConfig& config,
                  const SmoothnessOptions& options) {
  if (config.samples < 1) throw InvalidArgument("vi_check: need at least one sample");
  const RateFunctions rates(op, x_dagger, options);
  const Vector& xd = x_dagger.values();
  const Index n = xd.size();
  const double eta = config.eta;
  const double xd_inf = std::max(xd.lpNorm<Eigen::Infinity>(), 1e-12);
  const double xd_l1 = xd.lpNorm<1>();
  const double xd_sq = xd.squaredNorm();

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, n - 1);

  auto record = [&](ViResult& res, double lhs, double rhs, double scale) {
    ++res.samples;
    const double excess = (lhs - rhs) / std::max(scale, 1e-300);
    res.worst = std::max(res.worst, excess);
    if (excess > config.rel_slack) ++res.violations;
  };

  ViReport rep;
  rep.in_range = rates.in_range();
  rep.big_k = rates.big_k();
  rep.l1.worst = rep.l2.worst = rep.elastic_net.worst = -std::numeric_limits<double>::infinity();

  int done = 0;
  while (done < config.samples) {
    const double mag = std::pow(10.0, -7.0 + 7.5 * unif(rng)) * xd_inf;
    Vector x = xd;
    switch (done % 4) {
      case 0: {  // dense perturbation
        Vector p(n);
        for (Index k = 0; k < n; ++k) p[k] = normal(rng);
        x += mag * std::sqrt(static_cast<double>(n)) * p / p.norm();
        break;
      }
      case 1: {  // a few components
        const int m = 1 + static_cast<int>(unif(rng) * 5);
        for (int i = 0; i < m; ++i) x[pick(rng)] += mag * normal(rng);
        break;
      }
      case 2:  // rescaling of x_dagger
        x = (1.0 + (unif(rng) < 0.5 ? -1.0 : 1.0) * mag / xd_inf) * xd;
        break;
      default: {  // thresholded / truncated versions of x_dagger
        if (unif(rng) < 0.5) {
          x = soft_threshold(xd, mag);
        } else {
          const Index cut = pick(rng);
          x.tail(n - cut).setZero();
          x[pick(rng)] += mag * normal(rng);
        }
        break;
      }
    }
    const Vector d = x - xd;
    const double t = op.apply(d).norm();
    if (!(t > 0.0)) continue;
    ++done;

    const double d_l1 = d.lpNorm<1>();
    const double d_sq = d.squaredNorm();
    const double x_l1 = x.lpNorm<1>();
    const double x_sq = x.squaredNorm();
    const double phi = rates.phi(t);
    const double psi_hat = rates.psi_hat(t);
    const double psi = rates.in_range() ? t : rates.psi(t);

    record(rep.l1, d_l1, x_l1 - xd_l1 + 2.0 * phi, std::max({d_l1, x_l1, xd_l1, 2.0 * phi}));
    record(rep.l2, 0.25 * d_sq, 0.5 * x_sq - 0.5 * xd_sq + 2.0 * psi_hat,
           std::max({0.25 * d_sq, 0.5 * x_sq, 0.5 * xd_sq, 2.0 * psi_hat}));
    const double g = 2.0 * eta * phi + rates.big_k() * psi;
    const double r_x = eta * x_l1 + 0.5 * x_sq;
    const double r_xd = eta * xd_l1 + 0.5 * xd_sq;
    record(rep.elastic_net, eta * d_l1 + 0.25 * d_sq, r_x - r_xd + g,
           std::max({eta * d_l1 + 0.25 * d_sq, r_x, r_xd, g}));
  }
  return rep;
}

}  // namespace qsparse
