#include "qsparse/serialization.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "qsparse/error.hpp"

namespace qsparse {

namespace {

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Vector vec_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidArgument(what + ": expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw InvalidArgument(what + ": element " + std::to_string(k) + " is not a number");
    v[static_cast<Index>(k)] = j[k].get<double>();
  }
  return v;
}

Json vec_json(const std::vector<double>& v) { return Json(v); }

const Json& field(const Json& j, const char* key, const std::string& context) {
  auto it = j.find(key);
  if (it == j.end()) throw InvalidArgument(context + ": missing key '" + key + "'");
  return *it;
}

double number(const Json& j, const char* key, const std::string& context) {
  const Json& v = field(j, key, context);
  if (!v.is_number()) throw InvalidArgument(context + ": '" + key + "' must be a number");
  return v.get<double>();
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw InvalidArgument(context + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) known = known || it.key() == a;
    if (!known) throw InvalidArgument(context + ": unknown key '" + it.key() + "'");
  }
}

Json to_json(const LinOp& op) {
  Json j;
  switch (op.kind()) {
    case OpKind::Diagonal:
      j["kind"] = "diagonal";
      j["sigma"] = vec_json(op.singular_values());
      break;
    case OpKind::Dense: {
      const Matrix& m = op.matrix();
      j["kind"] = "dense";
      j["rows"] = m.rows();
      j["cols"] = m.cols();
      Json data = Json::array();
      for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
      }
      j["data"] = std::move(data);
      break;
    }
    case OpKind::Stacked:
      j["kind"] = "stacked";
      j["ridge_weight"] = op.ridge_weight();
      j["base"] = to_json(op.base());
      break;
  }
  return j;
}

LinOp lin_op_from_json(const Json& j) {
  const std::string ctx = "operator";
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw InvalidArgument(ctx + ": expected an object with a string 'kind'");
  }
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "diagonal") {
    require_keys(j, {"kind", "sigma"}, ctx);
    return LinOp::diagonal(vec_from_json(field(j, "sigma", ctx), "operator.sigma"));
  }
  if (kind == "dense") {
    require_keys(j, {"kind", "rows", "cols", "data"}, ctx);
    const Json& rows = field(j, "rows", ctx);
    const Json& cols = field(j, "cols", ctx);
    if (!rows.is_number_integer() || !cols.is_number_integer() || rows.get<Index>() < 0 ||
        cols.get<Index>() < 0) {
      throw InvalidArgument(ctx + ": rows and cols must be nonnegative integers");
    }
    const Index m = rows.get<Index>();
    const Index n = cols.get<Index>();
    const Vector data = vec_from_json(field(j, "data", ctx), "operator.data");
    if (data.size() != m * n) throw DimensionMismatch(ctx + ": data length differs from rows*cols");
    Matrix a(m, n);
    for (Index r = 0; r < m; ++r) {
      for (Index c = 0; c < n; ++c) a(r, c) = data[r * n + c];
    }
    return LinOp::dense(std::move(a));
  }
  if (kind == "stacked") {
    require_keys(j, {"kind", "ridge_weight", "base"}, ctx);
    return LinOp::stacked(lin_op_from_json(field(j, "base", ctx)), number(j, "ridge_weight", ctx));
  }
  throw InvalidArgument(ctx + ": unknown kind '" + kind + "'");
}

Json to_json(const Problem& p) {
  Json j;
  j["schema"] = kSchema;
  j["type"] = "problem";
  j["operator"] = to_json(p.op);
  j["x_dagger"] = p.x_dagger.empty() ? Json(nullptr) : vec_json(p.x_dagger.values());
  j["y"] = p.y.empty() ? Json(nullptr) : vec_json(p.y.values());
  j["delta"] = p.delta;
  j["y_delta"] = vec_json(p.y_delta.values());
  j["noise_seed"] = p.noise_seed;
  return j;
}

Problem problem_from_json(const Json& j) {
  const std::string ctx = "problem";
  require_keys(j, {"schema", "type", "operator", "x_dagger", "y", "delta", "y_delta", "noise_seed"}, ctx);
  if (field(j, "schema", ctx) != kSchema) throw InvalidArgument(ctx + ": unsupported schema");
  if (j.contains("type") && j["type"] != "problem") throw InvalidArgument(ctx + ": not a problem document");
  Problem p;
  p.op = lin_op_from_json(field(j, "operator", ctx));
  auto seq = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return SeqVec();
    return SeqVec(vec_from_json(*it, std::string(ctx) + "." + key));
  };
  p.x_dagger = seq("x_dagger");
  p.y = seq("y");
  p.delta = number(j, "delta", ctx);
  p.y_delta = SeqVec(vec_from_json(field(j, "y_delta", ctx), "problem.y_delta"));
  if (j.contains("noise_seed")) {
    if (!j["noise_seed"].is_number_unsigned()) throw InvalidArgument(ctx + ": noise_seed must be an unsigned integer");
    p.noise_seed = j["noise_seed"].get<std::uint64_t>();
  }
  validate(p);
  return p;
}

Json to_json(const PenaltyConfig& c) {
  Json j;
  j["family"] = to_string(c.family);
  j["reg_param"] = c.reg_param;
  j["eta"] = c.eta;
  return j;
}

Json to_json(const SolverOptions& o) {
  Json j;
  const char* m = o.method == SolverMethod::Auto               ? "auto"
                  : o.method == SolverMethod::ProximalGradient ? "proximal-gradient"
                                                               : "closed-form";
  j["method"] = m;
  j["tol_scale"] = o.tol_scale;
  j["max_iterations"] = o.max_iterations;
  return j;
}

Json to_json(const SolveResult& r) {
  Json j;
  j["x"] = vec_json(r.x.values());
  j["iterations"] = r.iterations;
  j["objective"] = r.objective;
  j["discrepancy"] = r.discrepancy;
  j["optimality_residual"] = r.optimality_residual;
  j["converged"] = r.converged;
  return j;
}

Json to_json(const RuleConfig& c) {
  Json j;
  j["rule"] = to_string(c.rule);
  j["tau1"] = c.tau1;
  j["tau2"] = c.tau2;
  j["tau"] = c.tau;
  j["q"] = c.q;
  j["gamma0"] = c.gamma0;
  j["lambda"] = c.lambda;
  j["c_e"] = c.c_e;
  j["max_steps"] = c.max_steps;
  return j;
}

Json to_json(const RuleOutcome& o) {
  Json j;
  j["rule"] = to_string(o.rule);
  j["gamma_star"] = o.gamma_star;
  j["satisfied"] = o.satisfied;
  j["exhausted"] = o.exhausted;
  j["start_condition"] = o.start_condition ? Json(*o.start_condition) : Json(nullptr);
  j["solution"] = to_json(o.solution);
  Json trace = Json::array();
  for (const auto& t : o.trace) {
    Json e;
    e["gamma"] = t.gamma;
    e["discrepancy"] = t.discrepancy;
    if (o.rule == Rule::LEP) e["comparison"] = t.comparison;
    trace.push_back(std::move(e));
  }
  j["trace"] = std::move(trace);
  return j;
}

Json to_json(const ProblemSpec& s) {
  Json j;
  j["class"] = to_string(s.solution_class);
  j["a"] = s.operator_decay;
  j["mu"] = s.mu;
  j["sigma"] = s.sigma_exp;
  j["k_max"] = s.k_max;
  j["theta"] = s.theta;
  j["c"] = s.scale;
  j["n"] = s.n;
  j["delta"] = s.delta;
  j["seed"] = s.seed;
  return j;
}

Json to_json(const SmoothnessOptions& o) {
  Json j;
  j["range_rel_threshold"] = o.range_rel_threshold;
  j["range_radius_factor"] = o.range_radius_factor;
  return j;
}

Json to_json(const SmoothnessModel& m) {
  Json j;
  j["mu"] = optional_json(m.mu);
  j["nu"] = m.nu;
  j["sigma"] = optional_json(m.sigma_exp);
  j["theta"] = optional_json(m.theta);
  j["k1"] = m.k1;
  j["k2"] = m.k2;
  j["kappa_pred"] = m.kappa_pred;
  j["kappa_branch"] = m.kappa_branch;
  j["in_range"] = m.in_range;
  j["big_k"] = m.big_k;
  return j;
}

Json to_json(const AuditReport& a) {
  Json j;
  j["delta"] = a.delta;
  j["c_star"] = a.c_star;
  j["phi_delta"] = a.phi_delta;
  j["psi_delta"] = a.psi_delta;
  j["big_k"] = a.big_k;
  j["bound"] = a.bound;
  j["e_eta"] = a.e_eta;
  j["margin"] = a.margin;
  j["ok"] = a.ok;
  return j;
}

Json to_json(const RateRow& r) {
  Json j;
  j["delta"] = r.delta;
  j["ok"] = r.ok;
  if (!r.ok) {
    j["error"] = r.error_code;
    return j;
  }
  j["gamma"] = r.gamma;
  j["err_l1"] = r.err_l1;
  j["err_l2"] = r.err_l2;
  j["e_eta"] = r.e_eta;
  j["discrepancy"] = r.discrepancy;
  j["satisfied"] = r.satisfied;
  if (r.audit) j["audit"] = to_json(*r.audit);
  return j;
}

Json to_json(const RateReport& r) {
  Json j;
  j["schema"] = kSchema;
  j["type"] = "rate_report";
  j["spec"] = to_json(r.spec);
  j["rule"] = to_json(r.rule);
  j["penalty"] = to_json(r.penalty);
  j["smoothness"] = to_json(r.smoothness);
  j["deltas"] = vec_json(r.deltas());
  j["gammas"] = vec_json(r.gammas());
  j["errors_l1"] = vec_json(r.errors_l1());
  j["errors_l2"] = vec_json(r.errors_l2());
  j["e_eta"] = vec_json(r.e_eta());
  j["fitted_slope_l1"] = r.fit_ok ? Json(r.fitted_slope_l1) : Json(nullptr);
  j["fit_r2"] = r.fit_ok ? Json(r.fit_r2) : Json(nullptr);
  j["predicted_kappa"] = r.predicted_kappa;
  j["pass"] = r.pass;
  Json rows = Json::array();
  for (const auto& row : r.rows) rows.push_back(to_json(row));
  j["rows"] = std::move(rows);
  return j;
}

Json to_json(const ViCheckConfig& c) {
  Json j;
  j["samples"] = c.samples;
  j["eta"] = c.eta;
  j["rel_slack"] = c.rel_slack;
  j["seed"] = c.seed;
  return j;
}

Json to_json(const ViReport& r) {
  auto one = [](const ViResult& v) {
    Json j;
    j["samples"] = v.samples;
    j["violations"] = v.violations;
    j["worst"] = v.worst;
    return j;
  };
  Json j;
  j["l1"] = one(r.l1);
  j["l2"] = one(r.l2);
  j["elastic_net"] = one(r.elastic_net);
  j["in_range"] = r.in_range;
  j["big_k"] = r.big_k;
  return j;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string op_hash(const LinOp& op) { return fnv1a_hex(to_json(op).dump()); }

std::string problem_hash(const Problem& p) { return fnv1a_hex(to_json(p).dump()); }

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string table_csv(const IndexFnTable& table, const std::string& hash, const std::string& grid_spec) {
  std::ostringstream out;
  out << "# label=" << to_string(table.label) << " op=" << hash << " grid=" << grid_spec << "\n";
  out << "t,value\n";
  for (Index i = 0; i < table.grid.size(); ++i) {
    out << format_double(table.grid[i]) << ',' << format_double(table.values[i]) << '\n';
  }
  return out.str();
}

std::string rate_report_csv(const RateReport& r) {
  std::ostringstream out;
  out << "delta,gamma,err_l1,err_l2,e_eta,discrepancy,satisfied,ok,bound,margin\n";
  for (const auto& row : r.rows) {
    out << format_double(row.delta) << ',';
    if (row.ok) {
      out << format_double(row.gamma) << ',' << format_double(row.err_l1) << ',' << format_double(row.err_l2)
          << ',' << format_double(row.e_eta) << ',' << format_double(row.discrepancy) << ','
          << (row.satisfied ? 1 : 0) << ",1,";
    } else {
      out << "nan,nan,nan,nan,nan,0,0,";
    }
    if (row.audit) {
      out << format_double(row.audit->bound) << ',' << format_double(row.audit->margin);
    } else {
      out << "nan,nan";
    }
    out << '\n';
  }
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw InvalidArgument("write to '" + tmp + "' failed");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw InvalidArgument("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace qsparse
