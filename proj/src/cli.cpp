#include "qsparse/cli.hpp"

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qsparse/error.hpp"
#include "qsparse/experiments.hpp"
#include "qsparse/param_choice.hpp"
#include "qsparse/serialization.hpp"
#include "qsparse/smoothness.hpp"
#include "qsparse/solvers.hpp"

namespace qsparse::cli {

namespace {

constexpr const char* kVersion = "1.0.0";

Json error_json(const std::string& code, const std::string& message) {
  Json j;
  j["schema"] = kSchema;
  j["type"] = "error";
  j["code"] = code;
  j["message"] = message;
  return j;
}

SolverMethod method_from_string(const std::string& s) {
  if (s == "auto") return SolverMethod::Auto;
  if (s == "proximal-gradient") return SolverMethod::ProximalGradient;
  if (s == "closed-form") return SolverMethod::ClosedForm;
  throw InvalidArgument("unknown solver method '" + s + "'");
}

TableLabel table_from_string(const std::string& s) {
  for (TableLabel l : {TableLabel::Phi, TableLabel::PsiHat, TableLabel::Psi, TableLabel::GEta, TableLabel::Dist,
                       TableLabel::BigPhi}) {
    if (s == to_string(l)) return l;
  }
  throw InvalidArgument("unknown table '" + s + "'");
}

// "lo:hi:count" on a geometric grid, validated like a delta grid.
Vector parse_grid(const std::string& spec) {
  const std::vector<double> g = parse_delta_grid(spec);
  Vector v(static_cast<Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) v[static_cast<Index>(i)] = g[i];
  if (g.size() > 1 && !(g.back() > g.front())) throw InvalidArgument("grid must be increasing: '" + spec + "'");
  return v;
}

Json manifest(const std::string& command, Json config, Json inputs, Json outputs) {
  Json m;
  m["schema"] = kSchema;
  m["type"] = "manifest";
  m["tool"] = "qsparse";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = std::move(config);
  m["inputs"] = std::move(inputs);
  m["outputs"] = std::move(outputs);
  return m;
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

// JSON result: to `path` (manifest alongside) or to `out` with the manifest
// embedded.
void emit_json(const std::string& command, Json doc, Json config, Json inputs, const std::string& path,
               std::ostream& out) {
  if (path.empty()) {
    doc["manifest"] = manifest(command, std::move(config), std::move(inputs), Json::array());
    out << doc.dump(2) << '\n';
    return;
  }
  const Json m = manifest(command, std::move(config), std::move(inputs), Json::array({path}));
  write_file_atomic(path, doc.dump(2) + '\n');
  write_file_atomic(manifest_path(path), m.dump(2) + '\n');
}

struct InputProblem {
  Problem problem;
  Json record;
};

InputProblem load_problem(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
  InputProblem in{problem_from_json(j), Json::object()};
  in.record[path] = {{"type", "problem"}, {"hash", problem_hash(in.problem)}};
  return in;
}

// Splices the keys of a flat JSON config file in front of the command-line
// arguments of the subcommand, so explicit flags override the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  if (args.size() < 2) return args;
  CLI::App* sub = nullptr;
  for (CLI::App* s : app.get_subcommands({})) {
    if (s->get_name() == args[1]) sub = s;
  }
  if (sub == nullptr) return args;

  std::vector<std::string> rest;
  std::string config_path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return args;

  Json cfg;
  try {
    cfg = Json::parse(read_file(config_path));
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("config '" + config_path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw InvalidArgument("config '" + config_path + "' must be a JSON object");
  std::vector<std::string> expanded{args[0], args[1]};
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string flag = "--" + it.key();
    if (it.key() == "config" || sub->get_option_no_throw(flag) == nullptr) {
      throw InvalidArgument("config '" + config_path + "': unknown key '" + it.key() + "' for " + args[1]);
    }
    const Json& v = it.value();
    if (!(v.is_string() || v.is_number())) {
      throw InvalidArgument("config '" + config_path + "': key '" + it.key() + "' must be a string or number");
    }
    expanded.push_back(flag);
    expanded.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  }
  expanded.insert(expanded.end(), rest.begin(), rest.end());
  return expanded;
}

struct PenaltyFlags {
  std::string family = "elastic-net";
  double eta = 1.0;
  double reg_param = 1e-3;

  PenaltyConfig resolve() const {
    const PenaltyFamily f = penalty_family_from_string(family);
    PenaltyConfig c = f == PenaltyFamily::ElasticNet ? PenaltyConfig::elastic_net(reg_param, eta)
                      : f == PenaltyFamily::L1       ? PenaltyConfig::l1(reg_param)
                                                     : PenaltyConfig::l2(reg_param);
    c.validate();
    return c;
  }
};

struct SolverFlags {
  std::string method = "auto";
  double tol_scale = 1e-8;
  int max_iterations = 50000;

  SolverOptions resolve() const {
    SolverOptions o;
    o.method = method_from_string(method);
    o.tol_scale = tol_scale;
    o.max_iterations = max_iterations;
    if (!(tol_scale > 0.0) || max_iterations < 1) {
      throw InvalidArgument("solver: tol-scale must be positive and max-iter at least 1");
    }
    return o;
  }
};

void add_penalty_flags(CLI::App* sub, PenaltyFlags& p, bool with_reg_param) {
  sub->add_option("--penalty", p.family, "penalty family")
      ->check(CLI::IsMember({"l1", "elastic-net", "l2"}))
      ->capture_default_str();
  sub->add_option("--eta", p.eta, "elastic-net l1 weight")->capture_default_str();
  if (with_reg_param) {
    sub->add_option("--reg-param,--gamma,--beta", p.reg_param, "regularization parameter")
        ->capture_default_str();
  }
}

void add_solver_flags(CLI::App* sub, SolverFlags& s) {
  sub->add_option("--method", s.method, "solver")
      ->check(CLI::IsMember({"auto", "proximal-gradient", "closed-form"}))
      ->capture_default_str();
  sub->add_option("--tol-scale", s.tol_scale, "relative stopping tolerance")->capture_default_str();
  sub->add_option("--max-iter", s.max_iterations, "iteration cap")->capture_default_str();
}

struct RuleFlags {
  std::string rule = "tdp";
  RuleConfig config;

  RuleConfig resolve() const {
    RuleConfig c = config;
    c.rule = rule_from_string(rule);
    c.validate();
    return c;
  }
};

void add_rule_flags(CLI::App* sub, RuleFlags& r) {
  sub->add_option("--rule", r.rule, "parameter choice rule")
      ->check(CLI::IsMember({"tdp", "sdp", "lep"}))
      ->capture_default_str();
  sub->add_option("--tau1", r.config.tau1, "TDP lower factor")->capture_default_str();
  sub->add_option("--tau2", r.config.tau2, "TDP upper factor")->capture_default_str();
  sub->add_option("--tau", r.config.tau, "SDP factor / LEP stop factor")->capture_default_str();
  sub->add_option("--q", r.config.q, "grid ratio in (0,1)")->capture_default_str();
  sub->add_option("--gamma0", r.config.gamma0, "start parameter, 0 = rule default")->capture_default_str();
  sub->add_option("--lambda", r.config.lambda, "LEP lambda")->capture_default_str();
  sub->add_option("--ce", r.config.c_e, "LEP quasi-triangle constant, 0 = from error measure")
      ->capture_default_str();
  sub->add_option("--max-steps", r.config.max_steps, "grid step cap")->capture_default_str();
}

void add_smoothness_flags(CLI::App* cmd, SmoothnessOptions& o) {
  cmd->add_option("--range-threshold", o.range_rel_threshold, "range detection threshold")->capture_default_str();
  cmd->add_option("--range-radius", o.range_radius_factor, "range detection radius factor")->capture_default_str();
}

void add_spec_flags(CLI::App* sub, ProblemSpec& s, std::string& cls) {
  sub->add_option("--class", cls, "solution class")
      ->check(CLI::IsMember({"power-decay", "exp-decay", "sparse", "holder-source"}))
      ->capture_default_str();
  sub->add_option("--a", s.operator_decay, "operator decay sigma_k = k^-a")->capture_default_str();
  sub->add_option("--mu", s.mu, "power-decay exponent")->capture_default_str();
  sub->add_option("--sigma", s.sigma_exp, "exp-decay exponent")->capture_default_str();
  sub->add_option("--k-max", s.k_max, "sparse support size")->capture_default_str();
  sub->add_option("--theta", s.theta, "Hoelder source exponent")->capture_default_str();
  sub->add_option("--c", s.scale, "solution scale")->capture_default_str();
  sub->add_option("--n", s.n, "truncation dimension N")->capture_default_str();
  sub->add_option("--seed", s.seed, "seed of all randomness")->capture_default_str();
}

int report_error(std::ostream& err, const std::string& code, const std::string& message, int status) {
  err << error_json(code, message).dump() << '\n';
  return status;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparsity-promoting Tikhonov regularization: solvers, parameter choice and rate checks", "qsparse"};
  app.option_defaults()->take_last();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // gen
  ProblemSpec gen_spec;
  std::string gen_class = "power-decay";
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic problem");
  add_spec_flags(gen, gen_spec, gen_class);
  gen->add_option("--delta", gen_spec.delta, "noise level")->capture_default_str();
  gen->add_option("-o,--output", gen_out, "problem JSON")->required();

  // solve
  std::string solve_in;
  std::string solve_out;
  PenaltyFlags solve_penalty;
  SolverFlags solve_solver;
  CLI::App* solve_cmd = app.add_subcommand("solve", "minimize the Tikhonov functional for one parameter");
  solve_cmd->add_option("-i,--input", solve_in, "problem JSON")->required();
  solve_cmd->add_option("-o,--output", solve_out, "result JSON (default: stdout)");
  add_penalty_flags(solve_cmd, solve_penalty, true);
  add_solver_flags(solve_cmd, solve_solver);

  // choose
  std::string choose_in;
  std::string choose_out;
  PenaltyFlags choose_penalty;
  SolverFlags choose_solver;
  RuleFlags choose_rule;
  CLI::App* choose_cmd = app.add_subcommand("choose", "select the regularization parameter a posteriori");
  choose_cmd->add_option("-i,--input", choose_in, "problem JSON")->required();
  choose_cmd->add_option("-o,--output", choose_out, "outcome JSON (default: stdout)");
  add_rule_flags(choose_cmd, choose_rule);
  add_penalty_flags(choose_cmd, choose_penalty, false);
  add_solver_flags(choose_cmd, choose_solver);

  // rates
  ProblemSpec rates_spec;
  std::string rates_class = "power-decay";
  std::string rates_out;
  std::string rates_summary;
  std::string rates_deltas = "1e-2:1e-6:8";
  int rates_threads = 1;
  PenaltyFlags rates_penalty;
  SolverFlags rates_solver;
  RuleFlags rates_rule;
  SmoothnessOptions rates_smooth;
  CLI::App* rates = app.add_subcommand("rates", "sweep the noise level and fit the convergence rate");
  add_spec_flags(rates, rates_spec, rates_class);
  add_rule_flags(rates, rates_rule);
  add_penalty_flags(rates, rates_penalty, false);
  add_solver_flags(rates, rates_solver);
  rates->add_option("--deltas", rates_deltas, "noise grid start:end:count")->capture_default_str();
  rates->add_option("--threads", rates_threads, "parallel sweep rows")->capture_default_str();
  rates->add_option("-o,--output", rates_out, "rate table CSV")->required();
  rates->add_option("--summary", rates_summary, "summary JSON (default: <output>.summary.json)");
  add_smoothness_flags(rates, rates_smooth);

  // distfn
  std::string dist_in;
  std::string dist_out;
  std::string dist_table = "psi";
  std::string dist_grid = "1e-8:1e-2:61";
  double dist_eta = 1.0;
  SmoothnessOptions dist_smooth;
  CLI::App* distfn = app.add_subcommand("distfn", "tabulate distance and rate functions of x_dagger");
  distfn->add_option("-i,--input", dist_in, "problem JSON with x_dagger")->required();
  distfn->add_option("-o,--output", dist_out, "table CSV")->required();
  distfn->add_option("--table", dist_table, "phi, psi_hat, psi, g_eta, dist or Phi")
      ->check(CLI::IsMember({"phi", "psi_hat", "psi", "g_eta", "dist", "Phi"}))
      ->capture_default_str();
  distfn->add_option("--grid", dist_grid, "t grid (R grid for dist) lo:hi:count")->capture_default_str();
  distfn->add_option("--eta", dist_eta, "eta in g_eta")->capture_default_str();
  add_smoothness_flags(distfn, dist_smooth);

  // vi-check
  std::string vi_in;
  std::string vi_out;
  ViCheckConfig vi_cfg;
  SmoothnessOptions vi_smooth;
  CLI::App* vi = app.add_subcommand("vi-check", "sample the variational inequalities at x_dagger");
  vi->add_option("-i,--input", vi_in, "problem JSON with x_dagger")->required();
  vi->add_option("-o,--output", vi_out, "report JSON (default: stdout)");
  vi->add_option("--samples", vi_cfg.samples, "test points per inequality")->capture_default_str();
  vi->add_option("--eta", vi_cfg.eta, "elastic-net eta")->capture_default_str();
  vi->add_option("--slack", vi_cfg.rel_slack, "relative slack")->capture_default_str();
  vi->add_option("--seed", vi_cfg.seed, "sampling seed")->capture_default_str();
  add_smoothness_flags(vi, vi_smooth);

  for (CLI::App* sub : {gen, solve_cmd, choose_cmd, rates, distfn, vi}) {
    sub->add_option("--config", "flat JSON object of flags (explicit flags win)");
  }

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(args, app);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return report_error(err, "UsageError", e.what(), kUsageError);
  } catch (const Error& e) {
    return report_error(err, e.code(), e.what(), kUsageError);
  }

  try {
    if (gen->parsed()) {
      gen_spec.solution_class = solution_class_from_string(gen_class);
      const Problem p = gen_problem(gen_spec);
      Json config = to_json(gen_spec);
      const std::string hash = problem_hash(p);
      Json m = manifest("gen", config, Json::object(), Json::array({gen_out}));
      m["problem_hash"] = hash;
      write_file_atomic(gen_out, to_json(p).dump(2) + '\n');
      write_file_atomic(manifest_path(gen_out), m.dump(2) + '\n');
      return kOk;
    }

    if (solve_cmd->parsed()) {
      const InputProblem in = load_problem(solve_in);
      const PenaltyConfig pen = solve_penalty.resolve();
      const SolverOptions opts = solve_solver.resolve();
      const SolveResult r = solve(in.problem, pen, opts);
      Json doc;
      doc["schema"] = kSchema;
      doc["type"] = "solve_result";
      doc["problem_hash"] = problem_hash(in.problem);
      doc["penalty"] = to_json(pen);
      doc["result"] = to_json(r);
      if (pen.family != PenaltyFamily::L2) {
        doc["max_violation"] = certify_optimality(r, in.problem, pen).max_violation;
      }
      Json config;
      config["penalty"] = to_json(pen);
      config["solver"] = to_json(opts);
      emit_json("solve", std::move(doc), std::move(config), in.record, solve_out, out);
      return kOk;
    }

    if (choose_cmd->parsed()) {
      const InputProblem in = load_problem(choose_in);
      const PenaltyConfig pen = choose_penalty.resolve();
      const RuleConfig rule = choose_rule.resolve();
      const SolverOptions opts = choose_solver.resolve();
      const RuleOutcome o = choose(in.problem, pen, rule, opts);
      Json doc{{"schema", kSchema}, {"type", "rule_outcome"}, {"problem_hash", problem_hash(in.problem)}};
      doc.update(to_json(o));
      doc["delta"] = in.problem.delta;
      doc["discrepancy_ratio"] = o.solution.discrepancy / in.problem.delta;
      Json config;
      config["rule"] = to_json(rule);
      config["penalty"] = {{"family", to_string(pen.family)}, {"eta", pen.eta}};
      config["solver"] = to_json(opts);
      config["error_measure"] = ErrorMeasure::for_penalty(pen).kind() == ErrorMeasure::Kind::L1Metric
                                    ? "l1"
                                    : "e_eta";
      config["gamma0_resolved"] = o.trace.empty() ? Json(nullptr) : Json(o.trace.front().gamma);
      emit_json("choose", std::move(doc), std::move(config), in.record, choose_out, out);
      return kOk;
    }

    if (rates->parsed()) {
      rates_spec.solution_class = solution_class_from_string(rates_class);
      const std::vector<double> grid = parse_delta_grid(rates_deltas);
      if (grid.size() < 5) throw InvalidArgument("rates: the delta grid needs at least 5 points");
      if (rates_threads < 1) throw InvalidArgument("rates: threads must be at least 1");
      rates_spec.delta = grid.front();
      SweepOptions sweep;
      sweep.threads = rates_threads;
      sweep.solver = rates_solver.resolve();
      sweep.smoothness = rates_smooth;
      const PenaltyConfig pen = rates_penalty.resolve();
      const RuleConfig rule = rates_rule.resolve();
      const RateReport report = rate_sweep(rates_spec, rule, pen, grid, sweep);

      const std::string summary = rates_summary.empty() ? rates_out + ".summary.json" : rates_summary;
      Json config;
      config["spec"] = to_json(rates_spec);
      config["rule"] = to_json(rule);
      config["penalty"] = {{"family", to_string(pen.family)}, {"eta", pen.eta}};
      config["solver"] = to_json(sweep.solver);
      config["smoothness"] = to_json(sweep.smoothness);
      config["deltas"] = rates_deltas;
      config["delta_grid"] = grid;
      // Thread count does not change the output; it is recorded but kept
      // out of the summary so runs stay byte-identical.
      config["threads"] = rates_threads;
      write_file_atomic(rates_out, rate_report_csv(report));
      write_file_atomic(summary, to_json(report).dump(2) + '\n');
      write_file_atomic(manifest_path(rates_out),
                        manifest("rates", config, Json::object(), Json::array({rates_out, summary})).dump(2) + '\n');
      return kOk;
    }

    if (distfn->parsed()) {
      const InputProblem in = load_problem(dist_in);
      const Problem& p = in.problem;
      if (p.x_dagger.empty()) throw InvalidArgument("distfn: the problem has no x_dagger");
      const TableLabel label = table_from_string(dist_table);
      const Vector grid = parse_grid(dist_grid);
      IndexFnTable table;
      Json extra;
      if (label == TableLabel::Phi) {
        table = phi_fn(p.x_dagger, representer_norms(p.op).norms, grid);
      } else if (label == TableLabel::Dist) {
        const DistanceFunction d(p.op, p.x_dagger.values());
        table = IndexFnTable{grid, Vector(grid.size()), TableLabel::Dist};
        for (Index i = 0; i < grid.size(); ++i) table.values[i] = d.value(grid[i]);
        extra["source_radius"] = d.source_radius();
      } else {
        const PsiResult psi = psi_fn(p.op, p.x_dagger, grid, dist_smooth);
        extra["in_range"] = psi.in_range;
        extra["r0"] = psi.r0;
        if (label == TableLabel::PsiHat) table = psi.psi_hat;
        if (label == TableLabel::Psi) table = psi.psi;
        if (label == TableLabel::BigPhi) table = psi.big_phi;
        if (label == TableLabel::GEta) {
          const double k = psi.in_range ? psi.r0 : 2.0;
          extra["big_k"] = k;
          table = g_eta_fn(phi_fn(p.x_dagger, representer_norms(p.op).norms, grid), psi.psi, dist_eta, k);
        }
      }
      Json config;
      config["table"] = dist_table;
      config["grid"] = dist_grid;
      config["eta"] = dist_eta;
      config["smoothness"] = to_json(dist_smooth);
      Json m = manifest("distfn", std::move(config), in.record, Json::array({dist_out}));
      if (!extra.is_null()) m["derived"] = std::move(extra);
      write_file_atomic(dist_out, table_csv(table, op_hash(p.op), dist_grid));
      write_file_atomic(manifest_path(dist_out), m.dump(2) + '\n');
      return kOk;
    }

    if (vi->parsed()) {
      const InputProblem in = load_problem(vi_in);
      if (in.problem.x_dagger.empty()) throw InvalidArgument("vi-check: the problem has no x_dagger");
      const ViReport rep = vi_check(in.problem.op, in.problem.x_dagger, vi_cfg, vi_smooth);
      Json doc{{"schema", kSchema}, {"type", "vi_report"}, {"problem_hash", problem_hash(in.problem)}};
      doc.update(to_json(rep));
      Json config = to_json(vi_cfg);
      config["smoothness"] = to_json(vi_smooth);
      emit_json("vi-check", std::move(doc), std::move(config), in.record, vi_out, out);
      const int violations = rep.l1.violations + rep.l2.violations + rep.elastic_net.violations;
      if (violations > 0) {
        return report_error(err, "InequalityViolated",
                            std::to_string(violations) + " sampled points violate a variational inequality",
                            kDomainError);
      }
      return kOk;
    }
  } catch (const Error& e) {
    return report_error(err, e.code(), e.what(), e.is_domain_error() ? kDomainError : kUsageError);
  } catch (const Json::exception& e) {
    return report_error(err, "InvalidInput", e.what(), kUsageError);
  } catch (const std::exception& e) {
    return report_error(err, "InternalError", e.what(), kDomainError);
  }
  return report_error(err, "UsageError", "no subcommand given", kUsageError);
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace qsparse::cli
