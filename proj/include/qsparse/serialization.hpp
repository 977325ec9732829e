#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "qsparse/experiments.hpp"
#include "qsparse/lin_op.hpp"
#include "qsparse/param_choice.hpp"
#include "qsparse/problem.hpp"
#include "qsparse/smoothness.hpp"
#include "qsparse/solvers.hpp"

namespace qsparse {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "v1";

// Every document written by the library carries "schema": "v1" and, where
// it describes a single object, a "type" tag. Readers reject unknown keys.

Json to_json(const LinOp& op);
LinOp lin_op_from_json(const Json& j);

Json to_json(const Problem& p);
Problem problem_from_json(const Json& j);

Json to_json(const PenaltyConfig& c);
Json to_json(const SolverOptions& o);
Json to_json(const SolveResult& r);
Json to_json(const RuleConfig& c);
Json to_json(const RuleOutcome& o);
Json to_json(const ProblemSpec& s);
Json to_json(const SmoothnessOptions& o);
Json to_json(const SmoothnessModel& m);
Json to_json(const AuditReport& a);
Json to_json(const RateRow& r);
// Summary of a sweep: configuration, fit and per-row audits.
Json to_json(const RateReport& r);
Json to_json(const ViCheckConfig& c);
Json to_json(const ViReport& r);

// Throws InvalidArgument naming the first key of `j` outside `allowed`.
void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& context);

// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string op_hash(const LinOp& op);
std::string problem_hash(const Problem& p);

// Shortest text that parses back to the same double.
std::string format_double(double v);

// "# label=<l> op=<hash> grid=<spec>" then "t,value" and one row per node.
std::string table_csv(const IndexFnTable& table, const std::string& op_hash, const std::string& grid_spec);

// One row per delta with a header row; whitespace-free so gnuplot reads it
// with `set datafile separator ','`.
std::string rate_report_csv(const RateReport& r);

std::string read_file(const std::string& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace qsparse
