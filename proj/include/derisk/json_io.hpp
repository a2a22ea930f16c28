#pragma once

#include "derisk/engine.hpp"
#include "derisk/model.hpp"

#include <json.hpp>

#include <stdexcept>
#include <optional>
#include <string>
#include <vector>

namespace derisk {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Schema violation at a JSON pointer (e.g. "/arcs/2/capacity").
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string pointer, const std::string& message)
      : std::runtime_error(pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

/// Reals: +-inf is written as null and read back as +inf for upper bounds,
/// -inf for lower bounds.
json real_to_json(double v);

json to_json(const Vector& v);
json to_json(const LinearExpr& e);
json to_json(const Variable& v);
json to_json(const Constraint& c);
json to_json(const ScenarioVector& z);
json to_json(const Cut& c);
json to_json(const MasterProblem& p);
json to_json(const FeatureEval& e);
json to_json(const RedConfig& c);
json to_json(const RunConfig& c);
json to_json(const IterationRecord& r);
json to_json(const Outcome& o);
json to_json(const MonitorReport& m);

Vector read_vector(const json& j, const std::string& path = "");
LinearExpr read_linear_expr(const json& j, const std::string& path = "");
Variable read_variable(const json& j, const std::string& path = "");
Constraint read_constraint(const json& j, const std::string& path = "");
ScenarioVector read_scenario(const json& j, const std::string& path = "");
Cut read_cut(const json& j, const std::string& path = "");
MasterProblem read_master(const json& j, const std::string& path = "");
FeatureEval read_feature_eval(const json& j, const std::string& path = "");
RedConfig read_red_config(const json& j, const std::string& path = "");
RunConfig read_run_config(const json& j, const std::string& path = "");
IterationRecord read_iteration_record(const json& j, const std::string& path = "");
Outcome read_outcome(const json& j, const std::string& path = "");
MonitorReport read_monitor_report(const json& j, const std::string& path = "");

/// Throws SchemaError unless j["schemaVersion"] is absent or equals 1.
void check_schema_version(const json& j, const std::string& path = "");

/// Parses a file; parse errors become SchemaError at "".
json load_json_file(const std::string& path);

double json_real(const json& j, const std::string& path);
/// Like json_real, with null read as `ifNull`.
double json_bound(const json& j, const std::string& path, double ifNull);
int json_int(const json& j, const std::string& path);
bool json_bool(const json& j, const std::string& path);
std::string json_string(const json& j, const std::string& path);
const json& json_array(const json& j, const std::string& path);

/// Field access on one JSON object that remembers which keys were read, so
/// unknown keys can be rejected.
class JsonFields {
 public:
  JsonFields(const json& j, std::string path);

  std::string at(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const;
  /// nullptr when absent or null.
  const json* find(const std::string& key);
  const json& need(const std::string& key);

  double real(const std::string& key);
  double real(const std::string& key, double fallback);
  std::optional<double> opt_real(const std::string& key);
  double bound(const std::string& key, double ifNull);
  int integer(const std::string& key);
  int integer(const std::string& key, int fallback);
  std::optional<int> opt_integer(const std::string& key);
  unsigned unsigned_integer(const std::string& key, unsigned fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  const json& array(const std::string& key);

  /// Throws SchemaError for any key never looked up (schemaVersion and kind
  /// are always allowed).
  void reject_unknown() const;

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

}  // namespace derisk
