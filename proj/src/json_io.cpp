#include "derisk/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace derisk {

json real_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

double json_real(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

double json_bound(const json& j, const std::string& path, double ifNull) {
  if (j.is_null()) return ifNull;
  return json_real(j, path);
}

int json_int(const json& j, const std::string& path) {
  if (j.is_number_integer()) {
    const auto v = j.get<long long>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw SchemaError(path, "integer out of range");
    }
    return static_cast<int>(v);
  }
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (d == std::floor(d) && std::abs(d) < 2e9) return static_cast<int>(d);
  }
  throw SchemaError(path, "expected an integer");
}

bool json_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw SchemaError(path, "expected a boolean");
  return j.get<bool>();
}

std::string json_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

const json& json_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  return j;
}

JsonFields::JsonFields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw SchemaError(path_, "expected an object");
}

bool JsonFields::has(const std::string& key) const { return j_.contains(key); }

const json* JsonFields::find(const std::string& key) {
  seen_.push_back(key);
  auto it = j_.find(key);
  if (it == j_.end() || it->is_null()) return nullptr;
  return &*it;
}

const json& JsonFields::need(const std::string& key) {
  seen_.push_back(key);
  auto it = j_.find(key);
  if (it == j_.end()) throw SchemaError(at(key), "required field is missing");
  return *it;
}

double JsonFields::real(const std::string& key) { return json_real(need(key), at(key)); }

double JsonFields::real(const std::string& key, double fallback) {
  const json* v = find(key);
  return v ? json_real(*v, at(key)) : fallback;
}

std::optional<double> JsonFields::opt_real(const std::string& key) {
  const json* v = find(key);
  if (!v) return std::nullopt;
  return json_real(*v, at(key));
}

double JsonFields::bound(const std::string& key, double ifNull) {
  const json* v = find(key);
  return v ? json_real(*v, at(key)) : ifNull;
}

int JsonFields::integer(const std::string& key) { return json_int(need(key), at(key)); }

int JsonFields::integer(const std::string& key, int fallback) {
  const json* v = find(key);
  return v ? json_int(*v, at(key)) : fallback;
}

std::optional<int> JsonFields::opt_integer(const std::string& key) {
  const json* v = find(key);
  if (!v) return std::nullopt;
  return json_int(*v, at(key));
}

unsigned JsonFields::unsigned_integer(const std::string& key, unsigned fallback) {
  const json* v = find(key);
  if (!v) return fallback;
  if (!v->is_number_integer() || v->get<long long>() < 0 ||
      v->get<long long>() > static_cast<long long>(std::numeric_limits<unsigned>::max())) {
    throw SchemaError(at(key), "expected a nonnegative integer");
  }
  return static_cast<unsigned>(v->get<long long>());
}

bool JsonFields::boolean(const std::string& key, bool fallback) {
  const json* v = find(key);
  return v ? json_bool(*v, at(key)) : fallback;
}

std::string JsonFields::string(const std::string& key) { return json_string(need(key), at(key)); }

std::string JsonFields::string(const std::string& key, const std::string& fallback) {
  const json* v = find(key);
  return v ? json_string(*v, at(key)) : fallback;
}

const json& JsonFields::array(const std::string& key) { return json_array(need(key), at(key)); }

void JsonFields::reject_unknown() const {
  for (auto it = j_.begin(); it != j_.end(); ++it) {
    const auto& k = it.key();
    if (k == "schemaVersion" || k == "kind") continue;
    if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) throw SchemaError(at(k), "unknown field");
  }
}

void check_schema_version(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  auto it = j.find("schemaVersion");
  if (it == j.end()) return;
  if (!it->is_number_integer() || it->get<long long>() != kSchemaVersion) {
    throw SchemaError(path + "/schemaVersion", "unsupported schema version (expected 1)");
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", path + ": " + e.what());
  }
}

// ---- writers

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(real_to_json(v[i]));
  return a;
}

json to_json(const LinearExpr& e) {
  json c = json::object();
  for (const auto& [id, a] : e.coefficients()) c[std::to_string(id)] = a;
  return {{"coefficients", c}, {"constant", e.constant()}};
}

json to_json(const Variable& v) {
  return {{"name", v.name}, {"lower", real_to_json(v.lower)}, {"upper", real_to_json(v.upper)},
          {"auxiliary", v.auxiliary}};
}

namespace {

const char* sense_text(Sense s) {
  switch (s) {
    case Sense::Le: return "<=";
    case Sense::Eq: return "=";
    case Sense::Ge: return ">=";
  }
  return "?";
}

template <typename T, typename F>
json optional_json(const std::optional<T>& v, F&& f) {
  return v ? json(f(*v)) : json(nullptr);
}

std::string alpha_rule_text(AlphaRule r) {
  switch (r) {
    case AlphaRule::Explicit: return "explicit";
    case AlphaRule::Theory: return "theory";
    case AlphaRule::Grid: return "grid";
  }
  return "?";
}

}  // namespace

json to_json(const Constraint& c) {
  return {{"lhs", to_json(c.lhs)}, {"sense", sense_text(c.sense)}, {"rhs", c.rhs}, {"name", c.name}};
}

json to_json(const ScenarioVector& z) {
  json e = json::object();
  for (const auto& [k, v] : z.entries) e[std::to_string(k)] = v;
  return {{"entries", e}};
}

json to_json(const Cut& c) {
  json prov = {{"iteration", c.provenance.iteration},
               {"pi", to_json(c.provenance.pi)},
               {"z", optional_json(c.provenance.z, [](const ScenarioVector& z) { return to_json(z); })}};
  return {{"xCoeffs", to_json(c.xCoeffs)}, {"rhs", c.rhs}, {"provenance", prov}};
}

json to_json(const MasterProblem& p) {
  json vars = json::array();
  for (const auto& v : p.variables) vars.push_back(to_json(v));
  json cons = json::array();
  for (const auto& c : p.constraints) cons.push_back(to_json(c));
  json cuts = json::array();
  for (const auto& c : p.cuts) cuts.push_back(to_json(c));
  return {{"schemaVersion", kSchemaVersion},
          {"variables", vars},
          {"cost", to_json(p.cost)},
          {"theta", p.theta},
          {"phiL", optional_json(p.phiL, [](VarId v) { return v; })},
          {"constraints", cons},
          {"cuts", cuts}};
}

json to_json(const FeatureEval& e) {
  return {{"values", to_json(e.values)}, {"argmaxId", e.argmaxId}, {"phiMax", e.phiMax}};
}

json to_json(const RedConfig& c) {
  return {{"nRuns", c.nRuns},
          {"windowSize", optional_json(c.windowSize, [](int v) { return v; })},
          {"windowStep", c.windowStep},
          {"warmstartSize", c.warmstartSize},
          {"warmstartValue", c.warmstartValue},
          {"supportValue", optional_json(c.supportValue, [](double v) { return v; })},
          {"decayRate", c.decayRate},
          {"maxSteps", c.maxSteps},
          {"gradTol", c.gradTol},
          {"seed", c.seed},
          {"gamma", c.gamma},
          {"epsilon", c.epsilon},
          {"epsilonI", c.epsilonI},
          {"featureScale", c.featureScale},
          {"workers", c.workers}};
}

json to_json(const RunConfig& c) {
  auto num = [](auto v) { return v; };
  return {{"schemaVersion", kSchemaVersion},
          {"tMax", c.tMax},
          {"thetaPolicy",
           {{"theta", optional_json(c.thetaPolicy.theta, num)},
            {"lambdaLo", c.thetaPolicy.lambdaLo},
            {"lambdaHi", c.thetaPolicy.lambdaHi},
            {"xi", c.thetaPolicy.xi}}},
          {"alphaPolicy", {{"rule", alpha_rule_text(c.alphaPolicy.rule)}, {"value", c.alphaPolicy.value}}},
          {"deltaAbs", optional_json(c.deltaAbs, num)},
          {"deltaAbsRelative", c.deltaAbsRelative},
          {"deltaRel", c.deltaRel},
          {"deltaPrime", optional_json(c.deltaPrime, num)},
          {"boostingKernel", to_string(c.boostingKernel)},
          {"separationKernel", to_string(c.separationKernel)},
          {"clipK", optional_json(c.clipK, num)},
          {"flatten", c.flatten},
          {"seed", c.seed},
          {"earlyExit", c.earlyExit},
          {"dropBelow", c.dropBelow},
          {"tupleCuts", c.tupleCuts},
          {"tuplePool", c.tuplePool},
          {"convexTol", c.convexTol},
          {"maxTangentRounds", c.maxTangentRounds},
          {"red", to_json(c.red)}};
}

json to_json(const IterationRecord& r) {
  return {{"t", r.t},
          {"x", to_json(r.x)},
          {"cost", r.cost},
          {"phiL", r.phiL},
          {"phiMax", r.phiMax},
          {"exactPhi", optional_json(r.exactPhi, [](double v) { return v; })},
          {"cutsAdded", r.cutsAdded},
          {"wallMillis", r.wallMillis},
          {"masterObjective", r.masterObjective}};
}

json to_json(const Outcome& o) {
  return {{"kind", to_string(o.kind)},
          {"solution", to_json(o.solution)},
          {"bounds", optional_json(o.bounds,
                                   [](const RiskCostBounds& b) {
                                     return json{{"riskRatio", b.riskRatio}, {"costRatio", b.costRatio}};
                                   })},
          {"certificateStatement", optional_json(o.certificateStatement,
                                                 [](const CertificateStatement& c) {
                                                   return json{{"lambdaLo", c.lambdaLo}, {"xi", c.xi}};
                                                 })},
          {"weightedValue", o.weightedValue},
          {"threshold", o.threshold}};
}

json to_json(const MonitorReport& m) {
  json rows = json::array();
  auto flag = [](const std::optional<bool>& f) { return f ? json(*f) : json(nullptr); };
  for (const auto& r : m.rows) {
    rows.push_back({{"t", r.t},
                    {"lemma1Ok", flag(r.lemma1Ok)},
                    {"lemma2Ok", flag(r.lemma2Ok)},
                    {"lemmaUpperOk", flag(r.lemmaUpperOk)},
                    {"corViolationOk", flag(r.corViolationOk)}});
  }
  return {{"rows", rows}, {"worstSlack", real_to_json(m.worstSlack)}, {"allOk", m.all_ok()}};
}

// ---- readers

Vector read_vector(const json& j, const std::string& path) {
  json_array(j, path);
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = json_real(j[i], path + "/" + std::to_string(i));
  return v;
}

namespace {

int parse_key(const std::string& key, const std::string& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(key, &used);
    if (used == key.size()) return v;
  } catch (const std::exception&) {
  }
  throw SchemaError(path, "expected an integer key");
}

std::map<int, double> read_int_map(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  std::map<int, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto p = path + "/" + it.key();
    out[parse_key(it.key(), p)] = json_real(it.value(), p);
  }
  return out;
}

}  // namespace

LinearExpr read_linear_expr(const json& j, const std::string& path) {
  JsonFields f(j, path);
  LinearExpr e(f.real("constant", 0.0));
  if (const json* c = f.find("coefficients")) {
    for (const auto& [id, a] : read_int_map(*c, f.at("coefficients"))) e.add(id, a);
  }
  f.reject_unknown();
  return e;
}

Variable read_variable(const json& j, const std::string& path) {
  JsonFields f(j, path);
  Variable v;
  v.name = f.string("name", "");
  v.lower = f.bound("lower", -kInf);
  v.upper = f.bound("upper", kInf);
  v.auxiliary = f.boolean("auxiliary", false);
  f.reject_unknown();
  return v;
}

Constraint read_constraint(const json& j, const std::string& path) {
  JsonFields f(j, path);
  Constraint c;
  c.lhs = read_linear_expr(f.need("lhs"), f.at("lhs"));
  const auto s = f.string("sense");
  if (s == "<=") c.sense = Sense::Le;
  else if (s == "=") c.sense = Sense::Eq;
  else if (s == ">=") c.sense = Sense::Ge;
  else throw SchemaError(f.at("sense"), "expected one of <=, =, >=");
  c.rhs = f.real("rhs");
  c.name = f.string("name", "");
  f.reject_unknown();
  return c;
}

ScenarioVector read_scenario(const json& j, const std::string& path) {
  JsonFields f(j, path);
  ScenarioVector z;
  if (const json* e = f.find("entries")) z.entries = read_int_map(*e, f.at("entries"));
  f.reject_unknown();
  return z;
}

Cut read_cut(const json& j, const std::string& path) {
  JsonFields f(j, path);
  Cut c;
  c.xCoeffs = read_linear_expr(f.need("xCoeffs"), f.at("xCoeffs"));
  c.rhs = f.real("rhs");
  if (const json* p = f.find("provenance")) {
    JsonFields g(*p, f.at("provenance"));
    c.provenance.iteration = g.integer("iteration", 0);
    if (const json* pi = g.find("pi")) c.provenance.pi = read_vector(*pi, g.at("pi"));
    if (const json* z = g.find("z")) c.provenance.z = read_scenario(*z, g.at("z"));
    g.reject_unknown();
  }
  f.reject_unknown();
  return c;
}

MasterProblem read_master(const json& j, const std::string& path) {
  check_schema_version(j, path);
  JsonFields f(j, path);
  MasterProblem p;
  const auto& vars = f.array("variables");
  for (std::size_t i = 0; i < vars.size(); ++i) p.variables.push_back(read_variable(vars[i], f.at("variables/" + std::to_string(i))));
  if (const json* c = f.find("cost")) p.cost = read_linear_expr(*c, f.at("cost"));
  p.theta = f.real("theta", 1.0);
  p.phiL = f.opt_integer("phiL");
  if (const json* cons = f.find("constraints")) {
    json_array(*cons, f.at("constraints"));
    for (std::size_t i = 0; i < cons->size(); ++i) {
      p.constraints.push_back(read_constraint((*cons)[i], f.at("constraints/" + std::to_string(i))));
    }
  }
  if (const json* cuts = f.find("cuts")) {
    json_array(*cuts, f.at("cuts"));
    for (std::size_t i = 0; i < cuts->size(); ++i) p.cuts.push_back(read_cut((*cuts)[i], f.at("cuts/" + std::to_string(i))));
  }
  f.reject_unknown();
  return p;
}

FeatureEval read_feature_eval(const json& j, const std::string& path) {
  JsonFields f(j, path);
  FeatureEval e;
  e.values = read_vector(f.need("values"), f.at("values"));
  e.argmaxId = f.integer("argmaxId");
  e.phiMax = f.real("phiMax");
  f.reject_unknown();
  return e;
}

RedConfig read_red_config(const json& j, const std::string& path) {
  JsonFields f(j, path);
  RedConfig c;
  c.nRuns = f.integer("nRuns", c.nRuns);
  c.windowSize = f.opt_integer("windowSize");
  c.windowStep = f.integer("windowStep", c.windowStep);
  c.warmstartSize = f.integer("warmstartSize", c.warmstartSize);
  c.warmstartValue = f.real("warmstartValue", c.warmstartValue);
  c.supportValue = f.opt_real("supportValue");
  c.decayRate = f.real("decayRate", c.decayRate);
  c.maxSteps = f.integer("maxSteps", c.maxSteps);
  c.gradTol = f.real("gradTol", c.gradTol);
  c.seed = f.unsigned_integer("seed", c.seed);
  c.gamma = f.real("gamma", c.gamma);
  c.epsilon = f.real("epsilon", c.epsilon);
  c.epsilonI = f.real("epsilonI", c.epsilonI);
  c.featureScale = f.real("featureScale", c.featureScale);
  c.workers = f.integer("workers", c.workers);
  f.reject_unknown();
  if (c.nRuns < 1) throw SchemaError(f.at("nRuns"), "must be at least 1");
  if (!(c.decayRate > 0.0 && c.decayRate < 1.0)) throw SchemaError(f.at("decayRate"), "must lie in (0, 1)");
  if (c.windowSize && *c.windowSize < 1) throw SchemaError(f.at("windowSize"), "must be at least 1");
  if (c.windowStep < 0) throw SchemaError(f.at("windowStep"), "must be nonnegative");
  if (c.workers < 1) throw SchemaError(f.at("workers"), "must be at least 1");
  return c;
}

RunConfig read_run_config(const json& j, const std::string& path) {
  check_schema_version(j, path);
  JsonFields f(j, path);
  RunConfig c;
  c.tMax = f.integer("tMax", c.tMax);
  if (const json* tp = f.find("thetaPolicy")) {
    JsonFields g(*tp, f.at("thetaPolicy"));
    c.thetaPolicy.theta = g.opt_real("theta");
    c.thetaPolicy.lambdaLo = g.real("lambdaLo", c.thetaPolicy.lambdaLo);
    c.thetaPolicy.lambdaHi = g.real("lambdaHi", c.thetaPolicy.lambdaHi);
    c.thetaPolicy.xi = g.real("xi", c.thetaPolicy.xi);
    g.reject_unknown();
  }
  if (const json* ap = f.find("alphaPolicy")) {
    JsonFields g(*ap, f.at("alphaPolicy"));
    const auto rule = g.string("rule", "explicit");
    if (rule == "explicit") c.alphaPolicy.rule = AlphaRule::Explicit;
    else if (rule == "theory") c.alphaPolicy.rule = AlphaRule::Theory;
    else if (rule == "grid") c.alphaPolicy.rule = AlphaRule::Grid;
    else throw SchemaError(g.at("rule"), "expected explicit, theory or grid");
    c.alphaPolicy.value = g.real("value", c.alphaPolicy.value);
    g.reject_unknown();
  }
  c.deltaAbs = f.opt_real("deltaAbs");
  c.deltaAbsRelative = f.real("deltaAbsRelative", c.deltaAbsRelative);
  c.deltaRel = f.real("deltaRel", c.deltaRel);
  c.deltaPrime = f.opt_real("deltaPrime");
  if (const json* k = f.find("boostingKernel")) {
    try {
      c.boostingKernel = parse_boosting_kernel(json_string(*k, f.at("boostingKernel")));
    } catch (const ModelError& e) {
      throw SchemaError(f.at("boostingKernel"), e.what());
    }
  }
  if (const json* k = f.find("separationKernel")) {
    try {
      c.separationKernel = parse_separation_kernel(json_string(*k, f.at("separationKernel")));
    } catch (const ModelError& e) {
      throw SchemaError(f.at("separationKernel"), e.what());
    }
  }
  c.clipK = f.opt_integer("clipK");
  c.flatten = f.boolean("flatten", c.flatten);
  c.seed = f.unsigned_integer("seed", c.seed);
  c.earlyExit = f.boolean("earlyExit", c.earlyExit);
  c.dropBelow = f.real("dropBelow", c.dropBelow);
  c.tupleCuts = f.integer("tupleCuts", c.tupleCuts);
  c.tuplePool = f.integer("tuplePool", c.tuplePool);
  c.convexTol = f.real("convexTol", c.convexTol);
  c.maxTangentRounds = f.integer("maxTangentRounds", c.maxTangentRounds);
  if (const json* r = f.find("red")) c.red = read_red_config(*r, f.at("red"));
  f.reject_unknown();
  try {
    validate_config(c);
  } catch (const ModelError& e) {
    // validate_config messages start with the field name
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    std::string field = colon == std::string::npos ? "" : msg.substr(0, colon);
    std::replace(field.begin(), field.end(), '.', '/');
    throw SchemaError(path + "/" + field, colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  return c;
}

IterationRecord read_iteration_record(const json& j, const std::string& path) {
  JsonFields f(j, path);
  IterationRecord r;
  r.t = f.integer("t");
  r.x = read_vector(f.need("x"), f.at("x"));
  r.cost = f.real("cost");
  r.phiL = f.real("phiL");
  r.phiMax = f.real("phiMax");
  r.exactPhi = f.opt_real("exactPhi");
  r.cutsAdded = f.integer("cutsAdded", 0);
  r.wallMillis = f.real("wallMillis", 0.0);
  r.masterObjective = f.real("masterObjective", 0.0);
  f.reject_unknown();
  return r;
}

Outcome read_outcome(const json& j, const std::string& path) {
  JsonFields f(j, path);
  Outcome o;
  try {
    o.kind = parse_outcome_kind(f.string("kind"));
  } catch (const ModelError& e) {
    throw SchemaError(f.at("kind"), e.what());
  }
  o.solution = read_vector(f.need("solution"), f.at("solution"));
  if (const json* b = f.find("bounds")) {
    JsonFields g(*b, f.at("bounds"));
    o.bounds = RiskCostBounds{g.real("riskRatio"), g.real("costRatio")};
    g.reject_unknown();
  }
  if (const json* c = f.find("certificateStatement")) {
    JsonFields g(*c, f.at("certificateStatement"));
    o.certificateStatement = CertificateStatement{g.real("lambdaLo"), g.real("xi")};
    g.reject_unknown();
  }
  o.weightedValue = f.real("weightedValue", 0.0);
  o.threshold = f.real("threshold", 0.0);
  f.reject_unknown();
  if (o.kind == OutcomeKind::DeRisked && !o.bounds) throw SchemaError(f.at("bounds"), "required for DeRisked");
  if (o.kind == OutcomeKind::Certificate && !o.certificateStatement) {
    throw SchemaError(f.at("certificateStatement"), "required for Certificate");
  }
  return o;
}

MonitorReport read_monitor_report(const json& j, const std::string& path) {
  JsonFields f(j, path);
  MonitorReport m;
  const auto& rows = f.array("rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    JsonFields g(rows[i], f.at("rows/" + std::to_string(i)));
    MonitorRow r;
    r.t = g.integer("t");
    auto flag = [&g](const char* key) -> std::optional<bool> {
      const json* v = g.find(key);
      if (!v) return std::nullopt;
      return json_bool(*v, g.at(key));
    };
    r.lemma1Ok = flag("lemma1Ok");
    r.lemma2Ok = flag("lemma2Ok");
    r.lemmaUpperOk = flag("lemmaUpperOk");
    r.corViolationOk = flag("corViolationOk");
    g.reject_unknown();
    m.rows.push_back(r);
  }
  m.worstSlack = f.bound("worstSlack", kInf);
  f.find("allOk");
  f.reject_unknown();
  return m;
}

}  // namespace derisk
