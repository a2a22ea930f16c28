#include "derisk/adapters/instance.hpp"

#include <functional>
#include <map>

namespace derisk {

namespace {

std::string index_path(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

int lookup(const std::map<std::string, int>& names, const std::string& name, const std::string& path) {
  auto it = names.find(name);
  if (it == names.end()) throw SchemaError(path, "unknown node '" + name + "'");
  return it->second;
}

std::map<std::string, int> name_index(const json& arr, const std::string& path,
                                      const std::function<std::string(const json&, const std::string&)>& name_of) {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto p = index_path(path, i);
    if (!out.emplace(name_of(arr[i], p), static_cast<int>(i)).second) throw SchemaError(p, "duplicate name");
  }
  return out;
}

}  // namespace

json to_json(const QueueingInstance& inst) {
  json arcs = json::array();
  for (const auto& a : inst.arcs) arcs.push_back({{"capacity", a.capacity}, {"cost", a.cost}});
  return {{"schemaVersion", kSchemaVersion},
          {"kind", "queueing"},
          {"arcs", arcs},
          {"demand", inst.demand},
          {"epsilon", inst.epsilon}};
}

json to_json(const InterdictionInstance& inst) {
  json arcs = json::array();
  for (const auto& a : inst.arcs) {
    arcs.push_back({{"tail", inst.nodes[a.tail]},
                    {"head", inst.nodes[a.head]},
                    {"capacity", a.capacity},
                    {"cost", a.cost}});
  }
  return {{"schemaVersion", kSchemaVersion},
          {"kind", "interdiction"},
          {"nodes", inst.nodes},
          {"arcs", arcs},
          {"source", inst.nodes[inst.source]},
          {"sink", inst.nodes[inst.sink]},
          {"demand", inst.demand},
          {"adversary", {{"maxArcs", inst.maxArcs}, {"reductionFraction", inst.reductionFraction}}}};
}

json to_json(const GridInstance& inst) {
  json buses = json::array();
  for (const auto& b : inst.buses) {
    buses.push_back({{"name", b.name},
                     {"injMin", real_to_json(b.injMin)},
                     {"injMax", real_to_json(b.injMax)},
                     {"cost", b.cost}});
  }
  json branches = json::array();
  for (const auto& br : inst.branches) {
    branches.push_back({{"from", inst.buses[br.from].name},
                        {"to", inst.buses[br.to].name},
                        {"reactance", br.reactance},
                        {"resistance", br.resistance},
                        {"limit", real_to_json(br.limit)}});
  }
  json set = inst.scenarioSet == GridScenarioSet::Budget ? json{{"kind", "budget"}, {"n", inst.budgetN}}
                                                         : json{{"kind", "ball"}};
  return {{"schemaVersion", kSchemaVersion},
          {"kind", "grid"},
          {"buses", buses},
          {"branches", branches},
          {"slack", inst.buses[inst.slack].name},
          {"family", inst.family == GridFamily::Max ? "max" : "topk"},
          {"k", inst.k},
          {"scenarioSet", set}};
}

json to_json(const ConcentrationInstance& inst) {
  json acts = json::array();
  for (const auto& a : inst.activities) acts.push_back({{"link", a.link}, {"period", a.period}, {"capacity", a.capacity}});
  json comms = json::array();
  for (const auto& c : inst.commodities) {
    comms.push_back({{"weight", c.weight}, {"priority", c.priority}, {"activities", c.activities}, {"costs", c.costs}});
  }
  return {{"schemaVersion", kSchemaVersion},
          {"kind", "concentration"},
          {"activities", acts},
          {"commodities", comms},
          {"gamma", inst.gamma}};
}

QueueingInstance read_queueing_instance(const json& j, const std::string& path) {
  check_schema_version(j, path);
  JsonFields f(j, path);
  QueueingInstance inst;
  const auto& arcs = f.array("arcs");
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    JsonFields a(arcs[i], f.at("arcs/" + std::to_string(i)));
    inst.arcs.push_back({a.real("capacity"), a.real("cost")});
    a.reject_unknown();
  }
  inst.demand = f.real("demand");
  inst.epsilon = f.real("epsilon", inst.epsilon);
  f.reject_unknown();
  return inst;
}

InterdictionInstance read_interdiction_instance(const json& j, const std::string& path) {
  check_schema_version(j, path);
  JsonFields f(j, path);
  InterdictionInstance inst;
  const auto& nodes = f.array("nodes");
  const auto index = name_index(nodes, f.at("nodes"), json_string);
  for (const auto& n : nodes) inst.nodes.push_back(n.get<std::string>());
  const auto& arcs = f.array("arcs");
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    JsonFields a(arcs[i], f.at("arcs/" + std::to_string(i)));
    InterdictionArc arc;
    arc.tail = lookup(index, a.string("tail"), a.at("tail"));
    arc.head = lookup(index, a.string("head"), a.at("head"));
    arc.capacity = a.real("capacity");
    arc.cost = a.real("cost");
    a.reject_unknown();
    inst.arcs.push_back(arc);
  }
  inst.source = lookup(index, f.string("source"), f.at("source"));
  inst.sink = lookup(index, f.string("sink"), f.at("sink"));
  inst.demand = f.real("demand");
  if (const json* adv = f.find("adversary")) {
    JsonFields a(*adv, f.at("adversary"));
    inst.maxArcs = a.integer("maxArcs", inst.maxArcs);
    inst.reductionFraction = a.real("reductionFraction", inst.reductionFraction);
    a.reject_unknown();
  }
  f.reject_unknown();
  return inst;
}

GridInstance read_grid_instance(const json& j, const std::string& path) {
  check_schema_version(j, path);
  JsonFields f(j, path);
  GridInstance inst;
  const auto& buses = f.array("buses");
  const auto index = name_index(buses, f.at("buses"), [](const json& b, const std::string& p) {
    if (!b.is_object()) throw SchemaError(p, "expected an object");
    return json_string(b.value("name", json()), p + "/name");
  });
  for (std::size_t i = 0; i < buses.size(); ++i) {
    JsonFields b(buses[i], f.at("buses/" + std::to_string(i)));
    GridBus bus;
    bus.name = b.string("name");
    bus.injMin = b.real("injMin");
    bus.injMax = b.real("injMax");
    bus.cost = b.real("cost", 0.0);
    b.reject_unknown();
    inst.buses.push_back(bus);
  }
  const auto& branches = f.array("branches");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    JsonFields b(branches[i], f.at("branches/" + std::to_string(i)));
    GridBranch br;
    br.from = lookup(index, b.string("from"), b.at("from"));
    br.to = lookup(index, b.string("to"), b.at("to"));
    br.reactance = b.real("reactance");
    br.resistance = b.real("resistance");
    br.limit = b.bound("limit", kInf);
    b.reject_unknown();
    inst.branches.push_back(br);
  }
  inst.slack = lookup(index, f.string("slack"), f.at("slack"));
  const auto family = f.string("family", "max");
  if (family == "max") inst.family = GridFamily::Max;
  else if (family == "topk") inst.family = GridFamily::TopK;
  else throw SchemaError(f.at("family"), "expected max or topk");
  inst.k = f.integer("k", inst.family == GridFamily::Max ? 1 : 3);
  if (const json* set = f.find("scenarioSet")) {
    JsonFields s(*set, f.at("scenarioSet"));
    const auto kind = s.string("kind");
    if (kind == "budget") {
      inst.scenarioSet = GridScenarioSet::Budget;
      inst.budgetN = s.integer("n", 1);
    } else if (kind == "ball") {
      inst.scenarioSet = GridScenarioSet::Ball;
    } else {
      throw SchemaError(s.at("kind"), "expected budget or ball");
    }
    s.reject_unknown();
  }
  f.reject_unknown();
  return inst;
}

ConcentrationInstance read_concentration_instance(const json& j, const std::string& path) {
  check_schema_version(j, path);
  JsonFields f(j, path);
  if (const json* gen = f.find("generate")) {
    JsonFields g(*gen, f.at("generate"));
    ConcentrationGenConfig cfg;
    cfg.seed = g.unsigned_integer("seed", cfg.seed);
    cfg.links = g.integer("links", cfg.links);
    cfg.periods = g.integer("periods", cfg.periods);
    cfg.commodities = g.integer("commodities", cfg.commodities);
    cfg.optionsPerCommodity = g.integer("optionsPerCommodity", cfg.optionsPerCommodity);
    g.reject_unknown();
    const double gamma = f.real("gamma", 1.0);
    f.reject_unknown();
    auto inst = concentration_generate(cfg);
    inst.gamma = gamma;
    return inst;
  }
  ConcentrationInstance inst;
  const auto& acts = f.array("activities");
  for (std::size_t i = 0; i < acts.size(); ++i) {
    JsonFields a(acts[i], f.at("activities/" + std::to_string(i)));
    inst.activities.push_back({a.integer("link", 0), a.integer("period", 0), a.real("capacity")});
    a.reject_unknown();
  }
  const auto& comms = f.array("commodities");
  for (std::size_t i = 0; i < comms.size(); ++i) {
    JsonFields c(comms[i], f.at("commodities/" + std::to_string(i)));
    ConcentrationCommodity com;
    com.weight = c.real("weight");
    com.priority = c.real("priority", 1.0);
    const auto& as = c.array("activities");
    for (std::size_t k = 0; k < as.size(); ++k) com.activities.push_back(json_int(as[k], c.at("activities/" + std::to_string(k))));
    com.costs = [&] {
      std::vector<double> v;
      const auto& cs = c.array("costs");
      for (std::size_t k = 0; k < cs.size(); ++k) v.push_back(json_real(cs[k], c.at("costs/" + std::to_string(k))));
      return v;
    }();
    c.reject_unknown();
    inst.commodities.push_back(std::move(com));
  }
  inst.gamma = f.real("gamma", 1.0);
  f.reject_unknown();
  return inst;
}

std::unique_ptr<FeatureModel> load_model(const json& j) {
  check_schema_version(j);
  if (!j.contains("kind")) throw SchemaError("/kind", "required field is missing");
  const auto kind = json_string(j["kind"], "/kind");
  if (kind == "queueing") return std::make_unique<QueueingModel>(read_queueing_instance(j));
  if (kind == "interdiction") return std::make_unique<InterdictionModel>(read_interdiction_instance(j));
  if (kind == "grid") return std::make_unique<GridModel>(read_grid_instance(j));
  if (kind == "concentration") return std::make_unique<ConcentrationModel>(read_concentration_instance(j));
  throw SchemaError("/kind", "unknown instance kind '" + kind + "'");
}

Vector read_solution(const json& j, const FeatureModel& model) {
  const json* arr = &j;
  std::string path;
  if (j.is_object()) {
    if (j.contains("x")) {
      arr = &j["x"];
      path = "/x";
    } else if (j.contains("outcome") && j["outcome"].is_object() && j["outcome"].contains("solution")) {
      arr = &j["outcome"]["solution"];
      path = "/outcome/solution";
    } else {
      throw SchemaError("", "expected an array, {\"x\": [...]} or a solve outcome");
    }
  }
  Vector x = read_vector(*arr, path);
  const auto& vars = model.nominal().variables;
  const auto n = static_cast<Eigen::Index>(vars.size());
  if (x.size() >= n) return model.complete(x.head(n));
  Eigen::Index decisions = 0;
  for (const auto& v : vars) decisions += !v.auxiliary;
  if (x.size() != decisions) {
    throw SchemaError(path, "expected " + std::to_string(decisions) + " decision values (or " + std::to_string(n) +
                                " including auxiliaries), got " + std::to_string(x.size()));
  }
  Vector full = Vector::Zero(n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!vars[i].auxiliary) full[i] = x[k++];
  }
  return model.complete(full);
}

}  // namespace derisk
