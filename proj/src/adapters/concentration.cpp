#include "derisk/adapters/concentration.hpp"

#include "derisk/lp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace derisk {

void validate(const ConcentrationInstance& inst) {
  const int na = static_cast<int>(inst.activities.size());
  if (na == 0) throw ModelError("concentration: no activities");
  if (inst.commodities.empty()) throw ModelError("concentration: no commodities");
  if (!(inst.gamma > 0.0)) throw ModelError("concentration: gamma must be positive");
  for (int a = 0; a < na; ++a) {
    if (!(inst.activities[a].capacity >= 0.0)) {
      throw ModelError("concentration: activities[" + std::to_string(a) + "].capacity must be nonnegative");
    }
  }
  for (std::size_t j = 0; j < inst.commodities.size(); ++j) {
    const auto& c = inst.commodities[j];
    const auto where = "concentration: commodities[" + std::to_string(j) + "]";
    if (!(c.weight > 0.0)) throw ModelError(where + ".weight must be positive");
    if (!(c.priority >= 0.0)) throw ModelError(where + ".priority must be nonnegative");
    if (c.activities.empty() || c.activities.size() != c.costs.size()) {
      throw ModelError(where + " needs one cost per option and at least one option");
    }
    for (int a : c.activities) {
      if (a < 0 || a >= na) throw ModelError(where + " references an unknown activity");
    }
  }
}

Vector activity_loads(const ConcentrationInstance& inst, const Vector& x) {
  Vector loads = Vector::Zero(static_cast<Eigen::Index>(inst.activities.size()));
  Eigen::Index v = 0;
  for (const auto& c : inst.commodities) {
    for (int a : c.activities) {
      if (v >= x.size()) throw ModelError("concentration: decision vector too short");
      loads[a] += c.weight * x[v++];
    }
  }
  return loads;
}

double top_share(const Vector& loads, double fraction) {
  const double total = loads.sum();
  if (!(total > 0.0)) return 0.0;
  std::vector<double> v(loads.data(), loads.data() + loads.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(v.size())));
  double s = 0.0;
  for (std::size_t i = 0; i < k && i < v.size(); ++i) s += v[i];
  return s / total;
}

namespace {

ConcentrationInstance generate_once(const ConcentrationGenConfig& cfg, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  ConcentrationInstance inst;
  const int na = cfg.links * cfg.periods;
  const int hubs = std::max(1, static_cast<int>(std::ceil(0.1 * na)));
  std::vector<int> order(na);
  for (int a = 0; a < na; ++a) order[a] = a;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> hub(na, false);
  for (int h = 0; h < hubs; ++h) hub[order[h]] = true;

  std::vector<double> baseCost(na);
  for (int a = 0; a < na; ++a) {
    inst.activities.push_back({a / cfg.periods, a % cfg.periods, 0.0});
    baseCost[a] = hub[a] ? 0.5 + 0.5 * u01(rng) : 1.0 + 2.0 * u01(rng);
  }
  std::uniform_int_distribution<int> pickAny(0, na - 1);
  std::uniform_int_distribution<int> pickHub(0, hubs - 1);
  std::vector<double> load(na, 0.0);
  for (int j = 0; j < cfg.commodities; ++j) {
    ConcentrationCommodity c;
    c.weight = 1.0 + 9.0 * u01(rng);
    c.priority = 0.5 + u01(rng);
    while (static_cast<int>(c.activities.size()) < cfg.optionsPerCommodity) {
      const int a = c.activities.empty() && u01(rng) < 0.7 ? order[pickHub(rng)] : pickAny(rng);
      if (std::find(c.activities.begin(), c.activities.end(), a) != c.activities.end()) continue;
      c.activities.push_back(a);
      c.costs.push_back(baseCost[a] * (1.0 + 0.2 * u01(rng)));
    }
    // loads of the all-first-option routing
    load[c.activities.front()] += c.weight;
    inst.commodities.push_back(std::move(c));
  }
  for (int a = 0; a < na; ++a) inst.activities[a].capacity = load[a] + (hub[a] ? 20.0 : 5.0) * u01(rng);
  return inst;
}

}  // namespace

ConcentrationInstance concentration_generate(const ConcentrationGenConfig& cfg) {
  if (cfg.links < 1 || cfg.periods < 1 || cfg.commodities < 1 || cfg.optionsPerCommodity < 1) {
    throw ModelError("concentration_generate: sizes must be positive");
  }
  if (cfg.links * cfg.periods > 50 || cfg.commodities > 20) {
    throw ModelError("concentration_generate: at most 50 activities and 20 commodities");
  }
  if (cfg.optionsPerCommodity > cfg.links * cfg.periods) {
    throw ModelError("concentration_generate: more options than activities");
  }
  for (unsigned attempt = 0; attempt < 100; ++attempt) {
    ConcentrationInstance inst = generate_once(cfg, cfg.seed + attempt);
    const ConcentrationModel model(inst);
    const LpSolution sol = solve_lp(with_epigraph(model.nominal(), 1.0));
    if (sol.status != LpStatus::Optimal) continue;
    if (top_share(activity_loads(inst, sol.x), 0.1) >= 0.4) return inst;
  }
  throw ModelError("concentration_generate: no concentrated instance within 100 attempts");
}

ConcentrationModel::ConcentrationModel(ConcentrationInstance inst) : inst_(std::move(inst)) {
  validate(inst_);
  const auto na = inst_.activities.size();
  std::vector<LinearExpr> cap(na);
  features_.assign(na, LinearExpr{});
  for (std::size_t j = 0; j < inst_.commodities.size(); ++j) {
    const auto& c = inst_.commodities[j];
    offsets_.push_back(static_cast<int>(nominal_.size()));
    LinearExpr assign;
    for (std::size_t o = 0; o < c.activities.size(); ++o) {
      const VarId v = nominal_.add_variable("x_" + std::to_string(j) + "_" + std::to_string(o), 0.0, 1.0);
      nominal_.cost.add(v, c.weight * c.costs[o]);
      assign.add(v, 1.0);
      cap[c.activities[o]].add(v, c.weight);
      features_[c.activities[o]].add(v, c.priority * c.weight);
    }
    nominal_.constraints.push_back({assign, Sense::Eq, 1.0, "assign_" + std::to_string(j)});
  }
  for (std::size_t a = 0; a < na; ++a) {
    if (cap[a].empty()) continue;
    nominal_.constraints.push_back({cap[a], Sense::Le, inst_.activities[a].capacity, "cap_" + std::to_string(a)});
  }
}

std::string ConcentrationModel::feature_name(Eigen::Index i) const {
  const auto& a = inst_.activities[i];
  return "link" + std::to_string(a.link) + "@" + std::to_string(a.period);
}

FeatureEval ConcentrationModel::evaluate(const Vector& x, const ScenarioVector&) const {
  Vector v(feature_count());
  for (Eigen::Index a = 0; a < v.size(); ++a) v[a] = std::max(0.0, features_[a].evaluate(x));
  return make_feature_eval(std::move(v));
}

Cut ConcentrationModel::linearize(const Vector&, const ScenarioVector&, const Vector& pi) const {
  Cut c;
  for (Eigen::Index a = 0; a < pi.size(); ++a) {
    if (pi[a] != 0.0) c.xCoeffs.add(feature_expr(a), -pi[a]);
  }
  c.rhs = 0.0;
  return c;
}

PhiValue ConcentrationModel::exact_phi(const Vector& x) const {
  const auto e = evaluate(x, {});
  return {e.phiMax, {}, e.argmaxId};
}

}  // namespace derisk
