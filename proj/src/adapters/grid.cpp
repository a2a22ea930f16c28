#include "derisk/adapters/grid.hpp"

#include "derisk/kernels.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <map>
#include <numeric>

namespace derisk {

void validate(const GridInstance& inst) {
  const int n = static_cast<int>(inst.buses.size());
  if (n < 2) throw ModelError("grid: need at least two buses");
  if (inst.slack < 0 || inst.slack >= n) throw ModelError("grid: slack bus out of range");
  if (inst.branches.empty()) throw ModelError("grid: no branches");
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (std::size_t l = 0; l < inst.branches.size(); ++l) {
    const auto& br = inst.branches[l];
    const auto where = "grid: branches[" + std::to_string(l) + "]";
    if (br.from < 0 || br.from >= n || br.to < 0 || br.to >= n || br.from == br.to) {
      throw ModelError(where + " has invalid endpoints");
    }
    if (!(br.reactance > 0.0)) throw ModelError(where + ".reactance must be positive");
    if (!(br.resistance > 0.0)) throw ModelError(where + ".resistance must be positive");
    if (!(br.limit > 0.0)) throw ModelError(where + ".limit must be positive");
    parent[find(br.from)] = find(br.to);
  }
  for (int b = 0; b < n; ++b) {
    if (find(b) != find(0)) throw ModelError("grid: network is not connected");
    if (inst.buses[b].injMin > inst.buses[b].injMax) {
      throw ModelError("grid: buses[" + std::to_string(b) + "] has injMin > injMax");
    }
  }
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& b : inst.buses) {
    lo += b.injMin;
    hi += b.injMax;
  }
  if (lo > 1e-9 || hi < -1e-9) throw ModelError("grid: total demand exceeds generation capacity");
  const int nb = static_cast<int>(inst.branches.size());
  if (inst.family == GridFamily::TopK && (inst.k < 1 || inst.k > nb)) throw ModelError("grid: k out of range");
  if (inst.scenarioSet == GridScenarioSet::Budget && inst.budgetN < 1) throw ModelError("grid: budgetN must be at least 1");
}

Vector dc_power_flow(const GridInstance& inst, const Vector& injections, int slack) {
  const auto n = static_cast<Eigen::Index>(inst.buses.size());
  if (injections.size() != n) throw ModelError("dc_power_flow: one injection per bus required");
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (const auto& br : inst.branches) {
    const double b = 1.0 / br.reactance;
    B(br.from, br.from) += b;
    B(br.to, br.to) += b;
    B(br.from, br.to) -= b;
    B(br.to, br.from) -= b;
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != slack) keep.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd Br(m, m);
  Vector pr(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    pr[i] = injections[keep[i]];
    for (Eigen::Index j = 0; j < m; ++j) Br(i, j) = B(keep[i], keep[j]);
  }
  const Vector thr = Br.ldlt().solve(pr);
  Vector theta = Vector::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) theta[keep[i]] = thr[i];
  Vector P(static_cast<Eigen::Index>(inst.branches.size()));
  for (std::size_t l = 0; l < inst.branches.size(); ++l) {
    const auto& br = inst.branches[l];
    P[static_cast<Eigen::Index>(l)] = (theta[br.from] - theta[br.to]) / br.reactance;
  }
  return P;
}

FeatureEval grid_features(const GridInstance& inst, const Vector& flows) {
  if (flows.size() != static_cast<Eigen::Index>(inst.branches.size())) throw ModelError("grid_features: one flow per branch required");
  Vector T(flows.size());
  for (Eigen::Index l = 0; l < flows.size(); ++l) T[l] = inst.branches[l].resistance * flows[l] * flows[l];
  return make_feature_eval(std::move(T));
}

TopKValue ordered_topk_features(const Vector& T, int k) {
  if (k < 1) throw ModelError("ordered_topk_features: k must be at least 1");
  if (T.size() < k) throw ModelError("ordered_topk_features: fewer than k branches");
  TopKValue r;
  r.tuple = top_indices(T, k);
  double s = 0.0;
  for (auto i : r.tuple) s += T[i];
  r.value = s / k;
  std::sort(r.tuple.begin(), r.tuple.end());
  return r;
}

std::vector<std::vector<int>> k_tuples(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k < 1 || k > n) return out;
  std::vector<int> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  for (;;) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == n - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

GridModel::GridModel(GridInstance inst) : inst_(std::move(inst)) {
  validate(inst_);
  const int n = static_cast<int>(inst_.buses.size());
  const int nb = static_cast<int>(inst_.branches.size());
  for (int b = 0; b < n; ++b) {
    const auto& bus = inst_.buses[b];
    const VarId v = nominal_.add_variable("p_" + bus.name, bus.injMin, bus.injMax);
    nominal_.cost.add(v, bus.cost);
  }
  for (int b = 0; b < n; ++b) {
    const bool slack = b == inst_.slack;
    nominal_.add_variable("theta_" + inst_.buses[b].name, slack ? 0.0 : -kInf, slack ? 0.0 : kInf);
  }
  for (int l = 0; l < nb; ++l) {
    const auto& br = inst_.branches[l];
    nominal_.add_variable("P_" + inst_.buses[br.from].name + "_" + inst_.buses[br.to].name, -br.limit, br.limit);
  }
  for (int l = 0; l < nb; ++l) {
    const auto& br = inst_.branches[l];
    LinearExpr e;
    e.add(flow_var(l), 1.0).add(angle_var(br.from), -1.0 / br.reactance).add(angle_var(br.to), 1.0 / br.reactance);
    nominal_.constraints.push_back({e, Sense::Eq, 0.0, "dcflow_" + std::to_string(l)});
  }
  std::vector<LinearExpr> balance(n);
  for (int b = 0; b < n; ++b) balance[b].add(injection_var(b), -1.0);
  for (int l = 0; l < nb; ++l) {
    balance[inst_.branches[l].from].add(flow_var(l), 1.0);
    balance[inst_.branches[l].to].add(flow_var(l), -1.0);
  }
  for (int b = 0; b < n; ++b) nominal_.constraints.push_back({balance[b], Sense::Eq, 0.0, "balance_" + inst_.buses[b].name});
  tuples_ = k_tuples(nb, family_k());
}

std::string GridModel::feature_name(Eigen::Index i) const {
  std::string s = "(";
  for (std::size_t j = 0; j < tuples_[i].size(); ++j) {
    const auto& br = inst_.branches[tuples_[i][j]];
    if (j) s += ",";
    s += inst_.buses[br.from].name + "-" + inst_.buses[br.to].name;
  }
  return s + ")";
}

ScenarioSetKind GridModel::scenario_set() const {
  return inst_.scenarioSet == GridScenarioSet::Budget ? ScenarioSetKind::Budget : ScenarioSetKind::Ball;
}

bool GridModel::contains(const ScenarioVector& z) const {
  double sum = 0.0;
  double norm2 = 0.0;
  for (const auto& [key, v] : z.entries) {
    if (key < 0 || key >= static_cast<int>(inst_.branches.size()) || v < -1e-12) return false;
    if (inst_.scenarioSet == GridScenarioSet::Budget && v > 1.0 + 1e-12) return false;
    sum += v;
    norm2 += v * v;
  }
  if (inst_.scenarioSet == GridScenarioSet::Budget) return sum <= inst_.budgetN + 1e-9;
  return norm2 <= 1.0 + 1e-9;
}

Vector GridModel::flows(const Vector& x) const {
  const auto nb = static_cast<Eigen::Index>(inst_.branches.size());
  if (x.size() < flow_var(0) + nb) throw ModelError("grid: decision vector too short");
  return x.segment(flow_var(0), nb);
}

Vector GridModel::base_values(const Vector& x) const { return grid_features(inst_, flows(x)).values; }

Vector GridModel::dense_z(const ScenarioVector& z) const {
  Vector d = Vector::Zero(static_cast<Eigen::Index>(inst_.branches.size()));
  for (const auto& [key, v] : z.entries) {
    if (key >= 0 && key < d.size()) d[key] = v;
  }
  return d;
}

FeatureEval GridModel::evaluate(const Vector& x, const ScenarioVector& z) const {
  const Vector T = base_values(x);
  const Vector w = ((1.0 + dense_z(z).array()) * T.array()).matrix();
  const double k = family_k();
  Vector v(static_cast<Eigen::Index>(tuples_.size()));
  for (std::size_t i = 0; i < tuples_.size(); ++i) {
    double s = 0.0;
    for (int l : tuples_[i]) s += w[l];
    v[static_cast<Eigen::Index>(i)] = s / k;
  }
  return make_feature_eval(std::move(v));
}

Cut GridModel::linearize(const Vector& x, const ScenarioVector& z, const Vector& pi) const {
  const Vector P = flows(x);
  const Vector zd = dense_z(z);
  const double k = family_k();
  Vector weight = Vector::Zero(P.size());
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi[i] == 0.0) continue;
    for (int l : tuples_[i]) weight[l] += pi[i] / k * (1.0 + zd[l]);
  }
  Cut c;
  double rhs = 0.0;
  for (Eigen::Index l = 0; l < P.size(); ++l) {
    if (weight[l] == 0.0) continue;
    const double r = inst_.branches[l].resistance;
    c.xCoeffs.add(flow_var(static_cast<int>(l)), -2.0 * weight[l] * r * P[l]);
    rhs -= weight[l] * r * P[l] * P[l];
  }
  c.rhs = rhs;
  return c;
}

std::vector<Cut> GridModel::extra_cuts(const Vector& x, const ScenarioVector& z, int nCuts, int pool) const {
  return grid_tuple_separation(*this, x, z, pool, nCuts);
}

PhiValue GridModel::exact_phi(const Vector& x) const {
  const Vector T = base_values(x);
  const Vector z = inst_.scenarioSet == GridScenarioSet::Budget
                       ? budget_topN_scenario(T, std::min(inst_.budgetN, family_k()))
                       : ball_scenario(T, family_k());
  PhiValue out;
  out.z = to_scenario(z);
  const auto e = evaluate(x, out.z);
  out.phi = e.phiMax;
  out.feature = e.argmaxId;
  return out;
}

std::vector<Cut> grid_tuple_separation(const GridModel& model, const Vector& x, const ScenarioVector& z, int poolTop,
                                       int nCuts) {
  const auto& tuples = model.tuples();
  const int k = model.tuple_size();
  const Vector T = model.base_values(x);
  if (poolTop < k) throw ModelError("grid_tuple_separation: poolTop must be at least k");
  const FeatureEval e = model.evaluate(x, z);

  std::map<std::vector<int>, Eigen::Index> index;
  for (std::size_t i = 0; i < tuples.size(); ++i) index.emplace(tuples[i], static_cast<Eigen::Index>(i));

  auto pool = top_indices(T, std::min<Eigen::Index>(poolTop, T.size()));
  std::sort(pool.begin(), pool.end());
  std::vector<Eigen::Index> chosen{e.argmaxId};
  std::vector<Eigen::Index> candidates;
  for (const auto& sub : k_tuples(static_cast<int>(pool.size()), k)) {
    std::vector<int> tup;
    for (int j : sub) tup.push_back(static_cast<int>(pool[j]));
    candidates.push_back(index.at(tup));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](Eigen::Index a, Eigen::Index b) {
    return e.values[a] > e.values[b] || (e.values[a] == e.values[b] && a < b);
  });
  for (auto c : candidates) {
    if (static_cast<int>(chosen.size()) >= nCuts) break;
    if (c != e.argmaxId) chosen.push_back(c);
  }
  std::vector<Cut> cuts;
  for (auto i : chosen) {
    Vector pi = Vector::Zero(static_cast<Eigen::Index>(tuples.size()));
    pi[i] = 1.0;
    Cut c = model.linearize(x, z, pi);
    c.provenance.pi = pi;
    if (!z.entries.empty()) c.provenance.z = z;
    cuts.push_back(std::move(c));
  }
  return cuts;
}

}  // namespace derisk
