#include "derisk/adapters/interdiction.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace derisk {

void validate(const InterdictionInstance& inst) {
  const int n = static_cast<int>(inst.nodes.size());
  if (n < 2) throw ModelError("interdiction: need at least two nodes");
  if (inst.source < 0 || inst.source >= n || inst.sink < 0 || inst.sink >= n || inst.source == inst.sink) {
    throw ModelError("interdiction: invalid source or sink");
  }
  if (n - 2 > 20) throw ModelError("interdiction: cut enumeration supports at most 20 inner nodes");
  if (inst.maxArcs < 0) throw ModelError("interdiction: adversary.maxArcs must be nonnegative");
  if (!(inst.reductionFraction > 0.0 && inst.reductionFraction < 1.0)) {
    throw ModelError("interdiction: adversary.reductionFraction must lie in (0, 1)");
  }
  if (!(inst.demand >= 0.0)) throw ModelError("interdiction: demand must be nonnegative");
  std::vector<double> cap;
  for (std::size_t a = 0; a < inst.arcs.size(); ++a) {
    const auto& arc = inst.arcs[a];
    if (arc.tail < 0 || arc.tail >= n || arc.head < 0 || arc.head >= n || arc.tail == arc.head) {
      throw ModelError("interdiction: arcs[" + std::to_string(a) + "] has invalid endpoints");
    }
    if (!(arc.capacity >= 0.0)) throw ModelError("interdiction: arcs[" + std::to_string(a) + "].capacity must be nonnegative");
    cap.push_back(arc.capacity);
  }
  if (max_flow(n, inst.arcs, cap, inst.source, inst.sink) < inst.demand - 1e-9) {
    throw ModelError("interdiction: nominal max flow is below the demand");
  }
}

double max_flow(int nNodes, const std::vector<InterdictionArc>& arcs, const std::vector<double>& capacity, int source,
                int sink, std::vector<bool>* reachable) {
  // Residual graph with paired forward/backward edges.
  struct Edge {
    int to;
    double cap;
  };
  std::vector<Edge> edges;
  std::vector<std::vector<int>> adj(nNodes);
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    adj[arcs[a].tail].push_back(static_cast<int>(edges.size()));
    edges.push_back({arcs[a].head, std::max(0.0, capacity[a])});
    adj[arcs[a].head].push_back(static_cast<int>(edges.size()));
    edges.push_back({arcs[a].tail, 0.0});
  }
  constexpr double kEps = 1e-12;
  double flow = 0.0;
  std::vector<int> via(nNodes);
  for (;;) {
    std::fill(via.begin(), via.end(), -1);
    std::vector<bool> seen(nNodes, false);
    std::queue<int> q;
    q.push(source);
    seen[source] = true;
    while (!q.empty() && !seen[sink]) {
      const int u = q.front();
      q.pop();
      for (int e : adj[u]) {
        const int v = edges[e].to;
        if (!seen[v] && edges[e].cap > kEps) {
          seen[v] = true;
          via[v] = e;
          q.push(v);
        }
      }
    }
    if (!seen[sink]) {
      if (reachable) *reachable = seen;
      return flow;
    }
    double push = std::numeric_limits<double>::infinity();
    for (int v = sink; v != source; v = edges[via[v] ^ 1].to) push = std::min(push, edges[via[v]].cap);
    for (int v = sink; v != source; v = edges[via[v] ^ 1].to) {
      edges[via[v]].cap -= push;
      edges[via[v] ^ 1].cap += push;
    }
    flow += push;
  }
}

namespace {

std::vector<double> effective_capacity(const InterdictionInstance& inst, const Vector& x, const ScenarioVector& z) {
  std::vector<double> cap(inst.arcs.size());
  for (std::size_t a = 0; a < inst.arcs.size(); ++a) {
    cap[a] = std::min(x[static_cast<Eigen::Index>(a)], z.at(static_cast<int>(a), inst.arcs[a].capacity));
  }
  return cap;
}

FeatureEval cut_values(const InterdictionInstance& inst, const std::vector<std::vector<int>>& cutArcs,
                       const std::vector<double>& cap) {
  Vector v(static_cast<Eigen::Index>(cutArcs.size()));
  for (std::size_t S = 0; S < cutArcs.size(); ++S) {
    double c = 0.0;
    for (int a : cutArcs[S]) c += cap[a];
    v[static_cast<Eigen::Index>(S)] = std::max(inst.demand - c, 0.0);
  }
  return make_feature_eval(std::move(v));
}

std::vector<std::vector<int>> enumerate_cut_arcs(const InterdictionInstance& inst) {
  std::vector<int> inner;
  for (int v = 0; v < static_cast<int>(inst.nodes.size()); ++v) {
    if (v != inst.source && v != inst.sink) inner.push_back(v);
  }
  std::vector<std::vector<int>> out(std::size_t{1} << inner.size());
  for (std::size_t mask = 0; mask < out.size(); ++mask) {
    std::vector<bool> S(inst.nodes.size(), false);
    S[inst.source] = true;
    for (std::size_t b = 0; b < inner.size(); ++b) {
      if ((mask >> b) & 1U) S[inner[b]] = true;
    }
    for (std::size_t a = 0; a < inst.arcs.size(); ++a) {
      if (S[inst.arcs[a].tail] && !S[inst.arcs[a].head]) out[mask].push_back(static_cast<int>(a));
    }
  }
  return out;
}

}  // namespace

InterdictionPhi interdiction_phi(const InterdictionInstance& inst, const Vector& x, const ScenarioVector& z) {
  if (x.size() < static_cast<Eigen::Index>(inst.arcs.size())) throw ModelError("interdiction: decision vector too short");
  InterdictionPhi r;
  const double f = max_flow(static_cast<int>(inst.nodes.size()), inst.arcs, effective_capacity(inst, x, z),
                            inst.source, inst.sink, &r.cut);
  r.phi = std::max(inst.demand - f, 0.0);
  return r;
}

ScenarioVector interdiction_scenario(const InterdictionInstance& inst, const std::vector<int>& subset) {
  ScenarioVector z;
  for (std::size_t a = 0; a < inst.arcs.size(); ++a) z.entries[static_cast<int>(a)] = inst.arcs[a].capacity;
  for (int a : subset) z.entries[a] = (1.0 - inst.reductionFraction) * inst.arcs[a].capacity;
  return z;
}

std::vector<std::vector<int>> interdiction_subsets(int nArcs, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  // Depth-first extension yields lexicographic order directly.
  auto rec = [&](auto&& self, int next) -> void {
    out.push_back(cur);
    if (static_cast<int>(cur.size()) == k) return;
    for (int a = next; a < nArcs; ++a) {
      cur.push_back(a);
      self(self, a + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

Cut interdiction_linearize(const InterdictionInstance& inst, const Vector& x, const ScenarioVector& z,
                           const std::vector<bool>& S) {
  Cut c;
  double constant = 0.0;
  for (std::size_t a = 0; a < inst.arcs.size(); ++a) {
    const auto& arc = inst.arcs[a];
    if (!S[arc.tail] || S[arc.head]) continue;
    const double za = z.at(static_cast<int>(a), arc.capacity);
    if (x[static_cast<Eigen::Index>(a)] >= za) constant += za;
    else c.xCoeffs.add(static_cast<VarId>(a), 1.0);
  }
  c.rhs = inst.demand - constant;
  return c;
}

AdversaryResult interdiction_adversary(const InterdictionInstance& inst, const Vector& x) {
  AdversaryResult best;
  bool have = false;
  for (const auto& s : interdiction_subsets(static_cast<int>(inst.arcs.size()), inst.maxArcs)) {
    auto z = interdiction_scenario(inst, s);
    const double phi = interdiction_phi(inst, x, z).phi;
    if (!have || phi > best.phi + 1e-9) {
      have = true;
      best.subset = s;
      best.z = std::move(z);
      best.phi = phi;
    }
  }
  best.eval = cut_values(inst, enumerate_cut_arcs(inst), effective_capacity(inst, x, best.z));
  return best;
}

InterdictionModel::InterdictionModel(InterdictionInstance inst) : inst_(std::move(inst)) {
  validate(inst_);
  const int n = static_cast<int>(inst_.nodes.size());
  std::vector<LinearExpr> balance(n);
  for (std::size_t a = 0; a < inst_.arcs.size(); ++a) {
    const auto& arc = inst_.arcs[a];
    const VarId v = nominal_.add_variable("x_" + inst_.nodes[arc.tail] + "_" + inst_.nodes[arc.head], 0.0, arc.capacity);
    nominal_.cost.add(v, arc.cost);
    balance[arc.tail].add(v, 1.0);
    balance[arc.head].add(v, -1.0);
  }
  for (int v = 0; v < n; ++v) {
    const double rhs = v == inst_.source ? inst_.demand : v == inst_.sink ? -inst_.demand : 0.0;
    nominal_.constraints.push_back({balance[v], Sense::Eq, rhs, "balance_" + inst_.nodes[v]});
  }
  for (int v = 0; v < n; ++v) {
    if (v != inst_.source && v != inst_.sink) inner_.push_back(v);
  }
  cutArcs_ = enumerate_cut_arcs(inst_);
  subsets_ = interdiction_subsets(static_cast<int>(inst_.arcs.size()), inst_.maxArcs);
  for (const auto& s : subsets_) scenarios_.push_back(interdiction_scenario(inst_, s));
}

std::vector<bool> InterdictionModel::cut_set(Eigen::Index i) const {
  std::vector<bool> S(inst_.nodes.size(), false);
  S[inst_.source] = true;
  for (std::size_t b = 0; b < inner_.size(); ++b) {
    if ((static_cast<std::uint64_t>(i) >> b) & 1U) S[inner_[b]] = true;
  }
  return S;
}

std::string InterdictionModel::feature_name(Eigen::Index i) const {
  std::string s = "{";
  const auto S = cut_set(i);
  for (std::size_t v = 0; v < S.size(); ++v) {
    if (!S[v]) continue;
    if (s.size() > 1) s += ",";
    s += inst_.nodes[v];
  }
  return s + "}";
}

bool InterdictionModel::contains(const ScenarioVector& z) const {
  return std::find(scenarios_.begin(), scenarios_.end(), z) != scenarios_.end();
}

FeatureEval InterdictionModel::evaluate(const Vector& x, const ScenarioVector& z) const {
  return cut_values(inst_, cutArcs_, effective_capacity(inst_, x, z));
}

Cut InterdictionModel::linearize(const Vector& x, const ScenarioVector& z, const Vector& pi) const {
  const FeatureEval e = evaluate(x, z);
  Cut out;
  double rhs = 0.0;
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (pi[i] == 0.0 || e.values[i] <= 0.0) continue;
    const Cut c = interdiction_linearize(inst_, x, z, cut_set(i));
    out.xCoeffs.add(c.xCoeffs, pi[i]);
    rhs += pi[i] * c.rhs;
  }
  out.rhs = rhs;
  return out;
}

PhiValue InterdictionModel::exact_phi(const Vector& x) const {
  const auto adv = interdiction_adversary(inst_, x);
  return {adv.phi, adv.z, adv.eval.argmaxId};
}

}  // namespace derisk
