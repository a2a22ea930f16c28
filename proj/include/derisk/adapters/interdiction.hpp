#pragma once

#include "derisk/feature_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace derisk {

struct InterdictionArc {
  int tail = 0;
  int head = 0;
  double capacity = 0.0;
  double cost = 0.0;
};

struct InterdictionInstance {
  std::vector<std::string> nodes;
  std::vector<InterdictionArc> arcs;
  int source = 0;
  int sink = 1;
  double demand = 0.0;
  int maxArcs = 2;
  double reductionFraction = 0.5;
};

void validate(const InterdictionInstance& inst);

/// Edmonds-Karp max flow. `reachable` receives the source side of a minimum
/// cut (nodes reachable in the final residual graph).
double max_flow(int nNodes, const std::vector<InterdictionArc>& arcs, const std::vector<double>& capacity,
                int source, int sink, std::vector<bool>* reachable = nullptr);

struct InterdictionPhi {
  double phi = 0.0;
  /// Source side S of the minimum cut.
  std::vector<bool> cut;
};

/// Phi(x|z) = max(M - maxflow under min(x, z), 0). An empty z means no
/// reduction.
InterdictionPhi interdiction_phi(const InterdictionInstance& inst, const Vector& x, const ScenarioVector& z);

/// Effective capacities for interdicting the arcs in `subset`.
ScenarioVector interdiction_scenario(const InterdictionInstance& inst, const std::vector<int>& subset);

/// All arc subsets of size <= k in lexicographic order (empty set first).
std::vector<std::vector<int>> interdiction_subsets(int nArcs, int k);

struct AdversaryResult {
  std::vector<int> subset;
  ScenarioVector z;
  FeatureEval eval;
  double phi = 0.0;
};

/// Exhaustive adversary over subsets of size <= k; lowest subset on ties.
AdversaryResult interdiction_adversary(const InterdictionInstance& inst, const Vector& x);

/// Valid cut phi_L + sum(var arcs) x >= M - sum(const arcs) z for the s-t cut
/// S: arcs leaving S contribute z when x >= z at the current point, x
/// otherwise.
Cut interdiction_linearize(const InterdictionInstance& inst, const Vector& x, const ScenarioVector& z,
                           const std::vector<bool>& S);

/// One feature per s-t cut S = {s} + subset of inner nodes, indexed by the
/// bitmask over inner nodes in declaration order.
class InterdictionModel final : public FeatureModel {
 public:
  explicit InterdictionModel(InterdictionInstance inst);

  std::string kind() const override { return "interdiction"; }
  const MasterProblem& nominal() const override { return nominal_; }
  Eigen::Index feature_count() const override { return static_cast<Eigen::Index>(cutArcs_.size()); }
  std::string feature_name(Eigen::Index i) const override;
  ScenarioSetKind scenario_set() const override { return ScenarioSetKind::Finite; }
  std::vector<ScenarioVector> scenarios() const override { return scenarios_; }
  bool contains(const ScenarioVector& z) const override;
  FeatureEval evaluate(const Vector& x, const ScenarioVector& z) const override;
  Cut linearize(const Vector& x, const ScenarioVector& z, const Vector& pi) const override;
  PhiValue exact_phi(const Vector& x) const override;

  const InterdictionInstance& instance() const { return inst_; }
  /// Source side of the cut with feature index i.
  std::vector<bool> cut_set(Eigen::Index i) const;
  const std::vector<std::vector<int>>& subsets() const { return subsets_; }

 private:
  InterdictionInstance inst_;
  MasterProblem nominal_;
  std::vector<int> inner_;
  std::vector<std::vector<int>> cutArcs_;
  std::vector<std::vector<int>> subsets_;
  std::vector<ScenarioVector> scenarios_;
};

}  // namespace derisk
