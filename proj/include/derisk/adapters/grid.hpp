#pragma once

#include "derisk/feature_model.hpp"

#include <string>
#include <vector>

namespace derisk {

struct GridBus {
  std::string name;
  /// Net injection bounds; loads have injMin = injMax = -demand.
  double injMin = 0.0;
  double injMax = 0.0;
  /// Linear cost per unit of injection.
  double cost = 0.0;
};

struct GridBranch {
  int from = 0;
  int to = 0;
  double reactance = 1.0;
  double resistance = 1.0;
  double limit = kInf;
};

enum class GridFamily { Max, TopK };
enum class GridScenarioSet { Budget, Ball };

struct GridInstance {
  std::vector<GridBus> buses;
  std::vector<GridBranch> branches;
  int slack = 0;
  GridFamily family = GridFamily::Max;
  /// Tuple size of the top-k family.
  int k = 1;
  GridScenarioSet scenarioSet = GridScenarioSet::Budget;
  int budgetN = 1;
};

void validate(const GridInstance& inst);

/// Branch flows for the given bus injections (the slack bus absorbs the
/// imbalance), from the reduced susceptance system.
Vector dc_power_flow(const GridInstance& inst, const Vector& injections, int slack);

/// T_km = r_km P_km^2 per branch.
FeatureEval grid_features(const GridInstance& inst, const Vector& flows);

struct TopKValue {
  double value = 0.0;
  std::vector<Eigen::Index> tuple;
};

/// (1/k) sum of the k largest entries of T and the tuple attaining it
/// (ascending indices).
TopKValue ordered_topk_features(const Vector& T, int k);

/// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<int>> k_tuples(int n, int k);

/// Master variables: injections p_b, angles theta_b and flows P_l, in that
/// order. Features are per branch (max family) or per k-tuple (top-k family);
/// the adversary scales T by (1 + z).
class GridModel final : public FeatureModel {
 public:
  explicit GridModel(GridInstance inst);

  std::string kind() const override { return "grid"; }
  const MasterProblem& nominal() const override { return nominal_; }
  Eigen::Index feature_count() const override { return static_cast<Eigen::Index>(tuples_.size()); }
  std::string feature_name(Eigen::Index i) const override;
  ScenarioSetKind scenario_set() const override;
  bool contains(const ScenarioVector& z) const override;
  int budget() const override { return inst_.budgetN; }
  Vector base_values(const Vector& x) const override;
  int tuple_size() const override { return family_k(); }
  FeatureEval evaluate(const Vector& x, const ScenarioVector& z) const override;
  Cut linearize(const Vector& x, const ScenarioVector& z, const Vector& pi) const override;
  std::vector<Cut> extra_cuts(const Vector& x, const ScenarioVector& z, int nCuts, int pool) const override;
  PhiValue exact_phi(const Vector& x) const override;

  const GridInstance& instance() const { return inst_; }
  VarId injection_var(int b) const { return b; }
  VarId angle_var(int b) const { return static_cast<VarId>(inst_.buses.size()) + b; }
  VarId flow_var(int l) const { return static_cast<VarId>(2 * inst_.buses.size()) + l; }
  Vector flows(const Vector& x) const;
  const std::vector<std::vector<int>>& tuples() const { return tuples_; }

 private:
  int family_k() const { return inst_.family == GridFamily::Max ? 1 : inst_.k; }
  Vector dense_z(const ScenarioVector& z) const;

  GridInstance inst_;
  MasterProblem nominal_;
  std::vector<std::vector<int>> tuples_;
};

/// Up to nCuts tuple cuts from the k-tuples of the poolTop largest T, ranked
/// by (1/k) sum (1+z) T; the first is always the overall argmax tuple. Each
/// cut uses the tangent of r P^2 at the current flows.
std::vector<Cut> grid_tuple_separation(const GridModel& model, const Vector& x, const ScenarioVector& z, int poolTop,
                                       int nCuts);

}  // namespace derisk
