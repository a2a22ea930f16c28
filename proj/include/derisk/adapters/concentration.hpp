#pragma once

#include "derisk/feature_model.hpp"

#include <string>
#include <vector>

namespace derisk {

struct ConcentrationActivity {
  int link = 0;
  int period = 0;
  double capacity = 0.0;
};

/// Shipping commodity j through option o uses activity `activities[o]` at
/// unit cost `costs[o]` (per unit of weight).
struct ConcentrationCommodity {
  double weight = 1.0;
  double priority = 1.0;
  std::vector<int> activities;
  std::vector<double> costs;
};

struct ConcentrationInstance {
  std::vector<ConcentrationActivity> activities;
  std::vector<ConcentrationCommodity> commodities;
  /// Budget of the synthetic adversary.
  double gamma = 1.0;
};

void validate(const ConcentrationInstance& inst);

struct ConcentrationGenConfig {
  unsigned seed = 0;
  int links = 10;
  int periods = 4;
  int commodities = 16;
  int optionsPerCommodity = 3;
};

/// Deterministic synthetic instance whose nominal optimum puts at least 40%
/// of the shipped weight on the top 10% of activities. Retries seed + attempt
/// up to 100 times; throws if the property never holds.
ConcentrationInstance concentration_generate(const ConcentrationGenConfig& cfg);

/// Shipped weight per activity.
Vector activity_loads(const ConcentrationInstance& inst, const Vector& x);

/// Share of total load carried by the top ceil(fraction * n) activities.
double top_share(const Vector& loads, double fraction);

/// x_{j,o} in [0,1] with sum_o x_{j,o} = 1, capacity rows per activity, and
/// one feature per activity: phi_a = sum priority_j weight_j x_{j,o} over the
/// options using a.
class ConcentrationModel final : public FeatureModel {
 public:
  explicit ConcentrationModel(ConcentrationInstance inst);

  std::string kind() const override { return "concentration"; }
  const MasterProblem& nominal() const override { return nominal_; }
  Eigen::Index feature_count() const override { return static_cast<Eigen::Index>(inst_.activities.size()); }
  std::string feature_name(Eigen::Index i) const override;
  FeatureEval evaluate(const Vector& x, const ScenarioVector& z) const override;
  Cut linearize(const Vector& x, const ScenarioVector& z, const Vector& pi) const override;
  PhiValue exact_phi(const Vector& x) const override;

  const ConcentrationInstance& instance() const { return inst_; }
  /// Variable id of option o of commodity j.
  VarId option_var(int j, int o) const { return offsets_[j] + o; }

 private:
  /// Expression for phi_a.
  const LinearExpr& feature_expr(Eigen::Index a) const { return features_[a]; }

  ConcentrationInstance inst_;
  MasterProblem nominal_;
  std::vector<int> offsets_;
  std::vector<LinearExpr> features_;
};

}  // namespace derisk
