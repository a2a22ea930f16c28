#pragma once

#include "derisk/feature_model.hpp"

#include <vector>

namespace derisk {

struct QueueingArc {
  double capacity = 0.0;
  double cost = 0.0;
};

struct QueueingInstance {
  std::vector<QueueingArc> arcs;
  double demand = 0.0;
  double epsilon = 0.7;
};

/// Throws ModelError when the instance cannot route its demand.
void validate(const QueueingInstance& inst);

/// M/M/1 delay u / (u + eps - x); throws when x >= u + eps.
double queue_delay(double u, double x, double eps);
double queue_delay_derivative(double u, double x, double eps);

/// Parallel arcs carrying M units; one feature per arc, phi_i = mu(u_i, x_i).
/// Master variables are x_0..x_{n-1} followed by the delay proxies q_i.
class QueueingModel final : public FeatureModel {
 public:
  explicit QueueingModel(QueueingInstance inst);

  std::string kind() const override { return "queueing"; }
  const MasterProblem& nominal() const override { return nominal_; }
  std::vector<ConvexTerm> convex_terms() const override;
  Vector complete(const Vector& x) const override;
  Eigen::Index feature_count() const override { return static_cast<Eigen::Index>(inst_.arcs.size()); }
  std::string feature_name(Eigen::Index i) const override;
  FeatureEval evaluate(const Vector& x, const ScenarioVector& z) const override;
  Cut linearize(const Vector& x, const ScenarioVector& z, const Vector& pi) const override;
  PhiValue exact_phi(const Vector& x) const override;

  const QueueingInstance& instance() const { return inst_; }
  VarId flow_var(int i) const { return i; }
  VarId proxy_var(int i) const { return static_cast<VarId>(inst_.arcs.size()) + i; }

 private:
  QueueingInstance inst_;
  MasterProblem nominal_;
};

/// phi_i = mu(u_i, x_i) for the flows in x (proxies ignored).
FeatureEval queueing_features(const QueueingInstance& inst, const Vector& x);

}  // namespace derisk
