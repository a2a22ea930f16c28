#pragma once

#include "derisk/feature_model.hpp"
#include "derisk/model.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <vector>

namespace derisk {

/// ln sum_i exp(alpha y_i), max-shifted.
template <typename Derived>
typename Derived::Scalar log_sum_exp(typename Derived::Scalar alpha, const Eigen::MatrixBase<Derived>& y) {
  using S = typename Derived::Scalar;
  if (y.size() == 0) throw ModelError("log_sum_exp of an empty vector");
  const S m = alpha * y.maxCoeff();
  const S sum = (alpha * y.array() - m).exp().sum();
  return m + std::log(sum);
}

struct SeparationResult {
  Vector pi;
  int supportSize = 0;
};

/// exp(alpha y_i) / sum_j exp(alpha y_j), max-shifted.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax_weights(typename Derived::Scalar alpha,
                                                                           const Eigen::MatrixBase<Derived>& y) {
  if (y.size() == 0) throw ModelError("softmax of an empty vector");
  const auto m = alpha * y.maxCoeff();
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> e = (alpha * y.array() - m).exp().matrix();
  return e / e.sum();
}

SeparationResult softmax(double alpha, const Vector& y);

/// Shifted logarithm ln(max(v, floor)) - ln(floor); nonnegative and
/// order-preserving above the floor.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> flatten(const Eigen::MatrixBase<Derived>& values,
                                                                   typename Derived::Scalar floor) {
  if (!(floor > 0)) throw ModelError("flatten: floor must be positive");
  return (values.array().max(floor).log() - std::log(floor)).matrix();
}

/// Floor used when none is configured: 1e-6 times the largest value (or 1e-6
/// when all values are zero).
double default_flatten_floor(const Vector& values);

/// Keeps the K largest weights (lowest index on ties) and renormalizes.
SeparationResult clip(const SeparationResult& pi, int K);

/// Drops weights below `threshold` and renormalizes the rest. The largest
/// weight always survives.
SeparationResult drop_small(const SeparationResult& pi, double threshold);

/// Indicator of the lowest-index maximum of y.
SeparationResult greedy_separation(const Vector& y);

struct BoostResult {
  std::optional<ScenarioVector> z;
  /// Feature values phi_i(x|z) the separation step works on.
  Vector weights;
  double lseValue = 0.0;
  /// Raw evaluation at (x, z).
  FeatureEval eval;
  /// z maximizes the log-sum-exp over Z.
  bool exactLse = false;
  /// max_i phi_i(x|z) equals Phi(x).
  bool attainsMax = false;
};

BoostResult greedy_boost(const FeatureModel& model, const Vector& x, double alpha);
BoostResult exact_boost(const FeatureModel& model, const Vector& x, double alpha);

/// z = 1 on the N largest base values (lowest index on ties), 0 elsewhere.
Vector budget_topN_scenario(const Vector& base, int N);
BoostResult budget_topN_boost(const FeatureModel& model, const Vector& x, int N, double alpha);

/// z = T / |T_s*| on the tupleSize largest base values. `zeroFlag` is set
/// when all of them are zero (z = 0 then).
Vector ball_scenario(const Vector& base, int tupleSize, bool* zeroFlag = nullptr);
BoostResult ball_boost(const FeatureModel& model, const Vector& x, int tupleSize, double alpha);

ScenarioVector to_scenario(const Vector& dense);

/// Indices of the `count` largest entries, descending, lowest index first on ties.
std::vector<Eigen::Index> top_indices(const Vector& v, Eigen::Index count);

/// F(zeta) = sum_i exp(alpha (zeta_i + phi_i)) + eps ln(Gamma - sum zeta)
///           + sum_i eps_i ln(1 - zeta_i)
class SyntheticObjective {
 public:
  SyntheticObjective(Vector phi, double alpha, double gamma, double epsilon, Vector epsilonI);

  bool in_domain(const Vector& zeta) const;
  /// nullopt outside the domain.
  std::optional<double> value(const Vector& zeta) const;
  /// Throws outside the domain.
  Vector gradient(const Vector& zeta) const;

  Eigen::Index size() const { return phi_.size(); }
  const Vector& phi() const { return phi_; }
  double alpha() const { return alpha_; }

 private:
  Vector phi_;
  double alpha_;
  double gamma_;
  double epsilon_;
  Vector epsilonI_;
};

SyntheticObjective build_synthetic_objective(const Vector& phi, double alpha, double gamma, double epsilon,
                                             const Vector& epsilonI);

}  // namespace derisk
