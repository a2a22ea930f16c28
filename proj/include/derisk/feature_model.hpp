#pragma once

#include "derisk/lp.hpp"
#include "derisk/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace derisk {

enum class ScenarioSetKind {
  /// No adversary: Z holds the single empty scenario.
  Trivial,
  /// Finite Z enumerated by scenarios().
  Finite,
  /// {0 <= z <= 1, sum z <= N} over the model's base values.
  Budget,
  /// {z >= 0, |z|_2 <= 1} over the model's base values.
  Ball,
};

/// Exact Phi(x) together with the scenario and feature attaining it.
struct PhiValue {
  double phi = 0.0;
  ScenarioVector z;
  Eigen::Index feature = 0;
};

/// Binds a nominal problem to features phi_i(x|z), an uncertainty set Z and
/// a linearizer producing valid cuts phi_L >= sum_i pi_i phi_i(x|z).
class FeatureModel {
 public:
  virtual ~FeatureModel() = default;

  virtual std::string kind() const = 0;
  /// The nominal problem P (no phi_L).
  virtual const MasterProblem& nominal() const = 0;
  /// Convex terms whose aux variables live in nominal().
  virtual std::vector<ConvexTerm> convex_terms() const { return {}; }
  /// Fills implied auxiliary variables of x (e.g. delay proxies).
  virtual Vector complete(const Vector& x) const { return x; }

  virtual Eigen::Index feature_count() const = 0;
  virtual std::string feature_name(Eigen::Index i) const { return std::to_string(i); }

  virtual ScenarioSetKind scenario_set() const { return ScenarioSetKind::Trivial; }
  /// Enumerates Z for Finite sets in tie-breaking order; {{}} for Trivial.
  virtual std::vector<ScenarioVector> scenarios() const { return {ScenarioVector{}}; }
  virtual bool contains(const ScenarioVector& z) const { return z.entries.empty(); }
  /// Budget N for Budget sets.
  virtual int budget() const { return 0; }
  /// Per-domain-key nonnegative base values (branch T) for Budget/Ball sets.
  virtual Vector base_values(const Vector& x) const { return evaluate(x, {}).values; }
  /// Number of base entries each feature aggregates (1 for max-type families).
  virtual int tuple_size() const { return 1; }

  virtual FeatureEval evaluate(const Vector& x, const ScenarioVector& z) const = 0;

  /// Cut phi_L + a(x) >= b valid for every x, tight at x (up to the master's
  /// convex-term tolerance).
  virtual Cut linearize(const Vector& x, const ScenarioVector& z, const Vector& pi) const = 0;

  /// Additional cuts (multi-cut separation). Empty by default.
  virtual std::vector<Cut> extra_cuts(const Vector& /*x*/, const ScenarioVector& /*z*/, int /*nCuts*/,
                                      int /*pool*/) const {
    return {};
  }

  /// Exact Phi(x) = max_{z in Z} max_i phi_i(x|z).
  virtual PhiValue exact_phi(const Vector& x) const = 0;
};

}  // namespace derisk
