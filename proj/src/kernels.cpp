#include "derisk/kernels.hpp"

#include <algorithm>
#include <numeric>

namespace derisk {

SeparationResult softmax(double alpha, const Vector& y) {
  if (!(alpha > 0.0)) throw ModelError("softmax: alpha must be positive");
  SeparationResult r;
  r.pi = softmax_weights(alpha, y);
  r.supportSize = static_cast<int>((r.pi.array() > 0.0).count());
  return r;
}

double default_flatten_floor(const Vector& values) {
  const double m = values.size() > 0 ? values.maxCoeff() : 0.0;
  return m > 0.0 ? 1e-6 * m : 1e-6;
}

std::vector<Eigen::Index> top_indices(const Vector& v, Eigen::Index count) {
  std::vector<Eigen::Index> idx(v.size());
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  count = std::clamp<Eigen::Index>(count, 0, v.size());
  std::partial_sort(idx.begin(), idx.begin() + count, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return v[a] > v[b] || (v[a] == v[b] && a < b);
  });
  idx.resize(count);
  return idx;
}

SeparationResult clip(const SeparationResult& pi, int K) {
  if (K < 1) throw ModelError("clip: K must be at least 1");
  if (K >= pi.pi.size()) return pi;
  SeparationResult r;
  r.pi = Vector::Zero(pi.pi.size());
  for (auto i : top_indices(pi.pi, K)) r.pi[i] = pi.pi[i];
  const double s = r.pi.sum();
  if (s > 0.0) r.pi /= s;
  r.supportSize = static_cast<int>((r.pi.array() > 0.0).count());
  return r;
}

SeparationResult drop_small(const SeparationResult& pi, double threshold) {
  SeparationResult r;
  r.pi = pi.pi;
  Eigen::Index best;
  r.pi.maxCoeff(&best);
  for (Eigen::Index i = 0; i < r.pi.size(); ++i) {
    if (i != best && r.pi[i] < threshold) r.pi[i] = 0.0;
  }
  r.pi /= r.pi.sum();
  r.supportSize = static_cast<int>((r.pi.array() > 0.0).count());
  return r;
}

SeparationResult greedy_separation(const Vector& y) {
  if (y.size() == 0) throw ModelError("greedy separation of an empty vector");
  SeparationResult r;
  Eigen::Index best;
  y.maxCoeff(&best);
  r.pi = Vector::Zero(y.size());
  r.pi[best] = 1.0;
  r.supportSize = 1;
  return r;
}

ScenarioVector to_scenario(const Vector& dense) {
  ScenarioVector z;
  for (Eigen::Index i = 0; i < dense.size(); ++i) z.entries[static_cast<int>(i)] = dense[i];
  return z;
}

namespace {

BoostResult make_result(const FeatureModel& model, const Vector& x, ScenarioVector z, double alpha) {
  BoostResult r;
  r.eval = model.evaluate(x, z);
  r.weights = r.eval.values;
  r.lseValue = log_sum_exp(alpha, r.eval.values);
  r.z = std::move(z);
  return r;
}

}  // namespace

BoostResult greedy_boost(const FeatureModel& model, const Vector& x, double alpha) {
  BoostResult r;
  switch (model.scenario_set()) {
    case ScenarioSetKind::Trivial:
      r = make_result(model, x, {}, alpha);
      r.exactLse = true;
      break;
    case ScenarioSetKind::Finite: {
      const auto zs = model.scenarios();
      if (zs.empty()) throw ModelError("greedy_boost: empty uncertainty set");
      std::optional<BoostResult> best;
      for (const auto& z : zs) {
        auto cand = make_result(model, x, z, alpha);
        if (!best || cand.eval.phiMax > best->eval.phiMax) best = std::move(cand);
      }
      r = std::move(*best);
      break;
    }
    case ScenarioSetKind::Budget:
      r = make_result(model, x,
                      to_scenario(budget_topN_scenario(model.base_values(x),
                                                       std::min(model.budget(), model.tuple_size()))),
                      alpha);
      break;
    case ScenarioSetKind::Ball:
      r = make_result(model, x, to_scenario(ball_scenario(model.base_values(x), model.tuple_size())), alpha);
      break;
  }
  r.attainsMax = true;
  return r;
}

BoostResult exact_boost(const FeatureModel& model, const Vector& x, double alpha) {
  switch (model.scenario_set()) {
    case ScenarioSetKind::Trivial: {
      auto r = make_result(model, x, {}, alpha);
      r.exactLse = true;
      r.attainsMax = true;
      return r;
    }
    case ScenarioSetKind::Finite: {
      const auto zs = model.scenarios();
      if (zs.empty()) throw ModelError("exact_boost: empty uncertainty set");
      std::optional<BoostResult> best;
      for (const auto& z : zs) {
        auto cand = make_result(model, x, z, alpha);
        if (!best || cand.lseValue > best->lseValue) best = std::move(cand);
      }
      best->exactLse = true;
      return std::move(*best);
    }
    case ScenarioSetKind::Budget:
      if (model.tuple_size() == 1) return budget_topN_boost(model, x, model.budget(), alpha);
      throw ModelError("exact boosting over a budget set is only available for max-type feature families");
    case ScenarioSetKind::Ball:
      throw ModelError("exact boosting over a ball set is not available; use the ball kernel");
  }
  throw ModelError("exact_boost: unknown scenario set");
}

Vector budget_topN_scenario(const Vector& base, int N) {
  if (N < 1) throw ModelError("budget_topN: N must be at least 1");
  Vector z = Vector::Zero(base.size());
  for (auto i : top_indices(base, std::min<Eigen::Index>(N, base.size()))) z[i] = 1.0;
  return z;
}

BoostResult budget_topN_boost(const FeatureModel& model, const Vector& x, int N, double alpha) {
  if (model.scenario_set() != ScenarioSetKind::Budget) throw ModelError("budget-topN requires a budget uncertainty set");
  const Vector base = model.base_values(x);
  if (N > base.size()) N = static_cast<int>(base.size());
  auto r = make_result(model, x, to_scenario(budget_topN_scenario(base, N)), alpha);
  r.exactLse = model.tuple_size() == 1;
  r.attainsMax = true;
  return r;
}

Vector ball_scenario(const Vector& base, int tupleSize, bool* zeroFlag) {
  if (tupleSize < 1 || tupleSize > base.size()) throw ModelError("ball: tupleSize out of range");
  Vector z = Vector::Zero(base.size());
  const auto top = top_indices(base, tupleSize);
  double norm2 = 0.0;
  for (auto i : top) norm2 += base[i] * base[i];
  if (zeroFlag) *zeroFlag = norm2 == 0.0;
  if (norm2 == 0.0) return z;
  const double norm = std::sqrt(norm2);
  for (auto i : top) z[i] = base[i] / norm;
  return z;
}

BoostResult ball_boost(const FeatureModel& model, const Vector& x, int tupleSize, double alpha) {
  if (model.scenario_set() != ScenarioSetKind::Ball) throw ModelError("ball kernel requires a ball uncertainty set");
  auto r = make_result(model, x, to_scenario(ball_scenario(model.base_values(x), tupleSize)), alpha);
  r.attainsMax = tupleSize == model.tuple_size();
  return r;
}

SyntheticObjective::SyntheticObjective(Vector phi, double alpha, double gamma, double epsilon, Vector epsilonI)
    : phi_(std::move(phi)), alpha_(alpha), gamma_(gamma), epsilon_(epsilon), epsilonI_(std::move(epsilonI)) {
  if (!(gamma_ > 0.0)) throw ModelError("synthetic objective: Gamma must be positive");
  if (!(epsilon_ > 0.0)) throw ModelError("synthetic objective: epsilon must be positive");
  if (epsilonI_.size() != phi_.size() || (epsilonI_.array() <= 0.0).any()) {
    throw ModelError("synthetic objective: epsilonI must be positive, one per feature");
  }
}

bool SyntheticObjective::in_domain(const Vector& zeta) const {
  return zeta.size() == phi_.size() && gamma_ - zeta.sum() > 0.0 && (zeta.array() < 1.0).all();
}

std::optional<double> SyntheticObjective::value(const Vector& zeta) const {
  if (!in_domain(zeta)) return std::nullopt;
  const double v = (alpha_ * (zeta + phi_).array()).exp().sum() + epsilon_ * std::log(gamma_ - zeta.sum()) +
                   (epsilonI_.array() * (1.0 - zeta.array()).log()).sum();
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

Vector SyntheticObjective::gradient(const Vector& zeta) const {
  if (!in_domain(zeta)) throw ModelError("synthetic objective: gradient requested outside the domain");
  const double slack = gamma_ - zeta.sum();
  return (alpha_ * (alpha_ * (zeta + phi_).array()).exp() - epsilon_ / slack -
          epsilonI_.array() / (1.0 - zeta.array()))
      .matrix();
}

SyntheticObjective build_synthetic_objective(const Vector& phi, double alpha, double gamma, double epsilon,
                                             const Vector& epsilonI) {
  return SyntheticObjective(phi, alpha, gamma, epsilon, epsilonI);
}

}  // namespace derisk
