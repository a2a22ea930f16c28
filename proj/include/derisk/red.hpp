#pragma once

#include "derisk/kernels.hpp"
#include "derisk/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace derisk {

enum class RedTermination { GradTol, MaxSteps, DomainStall };
std::string to_string(RedTermination t);

struct RedStart {
  Vector zeta;
  /// true for coordinates held fixed for the whole run.
  std::vector<bool> frozen;
};

struct RedRun {
  Vector start;
  Vector best;
  double bestValue = 0.0;
  int steps = 0;
  RedTermination terminationReason = RedTermination::MaxSteps;
  /// Objective at every accepted iterate, starting with the start value.
  std::vector<double> accepted;
};

struct AscentObjective {
  std::function<std::optional<double>(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

AscentObjective ascent_objective(const SyntheticObjective& f);

/// windowSize when unset: max(10, n / nRuns), capped at n.
int effective_window_size(const RedConfig& cfg, Eigen::Index n);
/// supportValue when unset: 0.1.
double effective_support_value(const RedConfig& cfg);

/// One start per run. `sortedIds` lists feature ids by descending value.
std::vector<RedStart> sliding_window_starts(const std::vector<Eigen::Index>& sortedIds, const RedConfig& cfg);

/// Projected AdaDelta ascent with Armijo backtracking. Throws if the start is
/// outside the objective's domain.
RedRun adadelta_ascent(const AscentObjective& f, const Vector& start, const std::vector<bool>& frozen,
                       const RedConfig& cfg);

struct MultistartResult {
  std::vector<RedRun> runs;
  int bestRun = 0;
  /// Features after scaling to cfg.featureScale.
  Vector scaledPhi;
};

/// Runs every sliding-window start of the synthetic problem over `phi`
/// (scaled so its maximum is cfg.featureScale) on cfg.workers threads.
/// `order` permutes the execution order of the runs; it never changes the
/// result.
MultistartResult multistart(const Vector& phi, double alpha, const RedConfig& cfg,
                            const std::vector<int>& order = {});

/// Boost result of the best run: z = zeta, weights = scaled phi + zeta.
BoostResult multistart_boost(const Vector& phi, double alpha, const RedConfig& cfg);

}  // namespace derisk
