#pragma once

#include "derisk/feature_model.hpp"
#include "derisk/kernels.hpp"
#include "derisk/lp.hpp"
#include "derisk/model.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace derisk {

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Theta = cStar xi / (phiStar (lambdaHi - lambdaLo)).
double choose_theta(double cStar, double phiStar, double lambdaLo, double lambdaHi, double xi);

/// (ln nFeatures + [ln(2 phiU0 / delta)]^+) / delta, floored at 1e-8.
double choose_alpha_theory(Eigen::Index nFeatures, double phiU0, double delta);

/// min(50, ln nBranches / (0.25 phiStar)), floored at 1e-8.
double choose_alpha_grid(Eigen::Index nBranches, double phiStar);

enum class TerminationTest { Absolute, Relative, Continue };
std::string to_string(TerminationTest t);

TerminationTest check_termination(double phiMax, double phiL, double delta, double deltaRel);

Outcome classify_outcome(double cHat, double phiHat, double cStar, double phiStar, double theta, double lambdaLo,
                         double lambdaHi, double xi);

/// Per-iteration facts the monitors need beyond the iteration record.
struct IterationTrace {
  bool exactLse = false;
  bool attainsMax = false;
  /// Violation rhs - a(x^t) - phi_L^t of the first cut added at t.
  std::optional<double> cutViolation;
};

struct EngineState {
  MasterProblem master;
  int t = 0;
  std::vector<IterationRecord> history;
  std::vector<IterationTrace> trace;
  double phiU0 = 0.0;
  double nominalCost = 0.0;
  Vector nominalX;
  double theta = 0.0;
  double alpha = 0.0;
  double delta = 0.0;
  double deltaPrime = 0.0;
  bool theoryAlpha = false;
  bool greedySeparation = false;
  bool flattened = false;
};

struct MonitorRow {
  int t = 0;
  std::optional<bool> lemma1Ok;
  std::optional<bool> lemma2Ok;
  std::optional<bool> lemmaUpperOk;
  std::optional<bool> corViolationOk;
};

/// Flags are nullopt where a check does not apply (no oracle, inexact
/// boosting, non-theory alpha or a terminal iteration).
struct MonitorReport {
  std::vector<MonitorRow> rows;
  /// Smallest slack over all evaluated checks; negative means a failure.
  double worstSlack = kInf;

  bool all_ok() const;
  /// Number of flags that were evaluated.
  int evaluated_count() const;
};

inline constexpr double kMonitorTol = 1e-6;

MonitorReport monitor(const EngineState& state);

struct RunResult {
  Outcome outcome;
  EngineState state;
  MonitorReport monitors;
  std::string stopReason;
  double finalCost = 0.0;
  double finalPhi = 0.0;
};

struct RunOptions {
  /// Fill IterationRecord::wallMillis.
  bool timing = false;
};

/// Algorithm loop: nominal solve, then boost / test / separate / cut until a
/// stopping test fires or tMax master solves have been made.
RunResult run(const FeatureModel& model, const RunConfig& cfg, const RunOptions& opts = {});

/// Throws ModelError naming the offending field.
void validate_config(const RunConfig& cfg);

/// Runs one boosting step with the configured kernel.
BoostResult boost(const FeatureModel& model, const Vector& x, double alpha, const RunConfig& cfg, int t);

/// Separation weights for a boost result under the configured kernel.
SeparationResult separate(const BoostResult& b, double alpha, const RunConfig& cfg);

void write_iterations_csv(std::ostream& os, const std::vector<IterationRecord>& history, bool timing);

/// Shortest round-trip decimal text of v ('.'-decimal, locale independent).
std::string format_double(double v);

}  // namespace derisk
