#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace derisk {

using VarId = int;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Tolerance for invariants that are exact up to rounding.
inline constexpr double kExactTol = 1e-9;
/// Tolerance for quantities that come out of a solver.
inline constexpr double kSolverTol = 1e-6;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sparse affine expression sum_j a_j x_j + constant. Zero coefficients are
/// never stored.
class LinearExpr {
 public:
  LinearExpr() = default;
  explicit LinearExpr(double constant) : constant_(constant) {}

  /// Adds `coeff` to the coefficient of `id`; erases the entry if it cancels.
  LinearExpr& add(VarId id, double coeff);
  LinearExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }
  LinearExpr& scale(double factor);
  LinearExpr& add(const LinearExpr& other, double factor = 1.0);

  double coeff(VarId id) const;
  const std::map<VarId, double>& coefficients() const { return coeffs_; }
  double constant() const { return constant_; }
  void set_constant(double c) { constant_ = c; }
  bool empty() const { return coeffs_.empty(); }

  /// Throws ModelError naming the variable if `id` is outside `x`.
  double evaluate(const Vector& x) const;

  friend bool operator==(const LinearExpr&, const LinearExpr&) = default;

 private:
  std::map<VarId, double> coeffs_;
  double constant_ = 0.0;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  /// Auxiliary variables (epigraph proxies) are not part of the decision a
  /// user supplies; they are implied by the decision variables.
  bool auxiliary = false;

  friend bool operator==(const Variable&, const Variable&) = default;
};

enum class Sense { Le, Eq, Ge };

struct Constraint {
  LinearExpr lhs;
  Sense sense = Sense::Le;
  double rhs = 0.0;
  std::string name;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

/// A point z of an uncertainty set, keyed by the adapter's domain index
/// (arc, branch or activity).
struct ScenarioVector {
  std::map<int, double> entries;

  double at(int key, double fallback = 0.0) const {
    auto it = entries.find(key);
    return it == entries.end() ? fallback : it->second;
  }
  friend bool operator==(const ScenarioVector&, const ScenarioVector&) = default;
};

struct CutProvenance {
  int iteration = 0;
  Vector pi;
  std::optional<ScenarioVector> z;
};

/// phi_L + xCoeffs(x) >= rhs. The epigraph variable always has coefficient 1
/// and is therefore not stored in xCoeffs.
struct Cut {
  LinearExpr xCoeffs;
  double rhs = 0.0;
  CutProvenance provenance;

  /// rhs - xCoeffs(x): the lower bound the cut puts on phi_L at x.
  double bound_at(const Vector& x) const { return rhs - xCoeffs.evaluate(x); }
};

struct MasterProblem {
  std::vector<Variable> variables;
  LinearExpr cost;
  double theta = 1.0;
  std::optional<VarId> phiL;
  std::vector<Constraint> constraints;
  std::vector<Cut> cuts;

  VarId add_variable(std::string name, double lower, double upper, bool auxiliary = false);
  std::optional<VarId> find(const std::string& name) const;
  std::size_t size() const { return variables.size(); }
};

/// Returns a copy of `nominal` extended with the epigraph variable phi_L >= 0.
MasterProblem with_epigraph(MasterProblem nominal, double theta);

/// phi_i(x|z) for all features i (dense, id = index), its maximum and the
/// lowest index attaining it.
struct FeatureEval {
  Vector values;
  Eigen::Index argmaxId = 0;
  double phiMax = 0.0;
};

/// Builds a FeatureEval from raw values. Throws on empty or negative input.
FeatureEval make_feature_eval(Vector values);

enum class BoostingKernel { Exact, Greedy, BudgetTopN, Ball, Synthetic };
enum class SeparationKernel { Softmax, Greedy, SoftmaxClip };

std::string to_string(BoostingKernel k);
std::string to_string(SeparationKernel k);
BoostingKernel parse_boosting_kernel(const std::string& id);
SeparationKernel parse_separation_kernel(const std::string& id);

/// Theta is either given or derived from the (lambdaLo, lambdaHi, xi)
/// targets. The targets are always present because outcome classification
/// needs them.
struct ThetaPolicy {
  std::optional<double> theta;
  double lambdaLo = 0.5;
  double lambdaHi = 0.6;
  double xi = 0.01;
};

enum class AlphaRule { Explicit, Theory, Grid };

struct AlphaPolicy {
  AlphaRule rule = AlphaRule::Explicit;
  double value = 1.0;
};

struct RedConfig {
  int nRuns = 30;
  std::optional<int> windowSize;
  int windowStep = 1;
  int warmstartSize = 10;
  double warmstartValue = 0.5;
  std::optional<double> supportValue;
  double decayRate = 0.09;
  int maxSteps = 2000;
  double gradTol = 1e-8;
  unsigned seed = 0;
  double gamma = 1.0;
  double epsilon = 1.0;
  double epsilonI = 1.0;
  double featureScale = 10.0;
  int workers = 1;

  friend bool operator==(const RedConfig&, const RedConfig&) = default;
};

struct RunConfig {
  int tMax = 100;
  ThetaPolicy thetaPolicy;
  AlphaPolicy alphaPolicy;
  /// Absolute tolerance Delta; when unset it is deltaAbsRelative * Phi(x0).
  std::optional<double> deltaAbs;
  double deltaAbsRelative = 1e-6;
  /// Relative tolerance delta of the second stopping test.
  double deltaRel = 1e-6;
  /// Boosting slack Delta'; defaults to alpha * Delta.
  std::optional<double> deltaPrime;
  BoostingKernel boostingKernel = BoostingKernel::Exact;
  SeparationKernel separationKernel = SeparationKernel::Softmax;
  std::optional<int> clipK;
  bool flatten = false;
  unsigned seed = 0;
  /// Stop once the risk proxy is at most half the nominal risk.
  bool earlyExit = false;
  /// Separation weights below this are dropped before building a cut.
  double dropBelow = 1e-6;
  int tupleCuts = 1;
  int tuplePool = 15;
  double convexTol = 1e-7;
  int maxTangentRounds = 200;
  RedConfig red;
};

struct IterationRecord {
  int t = 0;
  Vector x;
  double cost = 0.0;
  double phiL = 0.0;
  double phiMax = 0.0;
  std::optional<double> exactPhi;
  int cutsAdded = 0;
  double wallMillis = 0.0;
  double masterObjective = 0.0;
};

enum class OutcomeKind { DeRisked, Certificate, IterationLimit };
std::string to_string(OutcomeKind k);
OutcomeKind parse_outcome_kind(const std::string& s);

struct RiskCostBounds {
  double riskRatio = 0.0;
  double costRatio = 0.0;
};

/// No x in P with Phi(x) <= lambdaLo Phi(x*) and c(x) <= (1 + xi) c(x*).
struct CertificateStatement {
  double lambdaLo = 0.0;
  double xi = 0.0;
};

struct Outcome {
  OutcomeKind kind = OutcomeKind::IterationLimit;
  Vector solution;
  std::optional<RiskCostBounds> bounds;
  std::optional<CertificateStatement> certificateStatement;
  /// c(x^) + Theta Phi(x^) and c(x*) + Theta lambdaHi Phi(x*), the two sides
  /// of the classification test.
  double weightedValue = 0.0;
  double threshold = 0.0;
};

/// Returns one message per violated invariant, each naming the field.
std::vector<std::string> validate_master(const MasterProblem& p);

/// c(x). Throws ModelError naming the first missing variable.
double evaluate_cost(const MasterProblem& p, const Vector& x);

}  // namespace derisk
