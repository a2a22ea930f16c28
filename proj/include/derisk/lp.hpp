#pragma once

#include "derisk/model.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace derisk {

enum class LpStatus { Optimal, Infeasible, Unbounded };
std::string to_string(LpStatus s);

struct LpSolution {
  Vector x;
  double objective = 0.0;
  LpStatus status = LpStatus::Infeasible;
  int pivots = 0;
};

/// Raised when the simplex iteration cap is hit or a basis becomes singular.
class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimizes cost(x) + theta * phiL over the variables, bounds, constraints
/// and cuts of a master problem.
class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual LpSolution solve(const MasterProblem& p) const = 0;
};

struct SimplexOptions {
  double feasTol = 1e-9;
  double optTol = 1e-9;
  double pivotTol = 1e-11;
  int refactorEvery = 50;
  int blandAfter = 1000;
  /// 0 selects a cap proportional to the problem size.
  long maxPivots = 0;
};

/// Bounded-variable two-phase primal revised simplex with an explicit basis
/// inverse. Dantzig pricing, switching to Bland's rule after a run of
/// degenerate pivots.
class SimplexSolver final : public LpSolver {
 public:
  SimplexSolver() = default;
  explicit SimplexSolver(SimplexOptions opts) : opts_(opts) {}
  LpSolution solve(const MasterProblem& p) const override;

 private:
  SimplexOptions opts_;
};

LpSolution solve_lp(const MasterProblem& p);

/// Largest violation of bounds, constraints and cuts at x.
double max_residual(const MasterProblem& p, const Vector& x);

/// Full-length gradient entries of a convex term, keyed by variable id.
using SparseGradient = std::map<VarId, double>;

/// A convex function f(x) represented in the master by its epigraph proxy
/// auxVar >= f(x), enforced lazily by tangent cuts.
struct ConvexTerm {
  VarId auxVar = 0;
  std::function<double(const Vector&)> valueOracle;
  std::function<SparseGradient(const Vector&)> gradientOracle;
  std::function<bool(const Vector&)> domainGuard = [](const Vector&) { return true; };
  std::string name;
};

/// auxVar >= f(xk) + g(xk).(x - xk)
Constraint tangent_cut(const ConvexTerm& term, const Vector& xk);

struct RefineOptions {
  double tol = 1e-7;
  int maxRounds = 200;
};

/// Solves p, then adds tangent cuts to p.constraints until every term
/// satisfies aux >= f(x) - tol. Tangents persist in p for later solves.
LpSolution refine_convex(MasterProblem& p, const std::vector<ConvexTerm>& terms,
                         const RefineOptions& opts = {});

enum class AddCutResult { Added, Duplicate };

/// Appends the cut unless an identical one (coefficients within 1e-12) is
/// already present.
AddCutResult add_cut(MasterProblem& p, Cut cut);

}  // namespace derisk
