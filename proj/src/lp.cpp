#include "derisk/lp.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace derisk {

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

namespace {

enum class ColState { Basic, AtLower, AtUpper, Free };

struct StandardForm {
  Eigen::MatrixXd A;
  Vector b;
  Vector cost;
  Vector lower;
  Vector upper;
  int nStructural = 0;
};

struct Row {
  const LinearExpr* lhs;
  double extraPhiL;
  Sense sense;
  double rhs;
};

class Simplex {
 public:
  Simplex(const MasterProblem& p, const SimplexOptions& opts) : opts_(opts) { build(p); }

  LpSolution run() {
    LpSolution out;
    initial_basis();
    Vector phase1 = Vector::Zero(ncol_);
    for (int j = firstArtificial_; j < ncol_; ++j) phase1[j] = 1.0;
    if (ncol_ > firstArtificial_) {
      const auto st = iterate(phase1);
      (void)st;
      refactor();
      double infeas = 0.0;
      for (int j = firstArtificial_; j < ncol_; ++j) infeas += std::abs(xv_[j]);
      if (infeas > 1e-8 * (1.0 + sf_.b.cwiseAbs().maxCoeff())) {
        out.status = LpStatus::Infeasible;
        out.x = xv_.head(sf_.nStructural);
        out.pivots = pivots_;
        return out;
      }
      for (int j = firstArtificial_; j < ncol_; ++j) {
        sf_.lower[j] = 0.0;
        sf_.upper[j] = 0.0;
        if (state_[j] != ColState::Basic) {
          state_[j] = ColState::AtLower;
          xv_[j] = 0.0;
        }
      }
    }
    const auto st = iterate(sf_.cost);
    refactor();
    out.pivots = pivots_;
    out.x = xv_.head(sf_.nStructural);
    out.objective = sf_.cost.head(sf_.nStructural).dot(out.x);
    out.status = st;
    return out;
  }

 private:
  void build(const MasterProblem& p) {
    const int n = static_cast<int>(p.variables.size());
    std::vector<Row> rows;
    rows.reserve(p.constraints.size() + p.cuts.size());
    for (const auto& c : p.constraints) rows.push_back({&c.lhs, 0.0, c.sense, c.rhs - c.lhs.constant()});
    for (const auto& c : p.cuts) {
      if (!p.phiL) throw ModelError("cuts present but master has no phiL");
      rows.push_back({&c.xCoeffs, 1.0, Sense::Ge, c.rhs - c.xCoeffs.constant()});
    }
    m_ = static_cast<int>(rows.size());
    int nSlack = 0;
    for (const auto& r : rows) nSlack += r.sense != Sense::Eq;
    // Artificial columns are appended later as needed; reserve space for one per row.
    ncol_ = n + nSlack;
    firstArtificial_ = ncol_;
    const int cap = ncol_ + m_;
    sf_.A = Eigen::MatrixXd::Zero(m_, cap);
    sf_.b.resize(m_);
    sf_.cost = Vector::Zero(cap);
    sf_.lower = Vector::Zero(cap);
    sf_.upper = Vector::Constant(cap, kInf);
    sf_.nStructural = n;
    for (int j = 0; j < n; ++j) {
      sf_.lower[j] = p.variables[j].lower;
      sf_.upper[j] = p.variables[j].upper;
    }
    for (const auto& [id, c] : p.cost.coefficients()) {
      if (id < 0 || id >= n) throw ModelError("cost references undeclared variable " + std::to_string(id));
      sf_.cost[id] += c;
    }
    if (p.phiL) sf_.cost[*p.phiL] += p.theta;
    slackOf_.assign(m_, -1);
    slackSign_.assign(m_, 0.0);
    int s = n;
    for (int i = 0; i < m_; ++i) {
      const auto& r = rows[i];
      for (const auto& [id, c] : r.lhs->coefficients()) {
        if (id < 0 || id >= n) throw ModelError("row references undeclared variable " + std::to_string(id));
        sf_.A(i, id) += c;
      }
      if (r.extraPhiL != 0.0) sf_.A(i, *p.phiL) += r.extraPhiL;
      sf_.b[i] = r.rhs;
      if (r.sense != Sense::Eq) {
        const double sign = r.sense == Sense::Le ? 1.0 : -1.0;
        sf_.A(i, s) = sign;
        slackOf_[i] = s;
        slackSign_[i] = sign;
        ++s;
      }
    }
  }

  void initial_basis() {
    const int cap = static_cast<int>(sf_.cost.size());
    xv_ = Vector::Zero(cap);
    state_.assign(cap, ColState::AtLower);
    for (int j = 0; j < firstArtificial_; ++j) {
      if (std::isfinite(sf_.lower[j])) {
        xv_[j] = sf_.lower[j];
        state_[j] = ColState::AtLower;
      } else if (std::isfinite(sf_.upper[j])) {
        xv_[j] = sf_.upper[j];
        state_[j] = ColState::AtUpper;
      } else {
        xv_[j] = 0.0;
        state_[j] = ColState::Free;
      }
    }
    const Vector r = sf_.b - sf_.A.leftCols(firstArtificial_) * xv_.head(firstArtificial_);
    basis_.assign(m_, -1);
    int art = firstArtificial_;
    for (int i = 0; i < m_; ++i) {
      const int sl = slackOf_[i];
      if (sl >= 0 && r[i] * slackSign_[i] >= 0.0) {
        basis_[i] = sl;
        state_[sl] = ColState::Basic;
        xv_[sl] = r[i] * slackSign_[i];
        continue;
      }
      const double sign = r[i] >= 0.0 ? 1.0 : -1.0;
      sf_.A(i, art) = sign;
      basis_[i] = art;
      state_[art] = ColState::Basic;
      xv_[art] = std::abs(r[i]);
      ++art;
    }
    ncol_ = art;
    sf_.A.conservativeResize(Eigen::NoChange, ncol_);
    sf_.cost.conservativeResize(ncol_);
    sf_.lower.conservativeResize(ncol_);
    sf_.upper.conservativeResize(ncol_);
    xv_.conservativeResize(ncol_);
    state_.resize(ncol_);
    refactor();
  }

  void refactor() {
    if (m_ == 0) return;
    Eigen::MatrixXd B(m_, m_);
    for (int i = 0; i < m_; ++i) B.col(i) = sf_.A.col(basis_[i]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    binv_ = lu.inverse();
    if (!binv_.allFinite()) throw LpError("singular basis during refactorization");
    Vector rhs = sf_.b;
    for (int j = 0; j < ncol_; ++j) {
      if (state_[j] != ColState::Basic && xv_[j] != 0.0) rhs -= sf_.A.col(j) * xv_[j];
    }
    const Vector xb = binv_ * rhs;
    for (int i = 0; i < m_; ++i) xv_[basis_[i]] = xb[i];
    sincePivot_ = 0;
  }

  LpStatus iterate(const Vector& c) {
    long cap = opts_.maxPivots > 0 ? opts_.maxPivots : 200L * (m_ + ncol_) + 20000L;
    int degenerateRun = 0;
    bool bland = false;
    Vector cb(m_);
    for (;;) {
      if (pivots_ >= cap) {
        throw LpError("simplex iteration cap of " + std::to_string(cap) + " pivots exceeded");
      }
      for (int i = 0; i < m_; ++i) cb[i] = c[basis_[i]];
      const Eigen::RowVectorXd y = m_ > 0 ? Eigen::RowVectorXd(cb.transpose() * binv_)
                                          : Eigen::RowVectorXd();
      int q = -1;
      double qdir = 0.0;
      double best = 0.0;
      for (int j = 0; j < ncol_; ++j) {
        const auto st = state_[j];
        if (st == ColState::Basic) continue;
        if (sf_.upper[j] - sf_.lower[j] <= 0.0 && st != ColState::Free) continue;
        const double d = m_ > 0 ? c[j] - y.dot(sf_.A.col(j)) : c[j];
        double dir = 0.0;
        if ((st == ColState::AtLower || st == ColState::Free) && d < -opts_.optTol) dir = 1.0;
        else if ((st == ColState::AtUpper || st == ColState::Free) && d > opts_.optTol) dir = -1.0;
        if (dir == 0.0) continue;
        if (bland) {
          q = j;
          qdir = dir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          q = j;
          qdir = dir;
        }
      }
      if (q < 0) return LpStatus::Optimal;

      const Vector alpha = m_ > 0 ? Vector(binv_ * sf_.A.col(q)) : Vector();
      double theta = kInf;
      int leave = -1;
      double leaveAlpha = 0.0;
      if (std::isfinite(sf_.upper[q]) && std::isfinite(sf_.lower[q])) theta = sf_.upper[q] - sf_.lower[q];
      for (int i = 0; i < m_; ++i) {
        const double a = qdir * alpha[i];
        if (std::abs(a) <= opts_.pivotTol) continue;
        const int bj = basis_[i];
        double ratio;
        if (a > 0.0) {
          if (!std::isfinite(sf_.lower[bj])) continue;
          ratio = (xv_[bj] - sf_.lower[bj]) / a;
        } else {
          if (!std::isfinite(sf_.upper[bj])) continue;
          ratio = (sf_.upper[bj] - xv_[bj]) / -a;
        }
        ratio = std::max(ratio, 0.0);
        const bool better = ratio < theta - 1e-12;
        const bool tie = !better && ratio <= theta + 1e-12 && leave >= 0;
        if (better) {
          theta = ratio;
          leave = i;
          leaveAlpha = alpha[i];
        } else if (tie) {
          const bool prefer = bland ? basis_[i] < basis_[leave] : std::abs(alpha[i]) > std::abs(leaveAlpha);
          if (prefer) {
            leave = i;
            leaveAlpha = alpha[i];
          }
        } else if (leave < 0 && ratio <= theta + 1e-12 && std::isfinite(theta)) {
          // Basic variable ties with the entering column's own bound flip: pivot instead.
          theta = ratio;
          leave = i;
          leaveAlpha = alpha[i];
        }
      }
      if (!std::isfinite(theta)) return LpStatus::Unbounded;

      ++pivots_;
      degenerateRun = theta <= 1e-12 ? degenerateRun + 1 : 0;
      if (degenerateRun >= opts_.blandAfter) bland = true;
      if (degenerateRun == 0) bland = false;

      xv_[q] += qdir * theta;
      for (int i = 0; i < m_; ++i) xv_[basis_[i]] -= qdir * theta * alpha[i];

      if (leave < 0) {
        state_[q] = qdir > 0 ? ColState::AtUpper : ColState::AtLower;
        xv_[q] = qdir > 0 ? sf_.upper[q] : sf_.lower[q];
        continue;
      }
      const int out = basis_[leave];
      const bool toLower = qdir * alpha[leave] > 0.0;
      state_[out] = toLower ? ColState::AtLower : ColState::AtUpper;
      xv_[out] = toLower ? sf_.lower[out] : sf_.upper[out];
      basis_[leave] = q;
      state_[q] = ColState::Basic;

      const double piv = alpha[leave];
      binv_.row(leave) /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i != leave && alpha[i] != 0.0) binv_.row(i) -= alpha[i] * binv_.row(leave);
      }
      if (++sincePivot_ >= opts_.refactorEvery) refactor();
    }
  }

  SimplexOptions opts_;
  StandardForm sf_;
  int m_ = 0;
  int ncol_ = 0;
  int firstArtificial_ = 0;
  std::vector<int> slackOf_;
  std::vector<double> slackSign_;
  std::vector<int> basis_;
  std::vector<ColState> state_;
  Vector xv_;
  Eigen::MatrixXd binv_;
  long pivots_ = 0;
  int sincePivot_ = 0;
};

}  // namespace

LpSolution SimplexSolver::solve(const MasterProblem& p) const {
  Simplex s(p, opts_);
  return s.run();
}

LpSolution solve_lp(const MasterProblem& p) { return SimplexSolver{}.solve(p); }

double max_residual(const MasterProblem& p, const Vector& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < p.variables.size(); ++j) {
    worst = std::max(worst, p.variables[j].lower - x[j]);
    worst = std::max(worst, x[j] - p.variables[j].upper);
  }
  for (const auto& c : p.constraints) {
    const double v = c.lhs.evaluate(x);
    if (c.sense != Sense::Ge) worst = std::max(worst, v - c.rhs);
    if (c.sense != Sense::Le) worst = std::max(worst, c.rhs - v);
  }
  if (p.phiL) {
    for (const auto& c : p.cuts) worst = std::max(worst, c.rhs - x[*p.phiL] - c.xCoeffs.evaluate(x));
  }
  return worst;
}

Constraint tangent_cut(const ConvexTerm& term, const Vector& xk) {
  const double f = term.valueOracle(xk);
  const SparseGradient g = term.gradientOracle(xk);
  Constraint c;
  c.lhs.add(term.auxVar, 1.0);
  double rhs = f;
  for (const auto& [id, gj] : g) {
    c.lhs.add(id, -gj);
    rhs -= gj * xk[id];
  }
  c.sense = Sense::Ge;
  c.rhs = rhs;
  c.name = "tangent:" + term.name;
  return c;
}

LpSolution refine_convex(MasterProblem& p, const std::vector<ConvexTerm>& terms, const RefineOptions& opts) {
  if (!(opts.tol > 0.0)) throw ModelError("refine_convex: tol must be positive");
  for (const auto& t : terms) {
    if (t.auxVar < 0 || static_cast<std::size_t>(t.auxVar) >= p.variables.size()) {
      throw ModelError("refine_convex: term '" + t.name + "' references undeclared aux variable");
    }
  }
  std::optional<Vector> lastGood;
  double worst = 0.0;
  std::string worstName;
  for (int round = 0; round <= opts.maxRounds; ++round) {
    LpSolution sol = solve_lp(p);
    if (sol.status != LpStatus::Optimal || terms.empty()) return sol;
    bool added = false;
    bool allGuarded = true;
    worst = 0.0;
    for (const auto& t : terms) {
      Vector at = sol.x;
      if (!t.domainGuard(at)) {
        allGuarded = false;
        if (!lastGood) {
          throw ModelError("refine_convex: term '" + t.name + "' outside its domain with no feasible iterate to back off to");
        }
        double s = 0.5;
        for (; s > 1e-12; s *= 0.5) {
          at = *lastGood + s * (sol.x - *lastGood);
          if (t.domainGuard(at)) break;
        }
        if (s <= 1e-12) throw ModelError("refine_convex: backoff failed for term '" + t.name + "'");
        p.constraints.push_back(tangent_cut(t, at));
        added = true;
        continue;
      }
      const double viol = t.valueOracle(at) - at[t.auxVar];
      if (viol > worst) {
        worst = viol;
        worstName = t.name;
      }
      if (viol > opts.tol) {
        p.constraints.push_back(tangent_cut(t, at));
        added = true;
      }
    }
    if (allGuarded) lastGood = sol.x;
    if (!added) return sol;
  }
  std::ostringstream os;
  os << "refine_convex: no convergence after " << opts.maxRounds << " tangent rounds; worst residual " << worst
     << " on term '" << worstName << "'";
  throw ModelError(os.str());
}

AddCutResult add_cut(MasterProblem& p, Cut cut) {
  for (const auto& c : p.cuts) {
    if (std::abs(c.rhs - cut.rhs) > 1e-12) continue;
    const auto& a = c.xCoeffs.coefficients();
    const auto& b = cut.xCoeffs.coefficients();
    if (a.size() != b.size()) continue;
    bool same = std::abs(c.xCoeffs.constant() - cut.xCoeffs.constant()) <= 1e-12;
    for (auto ia = a.begin(), ib = b.begin(); same && ia != a.end(); ++ia, ++ib) {
      same = ia->first == ib->first && std::abs(ia->second - ib->second) <= 1e-12;
    }
    if (same) return AddCutResult::Duplicate;
  }
  p.cuts.push_back(std::move(cut));
  return AddCutResult::Added;
}

}  // namespace derisk
