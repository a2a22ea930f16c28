#include "derisk/model.hpp"

#include <cmath>
#include <sstream>

namespace derisk {

LinearExpr& LinearExpr::add(VarId id, double coeff) {
  if (coeff == 0.0) return *this;
  auto [it, inserted] = coeffs_.emplace(id, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) coeffs_.erase(it);
  }
  return *this;
}

LinearExpr& LinearExpr::scale(double factor) {
  if (factor == 0.0) {
    coeffs_.clear();
    constant_ = 0.0;
    return *this;
  }
  for (auto& [id, c] : coeffs_) c *= factor;
  constant_ *= factor;
  return *this;
}

LinearExpr& LinearExpr::add(const LinearExpr& other, double factor) {
  for (const auto& [id, c] : other.coeffs_) add(id, factor * c);
  constant_ += factor * other.constant_;
  return *this;
}

double LinearExpr::coeff(VarId id) const {
  auto it = coeffs_.find(id);
  return it == coeffs_.end() ? 0.0 : it->second;
}

double LinearExpr::evaluate(const Vector& x) const {
  double v = constant_;
  for (const auto& [id, c] : coeffs_) {
    if (id < 0 || id >= x.size()) {
      throw ModelError("variable " + std::to_string(id) + " missing from decision vector of size " +
                       std::to_string(x.size()));
    }
    v += c * x[id];
  }
  return v;
}

VarId MasterProblem::add_variable(std::string name, double lower, double upper, bool auxiliary) {
  variables.push_back({std::move(name), lower, upper, auxiliary});
  return static_cast<VarId>(variables.size() - 1);
}

std::optional<VarId> MasterProblem::find(const std::string& name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return static_cast<VarId>(i);
  }
  return std::nullopt;
}

MasterProblem with_epigraph(MasterProblem nominal, double theta) {
  nominal.theta = theta;
  nominal.phiL = nominal.add_variable("phiL", 0.0, kInf, true);
  return nominal;
}

FeatureEval make_feature_eval(Vector values) {
  if (values.size() == 0) throw ModelError("feature evaluation with no features");
  FeatureEval e;
  Eigen::Index best = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0)) {
      throw ModelError("feature " + std::to_string(i) + " has negative or NaN value");
    }
    if (values[i] > values[best]) best = i;
  }
  e.argmaxId = best;
  e.phiMax = values[best];
  e.values = std::move(values);
  return e;
}

std::string to_string(BoostingKernel k) {
  switch (k) {
    case BoostingKernel::Exact: return "exact";
    case BoostingKernel::Greedy: return "greedy";
    case BoostingKernel::BudgetTopN: return "budget-topN";
    case BoostingKernel::Ball: return "ball";
    case BoostingKernel::Synthetic: return "synthetic";
  }
  return "?";
}

std::string to_string(SeparationKernel k) {
  switch (k) {
    case SeparationKernel::Softmax: return "softmax";
    case SeparationKernel::Greedy: return "greedy";
    case SeparationKernel::SoftmaxClip: return "softmax-clip";
  }
  return "?";
}

BoostingKernel parse_boosting_kernel(const std::string& id) {
  for (auto k : {BoostingKernel::Exact, BoostingKernel::Greedy, BoostingKernel::BudgetTopN,
                 BoostingKernel::Ball, BoostingKernel::Synthetic}) {
    if (to_string(k) == id) return k;
  }
  throw ModelError("unknown boosting kernel '" + id + "'");
}

SeparationKernel parse_separation_kernel(const std::string& id) {
  for (auto k : {SeparationKernel::Softmax, SeparationKernel::Greedy, SeparationKernel::SoftmaxClip}) {
    if (to_string(k) == id) return k;
  }
  throw ModelError("unknown separation kernel '" + id + "'");
}

std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::DeRisked: return "DeRisked";
    case OutcomeKind::Certificate: return "Certificate";
    case OutcomeKind::IterationLimit: return "IterationLimit";
  }
  return "?";
}

OutcomeKind parse_outcome_kind(const std::string& s) {
  for (auto k : {OutcomeKind::DeRisked, OutcomeKind::Certificate, OutcomeKind::IterationLimit}) {
    if (to_string(k) == s) return k;
  }
  throw ModelError("unknown outcome kind '" + s + "'");
}

namespace {

void check_expr(const LinearExpr& e, std::size_t n, const std::string& where,
                std::vector<std::string>& out) {
  for (const auto& [id, c] : e.coefficients()) {
    if (id < 0 || static_cast<std::size_t>(id) >= n) {
      out.push_back(where + ": references undeclared variable " + std::to_string(id));
    }
    if (c == 0.0) out.push_back(where + ": stores an explicit zero coefficient");
    if (!std::isfinite(c)) out.push_back(where + ": non-finite coefficient");
  }
}

}  // namespace

std::vector<std::string> validate_master(const MasterProblem& p) {
  std::vector<std::string> out;
  const std::size_t n = p.variables.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = p.variables[i];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper || v.lower == kInf ||
        v.upper == -kInf) {
      out.push_back("variables[" + std::to_string(i) + "]: invalid bounds");
    }
  }
  if (!(p.theta > 0.0) || !std::isfinite(p.theta)) out.push_back("theta: must be positive");
  check_expr(p.cost, n, "cost", out);
  if (p.phiL) {
    if (*p.phiL < 0 || static_cast<std::size_t>(*p.phiL) >= n) {
      out.push_back("phiL: references undeclared variable");
    } else if (p.variables[*p.phiL].lower != 0.0) {
      out.push_back("phiL: lower bound must be 0");
    }
  } else if (!p.cuts.empty()) {
    out.push_back("phiL: cuts present but no epigraph variable");
  }
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto where = "constraints[" + std::to_string(i) + "]";
    check_expr(p.constraints[i].lhs, n, where, out);
    if (!std::isfinite(p.constraints[i].rhs)) out.push_back(where + ": non-finite rhs");
  }
  for (std::size_t i = 0; i < p.cuts.size(); ++i) {
    const auto& cut = p.cuts[i];
    const auto where = "cuts[" + std::to_string(i) + "]";
    check_expr(cut.xCoeffs, n, where + ".xCoeffs", out);
    if (p.phiL && cut.xCoeffs.coeff(*p.phiL) != 0.0) {
      out.push_back(where + ".xCoeffs: phiL coefficient must be exactly 1 (stored implicitly)");
    }
    if (!std::isfinite(cut.rhs)) out.push_back(where + ".rhs: non-finite");
    const auto& pi = cut.provenance.pi;
    if (pi.size() > 0) {
      if ((pi.array() < 0.0).any()) out.push_back(where + ".provenance.pi: negative entry");
      if (std::abs(pi.sum() - 1.0) > kExactTol) {
        std::ostringstream os;
        os << where << ".provenance.pi: sums to " << pi.sum() << ", expected 1";
        out.push_back(os.str());
      }
    }
  }
  return out;
}

double evaluate_cost(const MasterProblem& p, const Vector& x) {
  for (const auto& [id, c] : p.cost.coefficients()) {
    if (id >= x.size()) {
      const std::string name = id < static_cast<VarId>(p.variables.size())
                                   ? p.variables[id].name
                                   : std::to_string(id);
      throw ModelError("decision vector is missing cost variable '" + name + "'");
    }
  }
  return p.cost.evaluate(x);
}

}  // namespace derisk
