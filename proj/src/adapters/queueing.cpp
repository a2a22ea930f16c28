#include "derisk/adapters/queueing.hpp"

#include <sstream>

namespace derisk {

void validate(const QueueingInstance& inst) {
  if (inst.arcs.empty()) throw ModelError("queueing: no arcs");
  if (!(inst.demand > 0.0)) throw ModelError("queueing: demand must be positive");
  if (!(inst.epsilon > 0.0)) throw ModelError("queueing: epsilon must be positive");
  double total = 0.0;
  for (std::size_t i = 0; i < inst.arcs.size(); ++i) {
    if (!(inst.arcs[i].capacity > 0.0)) throw ModelError("queueing: arcs[" + std::to_string(i) + "].capacity must be positive");
    if (!(inst.arcs[i].cost >= 0.0)) throw ModelError("queueing: arcs[" + std::to_string(i) + "].cost must be nonnegative");
    total += inst.arcs[i].capacity;
  }
  if (total < inst.demand) throw ModelError("queueing: total capacity is below the demand");
}

double queue_delay(double u, double x, double eps) {
  const double slack = u + eps - x;
  if (!(slack > 0.0)) {
    std::ostringstream os;
    os << "queueing: flow " << x << " saturates capacity " << u << " (infinite delay)";
    throw ModelError(os.str());
  }
  return u / slack;
}

double queue_delay_derivative(double u, double x, double eps) {
  const double slack = u + eps - x;
  if (!(slack > 0.0)) throw ModelError("queueing: derivative at infinite delay");
  return u / (slack * slack);
}

QueueingModel::QueueingModel(QueueingInstance inst) : inst_(std::move(inst)) {
  validate(inst_);
  const int n = static_cast<int>(inst_.arcs.size());
  LinearExpr flow;
  for (int i = 0; i < n; ++i) {
    const VarId v = nominal_.add_variable("x" + std::to_string(i + 1), 0.0, inst_.arcs[i].capacity);
    nominal_.cost.add(v, inst_.arcs[i].cost);
    flow.add(v, 1.0);
  }
  for (int i = 0; i < n; ++i) nominal_.add_variable("q" + std::to_string(i + 1), 0.0, kInf, true);
  nominal_.constraints.push_back({flow, Sense::Eq, inst_.demand, "demand"});
}

std::vector<ConvexTerm> QueueingModel::convex_terms() const {
  std::vector<ConvexTerm> terms;
  const double eps = inst_.epsilon;
  for (int i = 0; i < static_cast<int>(inst_.arcs.size()); ++i) {
    const double u = inst_.arcs[i].capacity;
    const VarId xv = flow_var(i);
    ConvexTerm t;
    t.auxVar = proxy_var(i);
    t.valueOracle = [u, eps, xv](const Vector& x) { return queue_delay(u, x[xv], eps); };
    t.gradientOracle = [u, eps, xv](const Vector& x) {
      return SparseGradient{{xv, queue_delay_derivative(u, x[xv], eps)}};
    };
    t.domainGuard = [u, eps, xv](const Vector& x) { return x[xv] < u + eps; };
    t.name = "mu" + std::to_string(i + 1);
    terms.push_back(std::move(t));
  }
  return terms;
}

Vector QueueingModel::complete(const Vector& x) const {
  Vector out = x;
  const int n = static_cast<int>(inst_.arcs.size());
  if (out.size() < 2 * n) {
    const auto old = out.size();
    out.conservativeResize(2 * n);
    out.tail(2 * n - old).setZero();
  }
  for (int i = 0; i < n; ++i) out[proxy_var(i)] = queue_delay(inst_.arcs[i].capacity, out[i], inst_.epsilon);
  return out;
}

std::string QueueingModel::feature_name(Eigen::Index i) const { return "arc" + std::to_string(i + 1); }

FeatureEval queueing_features(const QueueingInstance& inst, const Vector& x) {
  const auto n = static_cast<Eigen::Index>(inst.arcs.size());
  if (x.size() < n) throw ModelError("queueing: decision vector shorter than the arc count");
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = queue_delay(inst.arcs[i].capacity, x[i], inst.epsilon);
  return make_feature_eval(std::move(v));
}

FeatureEval QueueingModel::evaluate(const Vector& x, const ScenarioVector&) const {
  return queueing_features(inst_, x);
}

Cut QueueingModel::linearize(const Vector&, const ScenarioVector&, const Vector& pi) const {
  Cut c;
  for (int i = 0; i < static_cast<int>(inst_.arcs.size()); ++i) c.xCoeffs.add(proxy_var(i), -pi[i]);
  c.rhs = 0.0;
  return c;
}

PhiValue QueueingModel::exact_phi(const Vector& x) const {
  const auto e = queueing_features(inst_, x);
  return {e.phiMax, {}, e.argmaxId};
}

}  // namespace derisk
