#pragma once

#include "derisk/adapters/instance.hpp"
#include "derisk/engine.hpp"
#include "derisk/json_io.hpp"
#include "derisk/lp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace testing {

using namespace derisk;

inline std::string data_path(const std::string& name) { return std::string(DERISK_DATA_DIR) + "/" + name; }

inline std::unique_ptr<FeatureModel> bundled_model(const std::string& name) {
  return load_model(load_json_file(data_path(name + ".json")));
}

inline RunConfig bundled_config(const std::string& name) {
  return read_run_config(load_json_file(data_path(name + ".config.json")));
}

inline QueueingInstance bundled_queueing() { return read_queueing_instance(load_json_file(data_path("queueing.json"))); }

inline InterdictionInstance bundled_interdiction() {
  return read_interdiction_instance(load_json_file(data_path("interdiction.json")));
}

/// Config with the theory alpha and exact boosting, keeping the bundled
/// theta targets.
inline RunConfig theory_config(const std::string& name) {
  RunConfig cfg;
  cfg.tMax = 500;
  cfg.thetaPolicy = bundled_config(name).thetaPolicy;
  cfg.alphaPolicy.rule = AlphaRule::Theory;
  cfg.boostingKernel = BoostingKernel::Exact;
  cfg.separationKernel = SeparationKernel::Softmax;
  return cfg;
}

// ---- LP oracle: vertex enumeration over bounded problems

struct Row {
  Eigen::VectorXd a;
  double b;
  Sense sense;
};

inline std::vector<Row> dense_rows(const MasterProblem& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  std::vector<Row> rows;
  for (const auto& c : p.constraints) {
    Row r{Eigen::VectorXd::Zero(n), c.rhs - c.lhs.constant(), c.sense};
    for (const auto& [id, v] : c.lhs.coefficients()) r.a[id] = v;
    rows.push_back(r);
  }
  for (const auto& c : p.cuts) {
    Row r{Eigen::VectorXd::Zero(n), c.rhs - c.xCoeffs.constant(), Sense::Ge};
    for (const auto& [id, v] : c.xCoeffs.coefficients()) r.a[id] = v;
    r.a[*p.phiL] += 1.0;
    rows.push_back(r);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& v = p.variables[j];
    if (std::isfinite(v.lower)) {
      Row r{Eigen::VectorXd::Unit(n, j), v.lower, Sense::Ge};
      rows.push_back(r);
    }
    if (std::isfinite(v.upper)) {
      Row r{Eigen::VectorXd::Unit(n, j), v.upper, Sense::Le};
      rows.push_back(r);
    }
  }
  return rows;
}

inline Eigen::VectorXd dense_objective(const MasterProblem& p) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
  for (const auto& [id, v] : p.cost.coefficients()) c[id] = v;
  if (p.phiL) c[*p.phiL] += p.theta;
  return c;
}

/// Minimum over all basic feasible solutions; nullopt when none exists.
/// Only valid for bounded feasible regions.
inline std::optional<double> vertex_enumeration(const MasterProblem& p) {
  const auto rows = dense_rows(p);
  const auto n = static_cast<int>(p.size());
  const auto m = static_cast<int>(rows.size());
  const Eigen::VectorXd c = dense_objective(p);
  std::optional<double> best;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  if (m < n) return std::nullopt;
  for (;;) {
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      A.row(i) = rows[pick[i]].a.transpose();
      b[i] = rows[pick[i]].b;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() == n) {
      const Eigen::VectorXd x = lu.solve(b);
      bool ok = true;
      for (const auto& r : rows) {
        const double lhs = r.a.dot(x);
        const double tol = 1e-7 * (1.0 + std::abs(r.b));
        if ((r.sense == Sense::Le && lhs > r.b + tol) || (r.sense == Sense::Ge && lhs < r.b - tol) ||
            (r.sense == Sense::Eq && std::abs(lhs - r.b) > tol)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        const double v = c.dot(x) + p.cost.constant();
        if (!best || v < *best) best = v;
      }
    }
    int i = n - 1;
    while (i >= 0 && pick[i] == m - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int k = i + 1; k < n; ++k) pick[k] = pick[k - 1] + 1;
  }
  return best;
}

/// Random bounded LP with nVars variables and nCons general constraints.
inline MasterProblem random_lp(std::mt19937_64& rng, int nVars, int nCons) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 9);
  MasterProblem p;
  for (int j = 0; j < nVars; ++j) {
    const double lo = std::round(5.0 * u(rng) - 2.0);
    p.add_variable("v" + std::to_string(j), lo, lo + 1.0 + std::round(6.0 * std::abs(u(rng))));
    p.cost.add(j, std::round(10.0 * u(rng)) / 2.0);
  }
  for (int i = 0; i < nCons; ++i) {
    LinearExpr e;
    for (int j = 0; j < nVars; ++j) {
      if (coin(rng) < 7) e.add(j, std::round(8.0 * u(rng)) / 2.0);
    }
    const int s = coin(rng);
    const Sense sense = s < 4 ? Sense::Le : s < 8 ? Sense::Ge : Sense::Eq;
    p.constraints.push_back({e, sense, std::round(10.0 * u(rng)), "r" + std::to_string(i)});
  }
  return p;
}

// ---- feasible-point sampling for cut validity checks

/// Vertices of the nominal problem under random costs on the decision
/// variables, then random convex combinations, completed by the model.
inline std::vector<Vector> sample_feasible(const FeatureModel& model, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MasterProblem& nom = model.nominal();
  std::vector<Vector> vertices;
  for (int k = 0; k < 8; ++k) {
    MasterProblem p = nom;
    p.cost = LinearExpr{};
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!p.variables[j].auxiliary && std::isfinite(p.variables[j].lower) && std::isfinite(p.variables[j].upper)) {
        p.cost.add(static_cast<VarId>(j), u(rng));
      }
    }
    const LpSolution s = solve_lp(p);
    if (s.status == LpStatus::Optimal) vertices.push_back(s.x);
  }
  std::vector<Vector> out;
  std::gamma_distribution<double> g(1.0, 1.0);
  for (int i = 0; i < count && !vertices.empty(); ++i) {
    Vector x = Vector::Zero(vertices.front().size());
    double total = 0.0;
    for (const auto& v : vertices) {
      const double w = g(rng);
      x += w * v;
      total += w;
    }
    x /= total;
    // aux entries get recomputed by complete()
    for (std::size_t j = 0; j < nom.size(); ++j) {
      if (nom.variables[j].auxiliary) x[static_cast<Eigen::Index>(j)] = 0.0;
    }
    out.push_back(model.complete(x));
  }
  return out;
}

/// Largest amount by which a stored cut overestimates Phi at the samples.
inline double worst_cut_excess(const FeatureModel& model, const std::vector<Cut>& cuts,
                               const std::vector<Vector>& samples) {
  double worst = -kInf;
  for (const auto& x : samples) {
    const double phi = model.exact_phi(x).phi;
    for (const auto& c : cuts) worst = std::max(worst, c.bound_at(x) - phi);
  }
  return worst;
}

// ---- interdiction oracle: enumerate every s-t cut directly

inline double brute_force_interdiction_phi(const InterdictionInstance& inst, const Vector& x,
                                           const ScenarioVector& z) {
  const int n = static_cast<int>(inst.nodes.size());
  std::vector<int> inner;
  for (int v = 0; v < n; ++v) {
    if (v != inst.source && v != inst.sink) inner.push_back(v);
  }
  double best = 0.0;
  for (unsigned mask = 0; mask < (1U << inner.size()); ++mask) {
    std::vector<bool> S(n, false);
    S[inst.source] = true;
    for (std::size_t b = 0; b < inner.size(); ++b) {
      if ((mask >> b) & 1U) S[inner[b]] = true;
    }
    double cap = 0.0;
    for (std::size_t a = 0; a < inst.arcs.size(); ++a) {
      if (S[inst.arcs[a].tail] && !S[inst.arcs[a].head]) {
        cap += std::min(x[static_cast<Eigen::Index>(a)], z.at(static_cast<int>(a), inst.arcs[a].capacity));
      }
    }
    best = std::max(best, inst.demand - cap);
  }
  return best;
}

/// Random graph on nNodes with a chain s -> ... -> t guaranteeing the demand.
inline InterdictionInstance random_interdiction(std::mt19937_64& rng, int nNodes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  InterdictionInstance inst;
  for (int v = 0; v < nNodes; ++v) inst.nodes.push_back("n" + std::to_string(v));
  inst.source = 0;
  inst.sink = nNodes - 1;
  inst.demand = 10.0;
  for (int v = 0; v + 1 < nNodes; ++v) inst.arcs.push_back({v, v + 1, 10.0 + std::round(20.0 * u(rng)), 1.0});
  for (int a = 0; a < nNodes; ++a) {
    for (int b = 0; b < nNodes; ++b) {
      if (a == b || b == a + 1 || a == inst.sink || b == inst.source) continue;
      if (u(rng) < 0.3) inst.arcs.push_back({a, b, std::round(25.0 * u(rng)), 1.0 + std::round(4.0 * u(rng))});
    }
  }
  inst.maxArcs = 1 + static_cast<int>(u(rng) * 2.0);
  inst.reductionFraction = 0.25 + 0.5 * u(rng);
  return inst;
}

/// Random flow vector with 0 <= x <= capacity (not necessarily conserving).
inline Vector random_capacity_vector(std::mt19937_64& rng, const InterdictionInstance& inst) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(static_cast<Eigen::Index>(inst.arcs.size()));
  for (std::size_t a = 0; a < inst.arcs.size(); ++a) x[static_cast<Eigen::Index>(a)] = inst.arcs[a].capacity * u(rng);
  return x;
}

// ---- top-k oracle

inline double brute_force_topk(const Vector& T, int k) {
  double best = -kInf;
  for (const auto& tup : k_tuples(static_cast<int>(T.size()), k)) {
    double s = 0.0;
    for (int i : tup) s += T[i];
    best = std::max(best, s / k);
  }
  return best;
}

}  // namespace testing
