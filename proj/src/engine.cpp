#include "derisk/engine.hpp"

#include "derisk/log.hpp"
#include "derisk/red.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

namespace derisk {

double choose_theta(double cStar, double phiStar, double lambdaLo, double lambdaHi, double xi) {
  if (!(phiStar > 0.0)) throw EngineError("choose_theta: the nominal solution is already risk-free (Phi* = 0)");
  if (!(lambdaLo > 0.0 && lambdaLo < lambdaHi && lambdaHi < 1.0)) {
    throw EngineError("choose_theta: need 0 < lambdaLo < lambdaHi < 1");
  }
  if (!(xi > 0.0)) throw EngineError("choose_theta: xi must be positive");
  if (!(cStar > 0.0)) throw EngineError("choose_theta: nominal cost must be positive");
  return cStar * xi / (phiStar * (lambdaHi - lambdaLo));
}

double choose_alpha_theory(Eigen::Index nFeatures, double phiU0, double delta) {
  if (nFeatures < 1) throw EngineError("choose_alpha_theory: need at least one feature");
  if (!(delta > 0.0)) throw EngineError("choose_alpha_theory: delta must be positive");
  const double boost = phiU0 > 0.0 ? std::max(0.0, std::log(2.0 * phiU0 / delta)) : 0.0;
  return std::max(1e-8, (std::log(static_cast<double>(nFeatures)) + boost) / delta);
}

double choose_alpha_grid(Eigen::Index nBranches, double phiStar) {
  if (nBranches < 1) throw EngineError("choose_alpha_grid: need at least one branch");
  if (!(phiStar > 0.0)) throw EngineError("choose_alpha_grid: phiStar must be positive");
  return std::max(1e-8, std::min(50.0, std::log(static_cast<double>(nBranches)) / (0.25 * phiStar)));
}

std::string to_string(TerminationTest t) {
  switch (t) {
    case TerminationTest::Absolute: return "Absolute";
    case TerminationTest::Relative: return "Relative";
    case TerminationTest::Continue: return "Continue";
  }
  return "?";
}

TerminationTest check_termination(double phiMax, double phiL, double delta, double deltaRel) {
  if (phiMax <= phiL + delta) return TerminationTest::Absolute;
  if (phiMax - phiL <= deltaRel * phiMax) return TerminationTest::Relative;
  return TerminationTest::Continue;
}

Outcome classify_outcome(double cHat, double phiHat, double cStar, double phiStar, double theta, double lambdaLo,
                         double lambdaHi, double xi) {
  Outcome o;
  o.weightedValue = cHat + theta * phiHat;
  o.threshold = cStar + theta * lambdaHi * phiStar;
  if (o.weightedValue <= o.threshold) {
    o.kind = OutcomeKind::DeRisked;
    o.bounds = RiskCostBounds{lambdaHi, 1.0 + lambdaHi * xi / (lambdaHi - lambdaLo)};
  } else {
    o.kind = OutcomeKind::Certificate;
    o.certificateStatement = CertificateStatement{lambdaLo, xi};
  }
  return o;
}

bool MonitorReport::all_ok() const {
  for (const auto& r : rows) {
    for (const auto& f : {r.lemma1Ok, r.lemma2Ok, r.lemmaUpperOk, r.corViolationOk}) {
      if (f && !*f) return false;
    }
  }
  return true;
}

int MonitorReport::evaluated_count() const {
  int n = 0;
  for (const auto& r : rows) {
    n += r.lemma1Ok.has_value() + r.lemma2Ok.has_value() + r.lemmaUpperOk.has_value() +
         r.corViolationOk.has_value();
  }
  return n;
}

MonitorReport monitor(const EngineState& state) {
  MonitorReport rep;
  auto check = [&rep](double slack) {
    rep.worstSlack = std::min(rep.worstSlack, slack);
    return slack >= 0.0;
  };
  for (std::size_t k = 0; k < state.history.size(); ++k) {
    const auto& rec = state.history[k];
    const IterationTrace tr = k < state.trace.size() ? state.trace[k] : IterationTrace{};
    MonitorRow row;
    row.t = rec.t;
    if (rec.exactPhi) {
      const double phi = *rec.exactPhi;
      row.lemma1Ok = check(phi + kMonitorTol - rec.phiL);
      if (tr.attainsMax || (tr.exactLse && state.theoryAlpha)) {
        row.lemma2Ok = check(rec.phiMax + 2.0 * state.delta + kMonitorTol - phi);
      }
    }
    row.lemmaUpperOk = check(state.phiU0 + kMonitorTol - rec.phiL);
    const bool corApplies =
        state.greedySeparation || (state.theoryAlpha && tr.exactLse && !state.flattened);
    if (tr.cutViolation && corApplies) {
      row.corViolationOk = check(*tr.cutViolation - (state.delta / 4.0 - 1e-9));
    }
    rep.rows.push_back(row);
  }
  return rep;
}

void validate_config(const RunConfig& cfg) {
  if (cfg.tMax < 0) throw ModelError("tMax: must be nonnegative");
  const auto& tp = cfg.thetaPolicy;
  if (tp.theta && !(*tp.theta > 0.0)) throw ModelError("thetaPolicy.theta: must be positive");
  if (!(tp.lambdaLo > 0.0 && tp.lambdaLo < tp.lambdaHi && tp.lambdaHi < 1.0)) {
    throw ModelError("thetaPolicy: need 0 < lambdaLo < lambdaHi < 1");
  }
  if (!(tp.xi > 0.0)) throw ModelError("thetaPolicy.xi: must be positive");
  if (cfg.alphaPolicy.rule == AlphaRule::Explicit && !(cfg.alphaPolicy.value > 0.0)) {
    throw ModelError("alphaPolicy.value: must be positive");
  }
  if (cfg.deltaAbs && !(*cfg.deltaAbs > 0.0)) throw ModelError("deltaAbs: must be positive");
  if (!(cfg.deltaAbsRelative > 0.0)) throw ModelError("deltaAbsRelative: must be positive");
  if (!(cfg.deltaRel > 0.0)) throw ModelError("deltaRel: must be positive");
  if (cfg.deltaPrime && !(*cfg.deltaPrime > 0.0)) throw ModelError("deltaPrime: must be positive");
  if (cfg.clipK && *cfg.clipK < 1) throw ModelError("clipK: must be at least 1");
  if (cfg.separationKernel == SeparationKernel::SoftmaxClip && !cfg.clipK) {
    throw ModelError("clipK: required by the softmax-clip separation kernel");
  }
  if (cfg.tupleCuts < 1) throw ModelError("tupleCuts: must be at least 1");
  if (!(cfg.convexTol > 0.0)) throw ModelError("convexTol: must be positive");
  if (cfg.maxTangentRounds < 1) throw ModelError("maxTangentRounds: must be at least 1");
}

BoostResult boost(const FeatureModel& model, const Vector& x, double alpha, const RunConfig& cfg, int t) {
  switch (cfg.boostingKernel) {
    case BoostingKernel::Exact: return exact_boost(model, x, alpha);
    case BoostingKernel::Greedy: return greedy_boost(model, x, alpha);
    case BoostingKernel::BudgetTopN: return budget_topN_boost(model, x, model.budget(), alpha);
    case BoostingKernel::Ball: return ball_boost(model, x, model.tuple_size(), alpha);
    case BoostingKernel::Synthetic: {
      if (model.scenario_set() != ScenarioSetKind::Trivial) {
        throw ModelError("the synthetic kernel needs a model without an explicit uncertainty set");
      }
      RedConfig red = cfg.red;
      red.seed = cfg.red.seed + cfg.seed + static_cast<unsigned>(t);
      const FeatureEval eval = model.evaluate(x, {});
      return multistart_boost(eval.values, alpha, red);
    }
  }
  throw ModelError("unknown boosting kernel");
}

SeparationResult separate(const BoostResult& b, double alpha, const RunConfig& cfg) {
  Vector y = b.weights;
  if (cfg.flatten) y = flatten(y, default_flatten_floor(y));
  switch (cfg.separationKernel) {
    case SeparationKernel::Greedy: return greedy_separation(y);
    case SeparationKernel::Softmax: return drop_small(softmax(alpha, y), cfg.dropBelow);
    case SeparationKernel::SoftmaxClip: return drop_small(clip(softmax(alpha, y), *cfg.clipK), cfg.dropBelow);
  }
  throw ModelError("unknown separation kernel");
}

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

LpSolution solve_master(MasterProblem& master, const std::vector<ConvexTerm>& terms, const RunConfig& cfg) {
  return refine_convex(master, terms, RefineOptions{cfg.convexTol, cfg.maxTangentRounds});
}

}  // namespace

RunResult run(const FeatureModel& model, const RunConfig& cfg, const RunOptions& opts) {
  validate_config(cfg);
  RunResult res;
  EngineState& st = res.state;
  st.master = with_epigraph(model.nominal(), 1.0);
  const auto problems = validate_master(st.master);
  if (!problems.empty()) throw ModelError("nominal problem: " + problems.front());
  const VarId phiL = *st.master.phiL;
  const auto terms = model.convex_terms();

  auto clock0 = std::chrono::steady_clock::now();
  LpSolution sol = solve_master(st.master, terms, cfg);
  if (sol.status != LpStatus::Optimal) throw EngineError("nominal problem is " + to_string(sol.status));
  st.nominalX = sol.x;
  st.nominalCost = evaluate_cost(st.master, sol.x);
  st.phiU0 = model.exact_phi(sol.x).phi;

  const auto& tp = cfg.thetaPolicy;
  st.theta = tp.theta ? *tp.theta : choose_theta(st.nominalCost, st.phiU0, tp.lambdaLo, tp.lambdaHi, tp.xi);
  st.master.theta = st.theta;
  st.delta = cfg.deltaAbs ? *cfg.deltaAbs
                          : cfg.deltaAbsRelative * (st.phiU0 > 0.0 ? st.phiU0 : 1.0);
  switch (cfg.alphaPolicy.rule) {
    case AlphaRule::Explicit: st.alpha = cfg.alphaPolicy.value; break;
    case AlphaRule::Theory: st.alpha = choose_alpha_theory(model.feature_count(), st.phiU0, st.delta); break;
    case AlphaRule::Grid:
      st.alpha = choose_alpha_grid(model.base_values(sol.x).size(), st.phiU0 > 0.0 ? st.phiU0 : 1.0);
      break;
  }
  st.deltaPrime = cfg.deltaPrime ? *cfg.deltaPrime : st.alpha * st.delta;
  st.theoryAlpha = cfg.alphaPolicy.rule == AlphaRule::Theory;
  st.greedySeparation = cfg.separationKernel == SeparationKernel::Greedy ||
                        (cfg.separationKernel == SeparationKernel::SoftmaxClip && cfg.clipK && *cfg.clipK == 1);
  st.flattened = cfg.flatten;

  {
    std::ostringstream os;
    os << model.kind() << ": c* = " << st.nominalCost << ", Phi* = " << st.phiU0 << ", Theta = " << st.theta
       << ", alpha = " << st.alpha << ", Delta = " << st.delta;
    log(LogLevel::Info, os.str());
  }

  bool converged = false;
  res.stopReason = "IterationLimit";
  for (int t = 0;; ++t) {
    st.t = t;
    if (t >= cfg.tMax) break;
    if (t > 0) {
      clock0 = std::chrono::steady_clock::now();
      sol = solve_master(st.master, terms, cfg);
      if (sol.status != LpStatus::Optimal) {
        throw EngineError("master problem became " + to_string(sol.status) + " at iteration " + std::to_string(t) +
                          "; an adapter emitted an invalid cut");
      }
    }
    const Vector& x = sol.x;
    const double phiLt = x[phiL];
    BoostResult b = boost(model, x, st.alpha, cfg, t);
    IterationRecord rec;
    rec.t = t;
    rec.x = x;
    rec.cost = evaluate_cost(st.master, x);
    rec.phiL = phiLt;
    rec.phiMax = b.eval.phiMax;
    rec.exactPhi = model.exact_phi(x).phi;
    rec.masterObjective = rec.cost + st.theta * phiLt;
    IterationTrace tr;
    tr.exactLse = b.exactLse;
    tr.attainsMax = b.attainsMax;

    const TerminationTest test = check_termination(rec.phiMax, phiLt, st.delta, cfg.deltaRel);
    bool stop = false;
    if (test != TerminationTest::Continue) {
      res.stopReason = to_string(test);
      stop = true;
    } else if (cfg.earlyExit && t >= 1 && rec.phiMax <= 0.5 * st.phiU0) {
      res.stopReason = "EarlyExit";
      stop = true;
    }
    if (!stop) {
      const SeparationResult pi = separate(b, st.alpha, cfg);
      const ScenarioVector z = b.z.value_or(ScenarioVector{});
      Cut cut = model.linearize(x, z, pi.pi);
      cut.provenance.iteration = t;
      cut.provenance.pi = pi.pi;
      if (!z.entries.empty()) cut.provenance.z = z;
      tr.cutViolation = cut.bound_at(x) - phiLt;
      double bestViolation = *tr.cutViolation;
      int added = add_cut(st.master, std::move(cut)) == AddCutResult::Added;
      if (cfg.tupleCuts > 1) {
        for (auto& c : model.extra_cuts(x, z, cfg.tupleCuts, cfg.tuplePool)) {
          c.provenance.iteration = t;
          bestViolation = std::max(bestViolation, c.bound_at(x) - phiLt);
          added += add_cut(st.master, std::move(c)) == AddCutResult::Added;
        }
      }
      rec.cutsAdded = added;
      if (added == 0) {
        res.stopReason = "DuplicateCut";
        stop = true;
        log(LogLevel::Warn, "iteration " + std::to_string(t) + ": separation produced only duplicate cuts");
      } else if (bestViolation <= 1e-12 * std::max(1.0, std::abs(phiLt))) {
        res.stopReason = "StalledCut";
        stop = true;
        log(LogLevel::Warn, "iteration " + std::to_string(t) + ": no cut is violated at the master solution");
      }
    }
    rec.wallMillis = opts.timing ? ms_since(clock0) : 0.0;
    {
      std::ostringstream os;
      os << "t=" << t << " cost=" << rec.cost << " phiL=" << phiLt << " phiMax=" << rec.phiMax
         << " Phi=" << *rec.exactPhi;
      log(LogLevel::Debug, os.str());
    }
    st.history.push_back(std::move(rec));
    st.trace.push_back(tr);
    if (stop) {
      converged = test != TerminationTest::Continue;
      break;
    }
  }

  const Vector xHat = st.history.empty() ? st.nominalX : st.history.back().x;
  res.finalCost = evaluate_cost(st.master, xHat);
  res.finalPhi = model.exact_phi(xHat).phi;
  res.outcome = classify_outcome(res.finalCost, res.finalPhi, st.nominalCost, st.phiU0, st.theta, tp.lambdaLo,
                                 tp.lambdaHi, tp.xi);
  // DeRisked holds for any feasible point; Certificate needs a converged master
  if (!converged && res.outcome.kind == OutcomeKind::Certificate) {
    res.outcome.kind = OutcomeKind::IterationLimit;
    res.outcome.certificateStatement.reset();
  }
  res.outcome.solution = xHat;
  res.monitors = monitor(st);
  return res;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void write_iterations_csv(std::ostream& os, const std::vector<IterationRecord>& history, bool timing) {
  os << "t,cost,phiL,phiMax,exactPhi,cutsAdded,wallMillis\n";
  for (const auto& r : history) {
    os << r.t << ',' << format_double(r.cost) << ',' << format_double(r.phiL) << ',' << format_double(r.phiMax)
       << ',' << (r.exactPhi ? format_double(*r.exactPhi) : std::string()) << ',' << r.cutsAdded << ','
       << (timing ? format_double(r.wallMillis) : std::string()) << '\n';
  }
}

}  // namespace derisk
