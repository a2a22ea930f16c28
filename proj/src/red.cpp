#include "derisk/red.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

namespace derisk {

std::string to_string(RedTermination t) {
  switch (t) {
    case RedTermination::GradTol: return "GradTol";
    case RedTermination::MaxSteps: return "MaxSteps";
    case RedTermination::DomainStall: return "DomainStall";
  }
  return "?";
}

namespace {

constexpr double kAdaEps = 1e-6;
constexpr double kArmijo = 1e-4;
constexpr double kBacktrack = 0.5;
constexpr double kMinStep = 1e-14;

void check_config(const RedConfig& cfg) {
  if (cfg.nRuns < 1) throw ModelError("red.nRuns must be at least 1");
  if (!(cfg.decayRate > 0.0 && cfg.decayRate < 1.0)) throw ModelError("red.decayRate must lie in (0, 1)");
  if (cfg.windowSize && *cfg.windowSize < 1) throw ModelError("red.windowSize must be at least 1");
  if (cfg.windowStep < 0) throw ModelError("red.windowStep must be nonnegative");
  if (cfg.maxSteps < 0) throw ModelError("red.maxSteps must be nonnegative");
}

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

AscentObjective ascent_objective(const SyntheticObjective& f) {
  return {[&f](const Vector& z) { return f.value(z); }, [&f](const Vector& z) { return f.gradient(z); }};
}

int effective_window_size(const RedConfig& cfg, Eigen::Index n) {
  const int w = cfg.windowSize ? *cfg.windowSize : std::max<int>(10, static_cast<int>(n / std::max(cfg.nRuns, 1)));
  return static_cast<int>(std::clamp<Eigen::Index>(w, 1, std::max<Eigen::Index>(n, 1)));
}

double effective_support_value(const RedConfig& cfg) { return cfg.supportValue ? *cfg.supportValue : 0.1; }

std::vector<RedStart> sliding_window_starts(const std::vector<Eigen::Index>& sortedIds, const RedConfig& cfg) {
  check_config(cfg);
  const auto n = static_cast<Eigen::Index>(sortedIds.size());
  if (n == 0) throw ModelError("sliding_window_starts: no features");
  const int width = effective_window_size(cfg, n);
  const double support = effective_support_value(cfg);
  std::vector<RedStart> starts;
  starts.reserve(cfg.nRuns);
  for (int h = 0; h < cfg.nRuns; ++h) {
    RedStart s;
    s.zeta = Vector::Zero(n);
    s.frozen.assign(n, true);
    const Eigen::Index offset = (static_cast<Eigen::Index>(h) * cfg.windowStep) % n;
    const Eigen::Index end = std::min<Eigen::Index>(offset + width, n);
    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.seed) + static_cast<std::uint64_t>(h));
    for (Eigen::Index pos = offset; pos < end; ++pos) {
      const auto id = sortedIds[pos];
      s.frozen[id] = false;
      const double base = pos - offset < cfg.warmstartSize ? cfg.warmstartValue : support;
      s.zeta[id] = base * (1.0 + 1e-3 * (unit_uniform(rng) - 0.5));
    }
    const double total = s.zeta.sum();
    if (total >= cfg.gamma) s.zeta *= 0.5 * cfg.gamma / total;
    s.zeta = s.zeta.cwiseMin(0.5);
    starts.push_back(std::move(s));
  }
  return starts;
}

RedRun adadelta_ascent(const AscentObjective& f, const Vector& start, const std::vector<bool>& frozen,
                       const RedConfig& cfg) {
  check_config(cfg);
  const auto n = start.size();
  if (static_cast<Eigen::Index>(frozen.size()) != n) throw ModelError("adadelta_ascent: frozen mask size mismatch");
  const auto f0 = f.value(start);
  if (!f0) throw ModelError("adadelta_ascent: start is outside the objective's domain");
  const double rho = cfg.decayRate;

  RedRun run;
  run.start = start;
  run.best = start;
  run.bestValue = *f0;
  run.accepted.push_back(*f0);

  Vector z = start;
  double fz = *f0;
  Vector eg2 = Vector::Zero(n);
  Vector edx2 = Vector::Zero(n);
  for (int step = 0;; ++step) {
    Vector g = f.gradient(z);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (frozen[i] || (z[i] <= 0.0 && g[i] < 0.0)) g[i] = 0.0;
    }
    if (g.size() == 0 || g.cwiseAbs().maxCoeff() <= cfg.gradTol) {
      run.terminationReason = RedTermination::GradTol;
      break;
    }
    if (step >= cfg.maxSteps) {
      run.terminationReason = RedTermination::MaxSteps;
      break;
    }
    eg2 = rho * eg2 + (1.0 - rho) * g.cwiseProduct(g);
    const Vector dx = ((edx2.array() + kAdaEps).sqrt() / (eg2.array() + kAdaEps).sqrt() * g.array()).matrix();
    double s = 1.0;
    bool accepted = false;
    Vector cand;
    double fc = 0.0;
    while (s >= kMinStep) {
      cand = (z + s * dx).cwiseMax(0.0);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (frozen[i]) cand[i] = z[i];
      }
      const auto v = f.value(cand);
      if (v && *v >= fz + kArmijo * g.dot(cand - z)) {
        fc = *v;
        accepted = true;
        break;
      }
      s *= kBacktrack;
    }
    if (!accepted) {
      run.terminationReason = RedTermination::DomainStall;
      break;
    }
    const Vector moved = cand - z;
    edx2 = rho * edx2 + (1.0 - rho) * moved.cwiseProduct(moved);
    z = std::move(cand);
    fz = fc;
    ++run.steps;
    run.accepted.push_back(fz);
    if (fz > run.bestValue) {
      run.bestValue = fz;
      run.best = z;
    }
  }
  return run;
}

MultistartResult multistart(const Vector& phi, double alpha, const RedConfig& cfg, const std::vector<int>& order) {
  check_config(cfg);
  if (phi.size() == 0) throw ModelError("multistart: no features");
  MultistartResult out;
  const double m = phi.maxCoeff();
  out.scaledPhi = m > 0.0 ? Vector(phi * (cfg.featureScale / m)) : phi;
  const auto sorted = top_indices(out.scaledPhi, out.scaledPhi.size());
  const auto starts = sliding_window_starts(sorted, cfg);
  const SyntheticObjective obj(out.scaledPhi, alpha, cfg.gamma, cfg.epsilon,
                               Vector::Constant(phi.size(), cfg.epsilonI));
  const auto fobj = ascent_objective(obj);

  std::vector<int> sched = order;
  if (sched.empty()) {
    sched.resize(starts.size());
    for (std::size_t i = 0; i < sched.size(); ++i) sched[i] = static_cast<int>(i);
  }
  if (sched.size() != starts.size()) throw ModelError("multistart: execution order must list every run once");

  out.runs.assign(starts.size(), RedRun{});
  std::vector<std::string> errors(starts.size());
  std::vector<char> ok(starts.size(), 0);
  auto work = [&](std::size_t slot, std::size_t stride) {
    for (std::size_t k = slot; k < sched.size(); k += stride) {
      const int h = sched[k];
      try {
        out.runs[h] = adadelta_ascent(fobj, starts[h].zeta, starts[h].frozen, cfg);
        ok[h] = 1;
      } catch (const std::exception& e) {
        errors[h] = e.what();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(cfg.workers, 1)), 1,
                                                      starts.size());
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }

  int best = -1;
  for (std::size_t h = 0; h < out.runs.size(); ++h) {
    if (!ok[h]) continue;
    if (best < 0 || out.runs[h].bestValue > out.runs[best].bestValue) best = static_cast<int>(h);
  }
  if (best < 0) {
    std::ostringstream os;
    os << "multistart: every run failed at its start";
    for (std::size_t h = 0; h < errors.size(); ++h) os << "; run " << h << ": " << errors[h];
    throw ModelError(os.str());
  }
  out.bestRun = best;
  return out;
}

BoostResult multistart_boost(const Vector& phi, double alpha, const RedConfig& cfg) {
  const auto ms = multistart(phi, alpha, cfg);
  const auto& run = ms.runs[ms.bestRun];
  BoostResult r;
  r.z = to_scenario(run.best);
  r.weights = ms.scaledPhi + run.best;
  r.lseValue = log_sum_exp(alpha, r.weights);
  r.eval = make_feature_eval(phi);
  return r;
}

}  // namespace derisk
