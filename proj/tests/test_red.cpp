#include <doctest.h>

#include "support.hpp"

#include "derisk/red.hpp"

#include <numeric>

using namespace derisk;

TEST_CASE("sliding windows over four features") {
  RedConfig cfg;
  cfg.nRuns = 3;
  cfg.windowSize = 2;
  cfg.windowStep = 1;
  const std::vector<Eigen::Index> ids{0, 1, 2, 3};
  const auto starts = sliding_window_starts(ids, cfg);
  REQUIRE(starts.size() == 3);
  const std::vector<std::vector<int>> expect{{0, 1}, {1, 2}, {2, 3}};
  for (int h = 0; h < 3; ++h) {
    std::vector<int> free;
    for (int i = 0; i < 4; ++i) {
      if (!starts[h].frozen[i]) free.push_back(i);
    }
    CHECK(free == expect[h]);
    for (int i = 0; i < 4; ++i) {
      if (starts[h].frozen[i]) CHECK(starts[h].zeta[i] == 0.0);
    }
    CHECK(starts[h].zeta.sum() < cfg.gamma);
    CHECK((starts[h].zeta.array() < 1.0).all());
  }
}

TEST_CASE("window follows the sorted order, not the index order") {
  RedConfig cfg;
  cfg.nRuns = 1;
  cfg.windowSize = 2;
  const auto starts = sliding_window_starts({3, 0, 2, 1}, cfg);
  CHECK(!starts[0].frozen[3]);
  CHECK(!starts[0].frozen[0]);
  CHECK(starts[0].frozen[1]);
  CHECK(starts[0].frozen[2]);
}

TEST_CASE("default window size and support value") {
  RedConfig cfg;
  cfg.nRuns = 30;
  CHECK(effective_window_size(cfg, 5) == 5);
  CHECK(effective_window_size(cfg, 100) == 10);
  CHECK(effective_window_size(cfg, 900) == 30);
  CHECK(effective_support_value(cfg) == 0.1);
  cfg.supportValue = 0.3;
  CHECK(effective_support_value(cfg) == 0.3);
}

TEST_CASE("one-dimensional concave toy converges to its maximizer") {
  AscentObjective f{[](const Vector& z) -> std::optional<double> { return -(z[0] - 0.3) * (z[0] - 0.3); },
                    [](const Vector& z) { return Vector::Constant(1, -2.0 * (z[0] - 0.3)); }};
  RedConfig cfg;
  cfg.maxSteps = 20000;
  cfg.gradTol = 1e-9;
  const auto r = adadelta_ascent(f, Vector::Zero(1), {false}, cfg);
  CHECK(r.terminationReason == RedTermination::GradTol);
  CHECK(r.best[0] == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("a zero-gradient start stops immediately") {
  AscentObjective f{[](const Vector&) -> std::optional<double> { return 1.0; },
                    [](const Vector& z) { return Vector::Zero(z.size()); }};
  const auto r = adadelta_ascent(f, Vector::Constant(3, 0.2), {false, false, false}, RedConfig{});
  CHECK(r.steps == 0);
  CHECK(r.terminationReason == RedTermination::GradTol);
  CHECK(r.best == Vector::Constant(3, 0.2));
}

TEST_CASE("ascent is monotone, projected and respects frozen coordinates") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int k = 0; k < 20; ++k) {
    Vector phi(6);
    for (int i = 0; i < 6; ++i) phi[i] = u(rng);
    const SyntheticObjective obj(phi, 0.5, 1.0, 1.0, Vector::Ones(6));
    const auto f = ascent_objective(obj);
    RedConfig cfg;
    cfg.maxSteps = 300;
    Vector start = Vector::Constant(6, 0.05);
    std::vector<bool> frozen{false, true, false, false, true, false};
    const auto r = adadelta_ascent(f, start, frozen, cfg);
    for (std::size_t s = 1; s < r.accepted.size(); ++s) CHECK(r.accepted[s] >= r.accepted[s - 1]);
    CHECK(r.bestValue == doctest::Approx(*obj.value(r.best)));
    CHECK(obj.in_domain(r.best));
    CHECK((r.best.array() >= 0.0).all());
    CHECK(r.best[1] == start[1]);
    CHECK(r.best[4] == start[4]);
  }
  AscentObjective bad{[](const Vector&) -> std::optional<double> { return std::nullopt; },
                      [](const Vector& z) { return Vector::Zero(z.size()); }};
  CHECK_THROWS_AS(adadelta_ascent(bad, Vector::Zero(1), {false}, RedConfig{}), ModelError);
}

TEST_CASE("multistart is identical across worker counts and execution orders") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  Vector phi(40);
  for (int i = 0; i < 40; ++i) phi[i] = u(rng);
  RedConfig cfg;
  cfg.nRuns = 8;
  cfg.maxSteps = 200;
  cfg.seed = 5;
  cfg.workers = 1;
  const auto ref = multistart(phi, 0.3, cfg);
  std::vector<int> reversed(8);
  std::iota(reversed.rbegin(), reversed.rend(), 0);
  for (int w : {1, 2, 8}) {
    cfg.workers = w;
    for (const auto& order : {std::vector<int>{}, reversed}) {
      const auto got = multistart(phi, 0.3, cfg, order);
      CHECK(got.bestRun == ref.bestRun);
      REQUIRE(got.runs.size() == ref.runs.size());
      for (std::size_t h = 0; h < got.runs.size(); ++h) {
        CHECK(got.runs[h].best == ref.runs[h].best);
        CHECK(got.runs[h].bestValue == ref.runs[h].bestValue);
        CHECK(got.runs[h].steps == ref.runs[h].steps);
      }
    }
  }
  CHECK(ref.scaledPhi.maxCoeff() == doctest::Approx(cfg.featureScale));
  CHECK_THROWS(multistart(phi, 0.3, cfg, {0, 1}));
}

TEST_CASE("multistart boost weights are scaled features plus zeta") {
  Vector phi(12);
  for (int i = 0; i < 12; ++i) phi[i] = 1.0 + i % 5;
  RedConfig cfg;
  cfg.nRuns = 4;
  cfg.maxSteps = 100;
  const auto b = multistart_boost(phi, 0.5, cfg);
  const auto ms = multistart(phi, 0.5, cfg);
  const Vector zeta = ms.runs[ms.bestRun].best;
  CHECK((b.weights - (ms.scaledPhi + zeta)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(b.lseValue == doctest::Approx(log_sum_exp(0.5, b.weights)));
  CHECK(b.eval.phiMax == 5.0);
  // every run improves on or keeps its start
  for (const auto& r : ms.runs) CHECK(r.bestValue >= r.accepted.front());
}
