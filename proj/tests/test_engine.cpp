#include <doctest.h>

#include "support.hpp"

#include <sstream>

using namespace derisk;

TEST_CASE("theta examples") {
  CHECK(choose_theta(220.0, 100.0, 0.5, 0.6, 0.01) == doctest::Approx(0.22).epsilon(1e-12));
  CHECK(choose_theta(560.0, 45.0, 0.7, 0.75, 0.01) == doctest::Approx(2.488888888888889).epsilon(1e-12));
  CHECK_THROWS_AS(choose_theta(1.0, 0.0, 0.5, 0.6, 0.01), EngineError);
  CHECK_THROWS_AS(choose_theta(1.0, 1.0, 0.6, 0.5, 0.01), EngineError);
}

TEST_CASE("alpha examples") {
  // 2 Phi/Delta = 1 contributes nothing
  CHECK(choose_alpha_theory(8, 0.5, 1.0) == doctest::Approx(std::log(8.0)).epsilon(1e-14));
  CHECK(choose_alpha_theory(4, 50.0, 0.5) == doctest::Approx((std::log(4.0) + std::log(200.0)) / 0.5));
  CHECK(choose_alpha_theory(1, 0.0, 1e10) == 1e-8);
  CHECK(choose_alpha_grid(9, 1.0) == doctest::Approx(std::log(9.0) / 0.25));
  CHECK(choose_alpha_grid(9, 1e-3) == 50.0);
  CHECK(choose_alpha_grid(1, 3.0) == 1e-8);
}

TEST_CASE("termination tests") {
  CHECK(check_termination(10.0, 9.5, 0.5, 1e-6) == TerminationTest::Absolute);
  CHECK(check_termination(10.0, 9.0, 0.5, 0.1) == TerminationTest::Relative);
  CHECK(check_termination(10.0, 8.9, 0.5, 0.1) == TerminationTest::Continue);
  // absolute wins when both hold
  CHECK(check_termination(1.0, 1.0, 1e-9, 0.5) == TerminationTest::Absolute);
}

TEST_CASE("classification examples") {
  const double theta = choose_theta(560.0, 45.0, 0.7, 0.75, 0.01);
  const Outcome c = classify_outcome(570.0, 35.0, 560.0, 45.0, theta, 0.7, 0.75, 0.01);
  CHECK(c.kind == OutcomeKind::Certificate);
  CHECK(c.weightedValue == doctest::Approx(570.0 + 35.0 * theta));
  CHECK(c.threshold == doctest::Approx(560.0 + 0.75 * 45.0 * theta));
  CHECK(c.weightedValue > c.threshold);
  REQUIRE(c.certificateStatement);
  CHECK(c.certificateStatement->lambdaLo == 0.7);
  CHECK(!c.bounds);

  // exact tie goes to DeRisked
  const Outcome d = classify_outcome(100.0, 5.0, 100.0, 10.0, 1.0, 0.25, 0.5, 0.5);
  CHECK(d.weightedValue == d.threshold);
  CHECK(d.kind == OutcomeKind::DeRisked);
  REQUIRE(d.bounds);
  CHECK(d.bounds->riskRatio == 0.5);
  CHECK(d.bounds->costRatio == doctest::Approx(1.0 + 0.5 * 0.5 / 0.25));
}

TEST_CASE("DeRisked bounds hold for the point that earned them") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double cStar = 1.0 + 100.0 * u(rng);
    const double phiStar = 0.1 + 10.0 * u(rng);
    const double lo = 0.05 + 0.8 * u(rng);
    const double hi = lo + (0.99 - lo) * (0.01 + 0.98 * u(rng));
    const double xi = 0.001 + 0.2 * u(rng);
    const double theta = choose_theta(cStar, phiStar, lo, hi, xi);
    // c^ >= c* for any feasible point of the nominal problem
    const double cHat = cStar * (1.0 + 0.5 * u(rng));
    const double phiHat = phiStar * 1.2 * u(rng);
    const Outcome o = classify_outcome(cHat, phiHat, cStar, phiStar, theta, lo, hi, xi);
    if (o.kind == OutcomeKind::DeRisked) {
      CHECK(phiHat <= o.bounds->riskRatio * phiStar * (1.0 + 1e-12));
      CHECK(cHat <= o.bounds->costRatio * cStar * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("monitors flag a corrupted trace") {
  EngineState st;
  st.phiU0 = 10.0;
  st.delta = 0.4;
  st.theoryAlpha = true;
  IterationRecord ok;
  ok.phiL = 3.0;
  ok.phiMax = 5.0;
  ok.exactPhi = 5.0;
  st.history.push_back(ok);
  st.trace.push_back({true, true, 1.0});
  CHECK(monitor(st).all_ok());
  CHECK(monitor(st).evaluated_count() == 4);

  // phi_L above the true Phi: the cut that produced it was invalid
  IterationRecord bad = ok;
  bad.t = 1;
  bad.phiL = 5.5;
  st.history.push_back(bad);
  st.trace.push_back({true, true, std::nullopt});
  auto rep = monitor(st);
  CHECK(!rep.all_ok());
  CHECK(rep.rows[1].lemma1Ok == false);
  CHECK(rep.worstSlack == doctest::Approx(-0.5).epsilon(1e-5));

  // cut violation below Delta/4
  st.history.pop_back();
  st.trace.pop_back();
  st.trace.back().cutViolation = 0.05;
  rep = monitor(st);
  CHECK(rep.rows[0].corViolationOk == false);

  // not applicable without theory alpha or greedy separation
  st.theoryAlpha = false;
  st.trace.back().attainsMax = false;
  rep = monitor(st);
  CHECK(!rep.rows[0].corViolationOk.has_value());
  CHECK(!rep.rows[0].lemma2Ok.has_value());
  CHECK(rep.all_ok());
}

TEST_CASE("monitors hold on every theory-alpha exact run") {
  for (const char* name : {"queueing", "interdiction", "grid3", "grid9_budget", "concentration"}) {
    const auto model = testing::bundled_model(name);
    const auto r = run(*model, testing::theory_config(name));
    CHECK_MESSAGE(r.monitors.all_ok(), name);
    CHECK_MESSAGE(r.monitors.evaluated_count() > 0, name);
    CHECK_MESSAGE((r.stopReason == "Absolute" || r.stopReason == "Relative"), name << " " << r.stopReason);
  }
}

TEST_CASE("stored cuts never overestimate Phi at sampled feasible points") {
  for (const char* name : {"queueing", "interdiction", "grid3", "grid9_budget", "grid9_topk_ball", "concentration"}) {
    const auto model = testing::bundled_model(name);
    const auto r = run(*model, testing::bundled_config(name));
    const auto samples = testing::sample_feasible(*model, 60, 31);
    REQUIRE(!samples.empty());
    const double scale = std::max(1.0, r.state.phiU0);
    CHECK_MESSAGE(testing::worst_cut_excess(*model, r.state.master.cuts, samples) <= 1e-7 * scale, name);
    // and the iterates themselves
    std::vector<Vector> iterates;
    for (const auto& h : r.state.history) iterates.push_back(h.x.head(model->nominal().size()));
    CHECK_MESSAGE(testing::worst_cut_excess(*model, r.state.master.cuts, iterates) <= 1e-7 * scale, name);
  }
}

TEST_CASE("phiL never exceeds the nominal risk or the true risk") {
  for (const char* name : {"queueing", "interdiction", "grid3", "grid9_budget", "grid9_topk_ball", "concentration"}) {
    const auto model = testing::bundled_model(name);
    const auto r = run(*model, testing::bundled_config(name));
    for (const auto& h : r.state.history) {
      CHECK(h.phiL <= r.state.phiU0 + kMonitorTol);
      CHECK(h.phiL <= *h.exactPhi + kMonitorTol * std::max(1.0, *h.exactPhi));
      CHECK(h.cost >= r.state.nominalCost - 1e-7 * r.state.nominalCost);
    }
  }
}

TEST_CASE("scaling all costs scales theta and leaves the iterates alone") {
  auto inst = testing::bundled_interdiction();
  const InterdictionModel base(inst);
  for (auto& a : inst.arcs) a.cost *= 8.0;
  const InterdictionModel scaled(inst);
  const RunConfig cfg = testing::bundled_config("interdiction");
  const auto r1 = run(base, cfg);
  const auto r2 = run(scaled, cfg);
  CHECK(r2.state.theta == doctest::Approx(8.0 * r1.state.theta));
  REQUIRE(r1.state.history.size() == r2.state.history.size());
  for (std::size_t t = 0; t < r1.state.history.size(); ++t) {
    CHECK(r2.state.history[t].cost == doctest::Approx(8.0 * r1.state.history[t].cost));
    CHECK(r2.state.history[t].phiL == doctest::Approx(r1.state.history[t].phiL));
  }
  CHECK(r1.outcome.kind == r2.outcome.kind);
  CHECK(r2.finalPhi == doctest::Approx(r1.finalPhi));
}

TEST_CASE("bundled interdiction run") {
  const auto model = testing::bundled_model("interdiction");
  const auto r = run(*model, testing::bundled_config("interdiction"));
  CHECK(r.state.nominalCost == doctest::Approx(560.0));
  CHECK(r.state.phiU0 == doctest::Approx(45.0));
  CHECK(r.finalCost == doctest::Approx(570.0));
  CHECK(r.finalPhi == doctest::Approx(35.0));
  CHECK(r.stopReason == "Absolute");
  CHECK(r.outcome.kind == OutcomeKind::Certificate);
  CHECK(r.monitors.all_ok());
}

TEST_CASE("bundled queueing run de-risks") {
  const auto model = testing::bundled_model("queueing");
  const auto r = run(*model, testing::bundled_config("queueing"));
  CHECK(r.state.nominalCost == doctest::Approx(220.0));
  CHECK(r.state.phiU0 == doctest::Approx(100.0));
  CHECK(r.state.theta == doctest::Approx(0.22));
  CHECK(r.outcome.kind == OutcomeKind::DeRisked);
  CHECK(r.finalPhi <= 0.6 * 100.0);
  CHECK(r.finalCost <= (1.0 + 0.6 * 0.01 / 0.1) * 220.0);
}

TEST_CASE("tMax = 0 returns the nominal point as an iteration limit") {
  const auto model = testing::bundled_model("interdiction");
  RunConfig cfg = testing::bundled_config("interdiction");
  cfg.tMax = 0;
  const auto r = run(*model, cfg);
  CHECK(r.state.history.empty());
  CHECK(r.outcome.kind == OutcomeKind::IterationLimit);
  CHECK(r.finalCost == doctest::Approx(560.0));
  CHECK(r.stopReason == "IterationLimit");
}

TEST_CASE("runs are deterministic") {
  for (const char* name : {"grid9_topk_ball", "concentration"}) {
    const auto model = testing::bundled_model(name);
    const auto cfg = testing::bundled_config(name);
    const auto a = run(*model, cfg);
    const auto b = run(*model, cfg);
    REQUIRE(a.state.history.size() == b.state.history.size());
    for (std::size_t t = 0; t < a.state.history.size(); ++t) CHECK(a.state.history[t].x == b.state.history[t].x);
    CHECK(a.state.master.cuts.size() == b.state.master.cuts.size());
  }
}

TEST_CASE("config validation names the field") {
  RunConfig cfg;
  cfg.deltaRel = 0.0;
  try {
    validate_config(cfg);
    FAIL("expected an error");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).rfind("deltaRel", 0) == 0);
  }
  cfg = RunConfig{};
  cfg.separationKernel = SeparationKernel::SoftmaxClip;
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("clipK"), ModelError);
  cfg = RunConfig{};
  cfg.thetaPolicy.lambdaLo = 0.7;
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("thetaPolicy"), ModelError);
}

TEST_CASE("exact boosting refuses sets it cannot maximize over") {
  const auto model = testing::bundled_model("grid9_topk_ball");
  RunConfig cfg = testing::bundled_config("grid9_topk_ball");
  cfg.boostingKernel = BoostingKernel::Exact;
  CHECK_THROWS_AS(run(*model, cfg), ModelError);
}

TEST_CASE("iterations.csv has one row per master solve") {
  const auto model = testing::bundled_model("interdiction");
  const auto r = run(*model, testing::bundled_config("interdiction"));
  std::ostringstream os;
  write_iterations_csv(os, r.state.history, false);
  const std::string s = os.str();
  CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(r.state.history.size() + 1));
  CHECK(s.rfind("t,cost,phiL,phiMax,exactPhi,cutsAdded,wallMillis\n", 0) == 0);
  CHECK(s.find("\n0,560,0,45,45,1,\n") != std::string::npos);
}

TEST_CASE("format_double round-trips") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(kInf) == "inf");
}
