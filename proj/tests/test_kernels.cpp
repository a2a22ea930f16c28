#include <doctest.h>

#include "support.hpp"

#include <cmath>

using namespace derisk;

namespace {

long double reference_lse(double alpha, const Vector& y) {
  long double m = -INFINITY;
  for (Eigen::Index i = 0; i < y.size(); ++i) m = std::max<long double>(m, static_cast<long double>(alpha) * y[i]);
  long double s = 0.0L;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += std::exp(static_cast<long double>(alpha) * y[i] - m);
  return m + std::log(s);
}

Vector random_vector(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

Vector nominal_x(const std::string& name) {
  const auto model = testing::bundled_model(name);
  RunConfig cfg = testing::bundled_config(name);
  cfg.tMax = 1;
  return run(*model, cfg).state.nominalX;
}

}  // namespace

TEST_CASE("log_sum_exp matches a long double reference and never overflows") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + static_cast<int>(rng() % 40);
    const Vector y = random_vector(rng, n, 1e3);
    for (double alpha : {1e-6, 0.5, 7.0, 50.0}) {
      const double v = log_sum_exp(alpha, y);
      REQUIRE(std::isfinite(v));
      const long double ref = reference_lse(alpha, y);
      CHECK(std::abs(v - static_cast<double>(ref)) <= 1e-12 * std::max(1.0, std::abs(static_cast<double>(ref))));
    }
  }
  CHECK_THROWS_AS(log_sum_exp(1.0, Vector()), ModelError);
}

TEST_CASE("log_sum_exp sandwiches the maximum") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 300; ++k) {
    const int n = 1 + static_cast<int>(rng() % 30);
    const Vector y = random_vector(rng, n, 100.0);
    const double alpha = std::exp(std::uniform_real_distribution<double>(-5.0, 3.0)(rng));
    const double lse = log_sum_exp(alpha, y) / alpha;
    CHECK(lse >= y.maxCoeff() - 1e-12 * y.maxCoeff());
    CHECK(lse <= y.maxCoeff() + std::log(static_cast<double>(n)) / alpha + 1e-9);
  }
}

TEST_CASE("softmax examples") {
  Vector y(2);
  y << 1, 1;
  auto s = softmax(3.0, y);
  CHECK(s.pi[0] == doctest::Approx(0.5));
  CHECK(s.supportSize == 2);
  y << 1, 0;
  s = softmax(std::log(3.0), y);
  CHECK(s.pi[0] == doctest::Approx(0.75));
  CHECK(s.pi[1] == doctest::Approx(0.25));
  Vector big(3);
  big << 1e6, 1e6 - 1, 0;
  s = softmax(1.0, big);
  CHECK(s.pi[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(s.pi[2] == 0.0);
  CHECK_THROWS(softmax(0.0, y));
}

TEST_CASE("softmax is a distribution that preserves order") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + static_cast<int>(rng() % 20);
    const Vector y = random_vector(rng, n, 50.0);
    const auto s = softmax(0.3, y);
    CHECK(s.pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((s.pi.array() >= 0.0).all());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (y[i] > y[j]) CHECK(s.pi[i] >= s.pi[j]);
      }
    }
  }
}

TEST_CASE("greedy separation is the lowest-index indicator") {
  Vector y(4);
  y << 2, 5, 5, 1;
  const auto g = greedy_separation(y);
  CHECK(g.pi[1] == 1.0);
  CHECK(g.pi.sum() == 1.0);
  CHECK(g.supportSize == 1);
}

TEST_CASE("clip keeps the K largest and is idempotent") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + static_cast<int>(rng() % 15);
    const auto s = softmax(0.2, random_vector(rng, n, 20.0));
    const int K = 1 + static_cast<int>(rng() % n);
    const auto c = clip(s, K);
    CHECK(c.supportSize <= K);
    CHECK(c.pi.sum() == doctest::Approx(1.0));
    const auto c2 = clip(c, K);
    CHECK((c2.pi - c.pi).cwiseAbs().maxCoeff() <= 1e-15);
    // kept weights keep their ratios
    const auto top = top_indices(s.pi, K);
    for (auto i : top) CHECK(c.pi[i] == doctest::Approx(s.pi[i] / s.pi(top).sum()));
  }
  SeparationResult tie{Vector::Constant(4, 0.25), 4};
  const auto c = clip(tie, 2);
  CHECK(c.pi[0] == 0.5);
  CHECK(c.pi[1] == 0.5);
  CHECK_THROWS(clip(tie, 0));
}

TEST_CASE("drop_small keeps the largest weight") {
  Vector p(3);
  p << 0.5, 0.4999999, 1e-7;
  const auto d = drop_small({p, 3}, 1e-6);
  CHECK(d.supportSize == 2);
  CHECK(d.pi.sum() == doctest::Approx(1.0));
  Vector q = Vector::Constant(3, 1.0 / 3.0);
  CHECK(drop_small({q, 3}, 0.5).supportSize == 1);
}

TEST_CASE("flatten is nonnegative and order preserving") {
  Vector v(4);
  v << 0.0, 1e-3, 1.0, 100.0;
  const Vector f = flatten(v, 1e-3);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
  CHECK(f[2] == doctest::Approx(std::log(1000.0)));
  CHECK(f[3] == doctest::Approx(std::log(1e5)));
  CHECK(default_flatten_floor(v) == doctest::Approx(1e-4));
  CHECK(default_flatten_floor(Vector::Zero(2)) == 1e-6);
  CHECK_THROWS(flatten(v, 0.0));
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const Vector y = random_vector(rng, 10, 10.0);
    const Vector fy = flatten(y, default_flatten_floor(y));
    for (int i = 0; i < 10; ++i) {
      CHECK(fy[i] >= 0.0);
      for (int j = 0; j < 10; ++j) {
        if (y[i] > y[j]) CHECK(fy[i] > fy[j]);
      }
    }
  }
}

TEST_CASE("greedy boost on the interdiction nominal attains Phi = 45") {
  const auto model = testing::bundled_model("interdiction");
  const Vector x = nominal_x("interdiction");
  const auto g = greedy_boost(*model, x, 1.0);
  CHECK(g.eval.phiMax == doctest::Approx(45.0));
  CHECK(model->exact_phi(x).phi == doctest::Approx(45.0));
  CHECK(g.attainsMax);
  // exact LSE boosting may pick another scenario but never one with a lower LSE
  const auto e = exact_boost(*model, x, 1.0);
  CHECK(e.exactLse);
  CHECK(e.lseValue >= g.lseValue - 1e-12);
}

TEST_CASE("exact boosting over a finite set maximizes the LSE") {
  const auto model = testing::bundled_model("interdiction");
  const auto samples = testing::sample_feasible(*model, 10, 6);
  for (const auto& x : samples) {
    for (double alpha : {0.05, 1.0, 10.0}) {
      const auto e = exact_boost(*model, x, alpha);
      for (const auto& z : model->scenarios()) {
        CHECK(log_sum_exp(alpha, model->evaluate(x, z).values) <= e.lseValue + 1e-12 * std::abs(e.lseValue));
      }
    }
  }
}

TEST_CASE("budget top-N boosting beats every vertex of the budget set and random interior points") {
  const auto model = testing::bundled_model("grid9_budget");
  const int N = model->budget();
  const auto samples = testing::sample_feasible(*model, 6, 7);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& x : samples) {
    const double alpha = 0.05;
    const auto b = budget_topN_boost(*model, x, N, alpha);
    CHECK(b.exactLse);
    CHECK(b.eval.phiMax == doctest::Approx(model->exact_phi(x).phi).epsilon(1e-12));
    const int n = static_cast<int>(model->base_values(x).size());
    for (unsigned mask = 0; mask < (1U << n); ++mask) {
      if (std::popcount(mask) > N) continue;
      ScenarioVector z;
      for (int i = 0; i < n; ++i) z.entries[i] = (mask >> i) & 1U ? 1.0 : 0.0;
      REQUIRE(model->contains(z));
      CHECK(log_sum_exp(alpha, model->evaluate(x, z).values) <= b.lseValue + 1e-12 * std::abs(b.lseValue));
    }
    for (int k = 0; k < 200; ++k) {
      Vector z(n);
      for (int i = 0; i < n; ++i) z[i] = u(rng);
      if (z.sum() > N) z *= N / z.sum();
      const auto zs = to_scenario(z);
      REQUIRE(model->contains(zs));
      CHECK(log_sum_exp(alpha, model->evaluate(x, zs).values) <= b.lseValue + 1e-12 * std::abs(b.lseValue));
    }
  }
}

TEST_CASE("ball scenario attains Phi against Monte Carlo points of the ball") {
  const auto model = testing::bundled_model("grid9_topk_ball");
  const auto samples = testing::sample_feasible(*model, 6, 8);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& x : samples) {
    const double phi = model->exact_phi(x).phi;
    const auto b = ball_boost(*model, x, model->tuple_size(), 1e-3);
    CHECK(b.attainsMax);
    CHECK(b.eval.phiMax == doctest::Approx(phi).epsilon(1e-12));
    const auto n = model->base_values(x).size();
    for (int k = 0; k < 300; ++k) {
      Vector z(n);
      for (Eigen::Index i = 0; i < n; ++i) z[i] = std::abs(g(rng));
      z *= std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(rng), 1.0 / n) / z.norm();
      const auto zs = to_scenario(z);
      REQUIRE(model->contains(zs));
      CHECK(model->evaluate(x, zs).phiMax <= phi * (1.0 + 1e-12));
    }
  }
  bool zero = false;
  CHECK(ball_scenario(Vector::Zero(3), 2, &zero).isZero());
  CHECK(zero);
}

TEST_CASE("budget top-N scenario example") {
  Vector base(5);
  base << 3, 9, 9, 1, 4;
  Vector z = budget_topN_scenario(base, 2);
  Vector expect(5);
  expect << 0, 1, 1, 0, 0;
  CHECK(z == expect);
  z = budget_topN_scenario(base, 9);
  CHECK(z.sum() == 5.0);
  CHECK_THROWS(budget_topN_scenario(base, 0));
}

TEST_CASE("synthetic objective value, gradient and barrier") {
  Vector phi(3);
  phi << 1.0, 0.5, 0.0;
  const Vector epsI = Vector::Ones(3);
  const auto f = build_synthetic_objective(phi, 2.0, 1.0, 1.0, epsI);
  const Vector zero = Vector::Zero(3);
  // exp(2) + exp(1) + 1 + ln 1 + 0
  CHECK(*f.value(zero) == doctest::Approx(std::exp(2.0) + std::exp(1.0) + 1.0).epsilon(1e-14));

  Vector z(3);
  z << 0.2, -0.1, 0.3;
  const Vector grad = f.gradient(z);
  for (int i = 0; i < 3; ++i) {
    const double h = 1e-6;
    Vector zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    const double fd = (*f.value(zp) - *f.value(zm)) / (2 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
  }

  Vector out(3);
  out << 0.5, 0.5, 0.0;  // sum reaches Gamma
  CHECK(!f.in_domain(out));
  CHECK(!f.value(out).has_value());
  CHECK_THROWS(f.gradient(out));
  out << 1.0, -2.0, 0.0;  // z_0 reaches 1
  CHECK(!f.value(out).has_value());
  // the barrier pushes the value down near the boundary
  Vector near(3);
  near << 0.0, -0.5, 1.0 - 1e-9;
  CHECK(*f.value(near) < *f.value(zero) - 10.0);
  CHECK_THROWS(build_synthetic_objective(phi, 1.0, 0.0, 1.0, epsI));
  CHECK_THROWS(build_synthetic_objective(phi, 1.0, 1.0, 1.0, Vector::Ones(2)));
}

TEST_CASE("top_indices breaks ties toward the lowest index") {
  Vector v(5);
  v << 1, 4, 4, 2, 4;
  const auto t = top_indices(v, 3);
  CHECK(t == std::vector<Eigen::Index>{1, 2, 4});
  CHECK(top_indices(v, 9).size() == 5);
}
