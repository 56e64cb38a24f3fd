#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "infoepi/model.hpp"
#include "test_support.hpp"

using namespace infoepi;
using test_support::default_params;
using test_support::random_simplex;
using test_support::random_simplex_exact;

TEST_CASE("params validation") {
  Params p = default_params();
  REQUIRE_NOTHROW(p.validate());
  p.K = 1.2;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  p.K = 0.9;
  p.b1 = -0.1;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  p.b1 = 1.5;
  p.epsilon = 0.0;
  REQUIRE_THROWS_AS(p.validate(), std::invalid_argument);
  REQUIRE_NOTHROW(p.validate(/*allow_zero_epsilon=*/true));
  p.epsilon = 1.5;
  REQUIRE_THROWS_AS(p.validate(true), std::invalid_argument);
}

TEST_CASE("feedback_b2 closed form") {
  Params p = default_params();
  p.K = 0.0;
  REQUIRE(feedback_b2(p, 0.7) == 0.9);  // no feedback when K = 0
  p.K = 0.9;
  REQUIRE(feedback_b2(p, 0.0) == 0.9);
  // 0.9/0.82 = 45/41, cross-checked in extended precision.
  const double expected = static_cast<double>(0.9L / 0.82L);
  REQUIRE(feedback_b2(p, 0.2) == Catch::Approx(45.0 / 41.0).margin(1e-15));
  REQUIRE(feedback_b2(p, 0.2) == Catch::Approx(expected).margin(1e-15));
  REQUIRE_THROWS_AS(feedback_b2(p, 1.2), std::domain_error);  // K*I >= 1
}

TEST_CASE("feedback_b2 monotone in I") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Params p = default_params();
  for (int i = 0; i < 200; ++i) {
    p.K = 0.95 * uni(gen);
    double a = uni(gen), b = uni(gen);
    if (a > b) std::swap(a, b);
    REQUIRE(feedback_b2(p, a) <= feedback_b2(p, b) + 1e-15);
  }
}

TEST_CASE("effective_beta closed form and monotonicity") {
  Params p = default_params();
  REQUIRE(effective_beta(p, 0.0, 0.0) == 6.0);
  REQUIRE(effective_beta(p, 1.0 / 3.0, 0.0) == Catch::Approx(8.0).margin(1e-12));
  REQUIRE(effective_beta(p, 0.0, 0.5) == Catch::Approx(4.0).margin(1e-15));

  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double m1 = uni(gen), m2 = m1 + uni(gen), z = uni(gen);
    REQUIRE(effective_beta(p, m1, z) < effective_beta(p, m2, z) + 1e-15);
    const double z1 = uni(gen), z2 = z1 + uni(gen) + 1e-6, m = uni(gen);
    REQUIRE(effective_beta(p, m, z2) < effective_beta(p, m, z1));
  }
}

TEST_CASE("fast_rhs fixed points and probe point") {
  Params p = default_params();
  SECTION("free state is an equilibrium for any I") {
    for (double I : {0.0, 0.3, 1.0}) {
      const auto d = fast_rhs(p, {1.0, 0.0, 0.0}, I);
      REQUIRE(d[0] == 0.0);
      REQUIRE(d[1] == 0.0);
      REQUIRE(d[2] == 0.0);
    }
  }
  SECTION("skeptical-free equilibrium zeroes the field") {
    const auto d = fast_rhs(p, {2.0 / 3.0, 1.0 / 3.0, 0.0}, 0.37);
    REQUIRE(std::abs(d[0]) < 1e-15);
    REQUIRE(std::abs(d[1]) < 1e-15);
    REQUIRE(std::abs(d[2]) < 1e-15);
  }
  SECTION("raw field at an off-simplex probe point") {
    const auto d = fast_rhs(p, {1.0, 0.1, 0.0}, 0.0);
    REQUIRE(d[0] == Catch::Approx(-0.15).margin(1e-15));
    REQUIRE(d[1] == Catch::Approx(0.05).margin(1e-15));
    REQUIRE(d[2] == 0.0);
  }
}

TEST_CASE("slow_rhs fixed points and probe point") {
  Params p = default_params();
  SECTION("disease-free state") {
    const auto d = slow_rhs(p, {1.0, 0.0, 0.0}, 0.0, 0.0);
    REQUIRE(d[0] == 0.0);
    REQUIRE(d[1] == 0.0);
    REQUIRE(d[2] == 0.0);
  }
  SECTION("endemic state, rounded coordinates") {
    const auto d = slow_rhs(p, {0.3, 0.40213, 0.29787}, 0.0, 0.0);
    for (double v : d) REQUIRE(std::abs(v) < 1e-5);
  }
  SECTION("endemic state, full precision") {
    const auto d = slow_rhs(p, {0.3, 0.4021276595744681, 0.2978723404255319}, 0.0, 0.0);
    for (double v : d) REQUIRE(std::abs(v) < 1e-15);
  }
  SECTION("probe point") {
    const auto d = slow_rhs(p, {0.8, 0.2, 0.0}, 0.0, 0.0);
    REQUIRE(d[0] == Catch::Approx(-0.76).margin(1e-15));
    REQUIRE(d[1] == Catch::Approx(0.6).margin(1e-15));
    REQUIRE(d[2] == Catch::Approx(0.16).margin(1e-15));
  }
}

TEST_CASE("conservation: components sum to zero on the simplex") {
  std::mt19937_64 gen(13);
  for (int i = 0; i < 500; ++i) {
    const Params p = test_support::random_params(gen);
    const FastState f = random_simplex_exact(gen);
    const auto df = fast_rhs(p, f, 0.4);
    const double scale = p.mu1 + p.b1 + p.b2 + 1.0;
    REQUIRE(std::abs(df[0] + df[1] + df[2]) < 1e-14 * scale);

    const FastState g = random_simplex_exact(gen);
    const SlowState s{g.U, g.M, g.Z};
    const auto ds = slow_rhs(p, s, 0.2, 0.3);
    REQUIRE(std::abs(ds[0] + ds[1] + ds[2]) < 1e-14 * (p.mu2 + p.beta + p.gamma + p.eta + 1.0));
  }
}

TEST_CASE("positivity barrier at zero components") {
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Params p = default_params();
  for (int i = 0; i < 200; ++i) {
    const double a = uni(gen), b = uni(gen) * (1.0 - a);
    REQUIRE(fast_rhs(p, {0.0, a, b}, uni(gen))[0] >= 0.0);
    REQUIRE(fast_rhs(p, {a, 0.0, b}, uni(gen))[1] >= 0.0);
    REQUIRE(fast_rhs(p, {a, b, 0.0}, uni(gen))[2] >= 0.0);
    REQUIRE(slow_rhs(p, {0.0, a, b}, uni(gen), uni(gen))[0] >= 0.0);
    REQUIRE(slow_rhs(p, {a, 0.0, b}, uni(gen), uni(gen))[1] >= 0.0);
    REQUIRE(slow_rhs(p, {a, b, 0.0}, uni(gen), uni(gen))[2] >= 0.0);
  }
}

TEST_CASE("full_rhs reduction consistency") {
  std::mt19937_64 gen(15);
  SECTION("layer problem: zero slow block at epsilon = 0") {
    Params p = default_params();
    p.epsilon = 0.0;
    for (int i = 0; i < 100; ++i) {
      const FastState f = random_simplex(gen);
      const FastState s3 = random_simplex(gen);
      const FullState s{f, {s3.U, s3.M, s3.Z}};
      const auto d = full_rhs(p, s);
      REQUIRE(d[3] == 0.0);
      REQUIRE(d[4] == 0.0);
      REQUIRE(d[5] == 0.0);
    }
  }
  SECTION("fast block depends on the slow variables only through I") {
    const Params p = default_params();
    for (int i = 0; i < 100; ++i) {
      const FastState f = random_simplex(gen);
      const double I = 0.25;
      const FullState a{f, {0.7, I, 0.05}};
      const FullState b{f, {0.1, I, 0.65}};
      const auto da = full_rhs(p, a);
      const auto db = full_rhs(p, b);
      REQUIRE(da[0] == db[0]);
      REQUIRE(da[1] == db[1]);
      REQUIRE(da[2] == db[2]);
    }
  }
  SECTION("slow block carries the factor epsilon") {
    Params p = default_params();
    const FullState s{{0.6, 0.3, 0.1}, {0.5, 0.3, 0.2}};
    const auto d = full_rhs(p, s);
    const auto g = slow_rhs(p, s.slow, s.fast.M, s.fast.Z);
    for (int i = 0; i < 3; ++i) REQUIRE(d[3 + i] == p.epsilon * g[i]);
  }
}
