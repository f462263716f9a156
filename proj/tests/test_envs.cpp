#include "acgm/envs.hpp"

#include <doctest.h>

#include <cmath>

using namespace acgm;

TEST_SUITE_BEGIN("envs");

TEST_CASE("squeeze reward arithmetic") {
  CHECK(cgs_reward(0.0) == 0.0);
  CHECK(cgs_reward(5.0) == doctest::Approx(5.0).epsilon(1e-12));
  // 2.5 e^{-4} - 2.5 e^{-36}
  const double expected = 2.5 * std::exp(-4.0) - 2.5 * std::exp(-36.0);
  CHECK(expected == doctest::Approx(0.0457891).epsilon(1e-5));
  CHECK(cgs_reward(2.5) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("squeeze reward is symmetric in the mobilized resource") {
  // with mirrored bump centers and equal widths, G(-f) = G(f)
  for (double f = -8.0; f <= 8.0; f += 0.25) {
    CHECK(cgs_reward(-f) == doctest::Approx(cgs_reward(f)).epsilon(1e-12));
  }
}

TEST_CASE("squeeze environment stepping") {
  CgsEnv env(10, 10, 42);
  auto obs = env.reset();
  REQUIRE(obs.size() == 10);
  CHECK(obs[0].size() == 2);
  CHECK(obs[3][1] == 0.0);  // normalized time starts at zero

  SUBCASE("all-zero actions give zero reward") {
    const auto r = env.step(std::vector<int>(10, 10));  // index 10 = action 0
    CHECK(r.reward == 0.0);
    CHECK(r.obs[0][1] == doctest::Approx(0.1));
  }

  SUBCASE("pinned resources reach the first bump") {
    env.override_resources(std::vector<double>(10, 0.05));
    env.reset();
    const auto r = env.step(std::vector<int>(10, 20));  // action +10, f = 5
    CHECK(r.reward == doctest::Approx(5.0).epsilon(1e-12));
  }

  SUBCASE("same seed gives identical resources") {
    CgsEnv a(10, 10, 9001), b(10, 10, 9001);
    a.reset();
    b.reset();
    for (int i = 0; i < 10; ++i) CHECK(a.resources()[i] == b.resources()[i]);
    for (double s : a.resources()) {
      CHECK(s >= 0.0);
      CHECK(s <= 0.2);
    }
  }

  SUBCASE("argument and protocol errors") {
    CHECK_THROWS_AS(env.step(std::vector<int>(10, 21)), ArgumentError);
    CHECK_THROWS_AS(env.step(std::vector<int>(3, 0)), ArgumentError);
    for (int t = 0; t < 10; ++t) env.step(std::vector<int>(10, 10));
    CHECK_THROWS_AS(env.step(std::vector<int>(10, 10)), ProtocolError);
  }

  SUBCASE("terminal-only reward mode") {
    CgsEnv term(4, 3, 7, true);
    term.override_resources({0.05, 0.05, 0.05, 0.05});
    term.reset();
    CHECK(term.step(std::vector<int>(4, 20)).reward == 0.0);
    CHECK(term.step(std::vector<int>(4, 20)).reward == 0.0);
    const auto last = term.step(std::vector<int>(4, 20));
    CHECK(last.done);
    CHECK(last.reward != 0.0);
  }
}

TEST_CASE("navigation environment") {
  SUBCASE("agents on distinct landmarks give zero reward") {
    NavEnv env(2, 25, 3);
    env.reset();
    env.place_agents({{0.5, 0.5}, {-0.5, -0.5}});
    env.place_landmarks({{0.5, 0.5}, {-0.5, -0.5}});
    const auto r = env.step({4, 4});  // both stop
    CHECK(r.reward == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("single agent, single landmark distance") {
    NavEnv env(1, 25, 3);
    env.reset();
    env.place_agents({{0.0, 0.0}});
    env.place_landmarks({{0.3, 0.4}});
    CHECK(env.step({4}).reward == doctest::Approx(-0.5).epsilon(1e-12));
  }

  SUBCASE("coinciding agents collide") {
    NavEnv env(2, 25, 3);
    env.reset();
    env.place_agents({{0.2, 0.2}, {0.2, 0.2}});
    env.place_landmarks({{0.2, 0.2}, {0.2, 0.2}});
    CHECK(env.step({4, 4}).reward == doctest::Approx(-1.0).epsilon(1e-12));
  }

  SUBCASE("reward is never positive and moves are clamped to the arena") {
    NavEnv env(3, 25, 17);
    Rng rng(5);
    env.reset();
    for (int t = 0; t < 25; ++t) {
      std::vector<int> acts(3);
      for (auto& a : acts) a = rng.uniform_int(5);
      const auto r = env.step(acts);
      CHECK(r.reward <= 0.0);
      for (const auto& o : r.obs) {
        CHECK(std::abs(o[0]) <= 1.0);
        CHECK(std::abs(o[1]) <= 1.0);
      }
      if (r.done) break;
    }
  }

  SUBCASE("observation width is constant") {
    NavEnv env(4, 25, 1);
    const auto obs = env.reset();
    for (const auto& o : obs) CHECK(o.size() == env.obs_dim());
    CHECK(env.obs_dim() == 16);  // 2 + 2*4 + 2*3
  }
}

TEST_CASE("signalling game") {
  CoordGameEnv env(5);

  SUBCASE("reward requires matching the hidden bit and each other") {
    for (int t = 0; t < 20; ++t) {
      env.reset();
      const int z = env.hidden_target();
      CHECK(env.step({z, z}).reward == 1.0);
      env.reset();
      const int z2 = env.hidden_target();
      CHECK(env.step({z2, 1 - z2}).reward == 0.0);
    }
  }

  SUBCASE("only the first agent observes the bit") {
    const auto obs = env.reset();
    CHECK(obs[0][0] == (env.hidden_target() == 0 ? -1.0 : 1.0));
    CHECK(obs[1][0] == 0.0);
  }

  SUBCASE("independent policies cannot beat one half") {
    // E[r] = 0.5 [(1-p0)(1-q) + p1 q] over p0 = P(u0=1|z=0), p1 = P(u0=1|z=1),
    // q = P(u1=1); grid search over the full cube
    double best = 0.0;
    for (double p0 = 0.0; p0 <= 1.0; p0 += 0.05) {
      for (double p1 = 0.0; p1 <= 1.0; p1 += 0.05) {
        for (double q = 0.0; q <= 1.0; q += 0.05) {
          best = std::max(best, 0.5 * ((1 - p0) * (1 - q) + p1 * q));
        }
      }
    }
    CHECK(best == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(best <= 0.6);
  }

  SUBCASE("deterministic given the seed") {
    CoordGameEnv a(77), b(77);
    for (int t = 0; t < 30; ++t) {
      a.reset();
      b.reset();
      CHECK(a.hidden_target() == b.hidden_target());
    }
  }
}

TEST_SUITE_END();
