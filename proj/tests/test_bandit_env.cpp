#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <vector>

#include "byzbandit/bandit_env.hpp"

using namespace byzbandit;

namespace {

bool bits_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

EnvironmentSpec base_spec() {
  EnvironmentSpec s;
  s.d = 2;
  s.agents = 3;
  s.horizon = 100;
  s.theta_star = Vector(2);
  s.theta_star << 0.6, 0.3;
  s.noise_r = 0.1;
  s.noise_family = NoiseFamily::Uniform;
  s.set_family = SetFamily::Shared;
  s.arms_per_set = 4;
  return s;
}

}  // namespace

TEST_CASE("noise_range per family") {
  REQUIRE_THAT(noise_range(NoiseFamily::Uniform, 2.0),
               Catch::Matchers::WithinRel(2.0 * std::sqrt(3.0), 1e-15));
  REQUIRE(noise_range(NoiseFamily::TruncatedGaussian, 2.0) == 6.0);
}

TEST_CASE("scale_theta_for_clip shrinks only when needed") {
  Vector small(2);
  small << 0.1, 0.2;
  const Vector kept = scale_theta_for_clip(small, NoiseFamily::Uniform, 0.1);
  REQUIRE(bits_equal(kept, small));

  Vector big(2);
  big << 1.0, 1.0;
  const Vector scaled = scale_theta_for_clip(big, NoiseFamily::Uniform, 0.1);
  const double budget = 1.0 - std::sqrt(3.0) * 0.1;
  REQUIRE_THAT(scaled.norm(), Catch::Matchers::WithinRel(budget, 1e-12));
  REQUIRE_THAT(scaled[0], Catch::Matchers::WithinRel(scaled[1], 1e-12));

  // Noise range at or above 1 leaves no room for any signal.
  REQUIRE_THROWS_AS(scale_theta_for_clip(big, NoiseFamily::Uniform, 0.6), ConfigError);
  REQUIRE_THROWS_AS(scale_theta_for_clip(big, NoiseFamily::TruncatedGaussian, 0.34),
                    ConfigError);
}

TEST_CASE("Environment construction validates its spec") {
  EnvironmentSpec s = base_spec();
  REQUIRE_NOTHROW(Environment(s, 1));

  s = base_spec();
  s.d = 0;
  REQUIRE_THROWS_AS(Environment(s, 1), ConfigError);

  s = base_spec();
  s.theta_star = Vector(3);
  s.theta_star << 1, 0, 0;
  REQUIRE_THROWS_AS(Environment(s, 1), ConfigError);

  s = base_spec();
  s.theta_star << 1.5, 1.5;  // norm > sqrt(2)
  REQUIRE_THROWS_AS(Environment(s, 1), ConfigError);

  s = base_spec();
  s.arm_concentration = 1.0;
  REQUIRE_THROWS_AS(Environment(s, 1), ConfigError);

  s = base_spec();
  s.arms_per_set = 0;
  REQUIRE_THROWS_AS(Environment(s, 1), ConfigError);
}

TEST_CASE("optimal_value picks the best arm under the true parameter") {
  DecisionSet set;
  Vector a(2), b(2), c(2);
  a << 1, 0;
  b << 0, 1;
  c << -1, 0;
  set.arms = {a, b, c};
  Vector theta(2);
  theta << 0.3, 0.9;
  REQUIRE(optimal_value(set, theta) == 0.9);
}

TEST_CASE("reward clamps only in clip mode") {
  EnvironmentSpec s = base_spec();
  Vector x(2);
  x << 1, 1;  // <x, theta*> = 0.9
  s.reward_clip = false;
  REQUIRE_THAT(reward(x, s, 0.5), Catch::Matchers::WithinAbs(1.4, 1e-15));
  s.reward_clip = true;
  REQUIRE(reward(x, s, 0.5) == 1.0);
  REQUIRE(reward(x, s, -2.5) == -1.0);
}

TEST_CASE("shared sets are identical across agents; arms are unit norm") {
  Environment env(base_spec(), 7);
  for (long t = 1; t <= 10; ++t) {
    const RoundDraw round = env.sample_round(t);
    REQUIRE(round.sets.size() == 3);
    REQUIRE(round.noises.size() == 3);
    for (const DecisionSet& s : round.sets) {
      REQUIRE(s.arms.size() == 4);
      for (std::size_t a = 0; a < s.arms.size(); ++a) {
        REQUIRE_THAT(s.arms[a].norm(), Catch::Matchers::WithinAbs(1.0, 1e-12));
        REQUIRE(bits_equal(s.arms[a], round.sets[0].arms[a]));
      }
    }
  }
}

TEST_CASE("rotated sets share their Gram matrix across agents") {
  EnvironmentSpec s = base_spec();
  s.set_family = SetFamily::IidRotations;
  Environment env(s, 11);
  const RoundDraw round = env.sample_round(1);
  bool any_difference = false;
  for (int agent = 1; agent < 3; ++agent) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        const double g0 = round.sets[0].arms[static_cast<std::size_t>(i)].dot(
            round.sets[0].arms[static_cast<std::size_t>(j)]);
        const double ga = round.sets[static_cast<std::size_t>(agent)]
                              .arms[static_cast<std::size_t>(i)]
                              .dot(round.sets[static_cast<std::size_t>(agent)]
                                       .arms[static_cast<std::size_t>(j)]);
        REQUIRE_THAT(ga, Catch::Matchers::WithinAbs(g0, 1e-9));
      }
      any_difference =
          any_difference ||
          !bits_equal(round.sets[0].arms[static_cast<std::size_t>(i)],
                      round.sets[1].arms[static_cast<std::size_t>(i)]);
    }
  }
  REQUIRE(any_difference);
}

TEST_CASE("resampled sets differ across agents") {
  EnvironmentSpec s = base_spec();
  s.set_family = SetFamily::IidResample;
  Environment env(s, 13);
  const RoundDraw round = env.sample_round(1);
  REQUIRE_FALSE(bits_equal(round.sets[0].arms[0], round.sets[1].arms[0]));
}

TEST_CASE("noise draws respect the family support") {
  EnvironmentSpec s = base_spec();
  s.agents = 1;
  s.noise_r = 0.5;

  s.noise_family = NoiseFamily::Uniform;
  Environment uni(s, 3);
  double sumsq = 0.0;
  const int n = 4000;
  for (int t = 1; t <= n; ++t) {
    const double eta = uni.sample_round(t).noises[0];
    REQUIRE(std::abs(eta) <= std::sqrt(3.0) * 0.5 + 1e-12);
    sumsq += eta * eta;
  }
  // Variance of the uniform family is exactly R^2.
  const double sd = std::sqrt(sumsq / n);
  REQUIRE(sd > 0.45);
  REQUIRE(sd < 0.55);

  s.noise_family = NoiseFamily::TruncatedGaussian;
  Environment tg(s, 4);
  for (int t = 1; t <= 2000; ++t) {
    REQUIRE(std::abs(tg.sample_round(t).noises[0]) <= 1.5);
  }

  s.noise_r = 0.0;
  Environment silent(s, 5);
  for (int t = 1; t <= 50; ++t) REQUIRE(silent.sample_round(t).noises[0] == 0.0);
}

TEST_CASE("environments are deterministic in the seed") {
  Environment a(base_spec(), 21), b(base_spec(), 21), c(base_spec(), 22);
  bool differs = false;
  for (long t = 1; t <= 5; ++t) {
    const RoundDraw ra = a.sample_round(t), rb = b.sample_round(t), rc = c.sample_round(t);
    for (int i = 0; i < 3; ++i) {
      REQUIRE(ra.noises[static_cast<std::size_t>(i)] == rb.noises[static_cast<std::size_t>(i)]);
      differs = differs || ra.noises[static_cast<std::size_t>(i)] !=
                               rc.noises[static_cast<std::size_t>(i)];
      for (int arm = 0; arm < 4; ++arm) {
        REQUIRE(bits_equal(ra.sets[static_cast<std::size_t>(i)].arms[static_cast<std::size_t>(arm)],
                           rb.sets[static_cast<std::size_t>(i)].arms[static_cast<std::size_t>(arm)]));
      }
    }
  }
  REQUIRE(differs);
}

TEST_CASE("drift re-randomizes the concentration center at its change points") {
  EnvironmentSpec plain = base_spec();
  plain.arm_concentration = 0.8;
  EnvironmentSpec drifting = plain;
  drifting.drift_steps = {50};

  Environment a(plain, 33), b(drifting, 33);
  for (long t = 1; t < 50; ++t) {
    const RoundDraw ra = a.sample_round(t), rb = b.sample_round(t);
    REQUIRE(bits_equal(ra.sets[0].arms[0], rb.sets[0].arms[0]));
  }
  // At the change point the drifting stream consumes a fresh center and the
  // sequences part ways.
  const RoundDraw ra = a.sample_round(50), rb = b.sample_round(50);
  REQUIRE_FALSE(bits_equal(ra.sets[0].arms[0], rb.sets[0].arms[0]));
}

TEST_CASE("arm concentration pulls arms toward a common direction") {
  EnvironmentSpec s = base_spec();
  s.arm_concentration = 0.95;
  Environment env(s, 44);
  const RoundDraw round = env.sample_round(1);
  // With kappa = 0.95 all arms hug the drift center, so pairwise dots are
  // close to one.
  for (std::size_t i = 1; i < 4; ++i) {
    REQUIRE(round.sets[0].arms[0].dot(round.sets[0].arms[i]) > 0.8);
  }
}

TEST_CASE("empirical_sigma is zero for shared sets") {
  EnvironmentSpec s = base_spec();
  REQUIRE(empirical_sigma(s, 50, 9) == 0.0);
}

TEST_CASE("empirical_sigma matches the rank-one circle radius in 2-D") {
  // With theta* = 0 every agent greedily picks its first arm, a uniform
  // direction. In d = 2 each outer product sits on a circle of radius
  // sqrt(1/2) around I/2, so the worst deviation from the cross-agent mean
  // concentrates near that radius for many agents.
  EnvironmentSpec s;
  s.d = 2;
  s.agents = 20;
  s.horizon = 1000;
  s.theta_star = Vector::Zero(2);
  s.noise_r = 0.0;
  s.set_family = SetFamily::IidResample;
  s.arms_per_set = 2;
  const double est = empirical_sigma(s, 100, 77);
  REQUIRE(est > 0.65);
  REQUIRE(est < 1.1);
  REQUIRE(est <= 2.0);
  REQUIRE(empirical_sigma(s, 100, 77) == est);
  REQUIRE_THROWS_AS(empirical_sigma(s, 0, 77), ConfigError);
}
