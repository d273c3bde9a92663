// Stochastic linear bandit environment shared by N agents: per-step decision
// sets (shared, rotated, or independently resampled across agents), bounded
// sub-Gaussian reward noise, and the empirical estimator for the cross-agent
// decision-set variability sigma.
//
// Noise families and their sub-Gaussian scale R:
//   uniform: U[-R sqrt(3), R sqrt(3)] has variance R^2 and is exactly
//     R-sub-Gaussian (E exp(tX) = sinh(t R sqrt(3)) / (t R sqrt(3))
//     <= exp(t^2 R^2 / 2), via (2n+1)! >= 6^n n!).
//   truncated-gaussian: N(0, R^2) conditioned on |X| <= 3R; conditioning a
//     centered Gaussian on a symmetric interval only shrinks E cosh(tX), so
//     the R-sub-Gaussian bound of the parent distribution carries over.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "byzbandit/errors.hpp"
#include "byzbandit/linalg.hpp"
#include "byzbandit/rng.hpp"

namespace byzbandit {

enum class NoiseFamily { TruncatedGaussian, Uniform };
enum class SetFamily { Shared, IidRotations, IidResample };

struct EnvironmentSpec {
  int d = 1;
  int agents = 1;
  long horizon = 1;          // padded horizon K * L
  Vector theta_star;         // effective parameter; ||theta*|| <= sqrt(d)
  double noise_r = 0.0;      // sub-Gaussian scale R
  NoiseFamily noise_family = NoiseFamily::TruncatedGaussian;
  SetFamily set_family = SetFamily::Shared;
  int arms_per_set = 2;
  bool reward_clip = false;  // clip realized rewards to [-1, 1] (privacy mode)
  double arm_concentration = 0.0;  // kappa in [0, 1): pull arms toward a drift center
  std::vector<long> drift_steps;   // steps at which the drift center re-randomizes
};

// Worst-case width of the noise support, used by the privacy-mode scaling of
// theta* so that |<x, theta*>| + noise never leaves [-1, 1].
inline double noise_range(NoiseFamily family, double noise_r) {
  return family == NoiseFamily::Uniform ? std::sqrt(3.0) * noise_r : 3.0 * noise_r;
}

// In privacy mode rewards must be honestly bounded by 1 before clipping:
// scale theta* down so max |<x, theta*>| + noise range <= 1.
inline Vector scale_theta_for_clip(const Vector& theta, NoiseFamily family, double noise_r) {
  const double range = noise_range(family, noise_r);
  if (range >= 1.0) {
    throw ConfigError("reward_clip: noise range >= 1 leaves no signal budget");
  }
  const double norm = theta.norm();
  if (norm <= 1.0 - range) return theta;
  return theta * ((1.0 - range) / norm);
}

struct DecisionSet {
  std::vector<Vector> arms;  // each ||x|| <= 1
};

struct RoundDraw {
  std::vector<DecisionSet> sets;  // one per agent
  std::vector<double> noises;     // one per agent
};

inline double optimal_value(const DecisionSet& set, const Vector& theta) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Vector& x : set.arms) best = std::max(best, x.dot(theta));
  return best;
}

inline double reward(const Vector& x, const EnvironmentSpec& spec, double eta) {
  double r = x.dot(spec.theta_star) + eta;
  if (spec.reward_clip) r = std::clamp(r, -1.0, 1.0);
  return r;
}

// Environment with its own random stream. Draw order per step is fixed
// (noise per agent, then sets per the family) so runs that differ only in
// aggregation or schedule consume identical randomness.
class Environment {
 public:
  Environment(EnvironmentSpec spec, std::uint64_t seed)
      : spec_(std::move(spec)), rng_(seed) {
    if (spec_.d < 1 || spec_.agents < 1 || spec_.arms_per_set < 1) {
      throw ConfigError("Environment: d, agents, arms_per_set must be >= 1");
    }
    if (spec_.theta_star.size() != spec_.d) {
      throw ConfigError("Environment: theta_star dimension mismatch");
    }
    if (spec_.theta_star.norm() > std::sqrt(static_cast<double>(spec_.d)) + 1e-12) {
      throw ConfigError("Environment: ||theta_star|| exceeds sqrt(d)");
    }
    if (spec_.arm_concentration < 0.0 || spec_.arm_concentration >= 1.0) {
      throw ConfigError("Environment: arm_concentration must lie in [0, 1)");
    }
    drift_center_ = rng_.unit_sphere(spec_.d);
    drift_sorted_ = spec_.drift_steps;
    std::sort(drift_sorted_.begin(), drift_sorted_.end());
  }

  const EnvironmentSpec& spec() const { return spec_; }

  RoundDraw sample_round(long t) {
    while (next_drift_ < drift_sorted_.size() && drift_sorted_[next_drift_] <= t) {
      drift_center_ = rng_.unit_sphere(spec_.d);
      ++next_drift_;
    }
    RoundDraw round;
    round.noises.resize(static_cast<std::size_t>(spec_.agents));
    for (int i = 0; i < spec_.agents; ++i) round.noises[static_cast<std::size_t>(i)] = draw_noise();

    round.sets.resize(static_cast<std::size_t>(spec_.agents));
    switch (spec_.set_family) {
      case SetFamily::Shared: {
        const DecisionSet shared = draw_set();
        for (auto& s : round.sets) s = shared;
        break;
      }
      case SetFamily::IidRotations: {
        const DecisionSet base = draw_set();
        for (auto& s : round.sets) {
          const Matrix q = rng_.random_orthogonal(spec_.d);
          s.arms.reserve(base.arms.size());
          for (const Vector& x : base.arms) s.arms.push_back(q * x);
        }
        break;
      }
      case SetFamily::IidResample: {
        for (auto& s : round.sets) s = draw_set();
        break;
      }
    }
    return round;
  }

 private:
  DecisionSet draw_set() {
    DecisionSet set;
    set.arms.reserve(static_cast<std::size_t>(spec_.arms_per_set));
    for (int a = 0; a < spec_.arms_per_set; ++a) {
      Vector x = rng_.unit_sphere(spec_.d);
      if (spec_.arm_concentration > 0.0) {
        x = (1.0 - spec_.arm_concentration) * x + spec_.arm_concentration * drift_center_;
        const double n = x.norm();
        if (n > 1e-12) x /= n;
      }
      set.arms.push_back(std::move(x));
    }
    return set;
  }

  double draw_noise() {
    if (spec_.noise_r == 0.0) return 0.0;
    if (spec_.noise_family == NoiseFamily::Uniform) {
      return (2.0 * rng_.uniform01() - 1.0) * std::sqrt(3.0) * spec_.noise_r;
    }
    double z;
    do {
      z = rng_.normal();
    } while (std::abs(z) > 3.0);
    return spec_.noise_r * z;
  }

  EnvironmentSpec spec_;
  Rng rng_;
  Vector drift_center_;
  std::vector<long> drift_sorted_;
  std::size_t next_drift_ = 0;
};

// Monte-Carlo estimate of the worst cross-agent Frobenius deviation of the
// chosen action's outer product under the fixed greedy policy
// x_i = argmax <x, theta*> (ties to the lowest arm index). Shared sets give
// exactly 0: every agent picks the same arm. The value never exceeds 2.
inline double empirical_sigma(const EnvironmentSpec& spec, int samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("empirical_sigma: samples >= 1 required");
  Environment env(spec, seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const RoundDraw round = env.sample_round(/*t=*/s + 1);
    std::vector<Matrix> outer;
    outer.reserve(round.sets.size());
    for (const DecisionSet& set : round.sets) {
      int pick = 0;
      double best = set.arms[0].dot(spec.theta_star);
      for (int a = 1; a < static_cast<int>(set.arms.size()); ++a) {
        const double v = set.arms[static_cast<std::size_t>(a)].dot(spec.theta_star);
        if (v > best) {
          best = v;
          pick = a;
        }
      }
      const Vector& x = set.arms[static_cast<std::size_t>(pick)];
      outer.push_back(x * x.transpose());
    }
    // Deviations are computed against the mean of the differences from the
    // first pick. Mathematically identical to centering on the mean itself,
    // but identical picks give exact zeros instead of division round-off.
    Matrix mean_diff = Matrix::Zero(spec.d, spec.d);
    for (const Matrix& o : outer) mean_diff += o - outer.front();
    mean_diff /= static_cast<double>(outer.size());
    for (const Matrix& o : outer) {
      worst = std::max(worst, (o - outer.front() - mean_diff).norm());
    }
  }
  return worst;
}

}  // namespace byzbandit
