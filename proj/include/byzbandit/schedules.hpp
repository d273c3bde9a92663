// Episode schedules: breakdown constant, confidence parameter iota,
// per-episode regularization lambda_k and confidence radius beta_k for the
// three analysis variants, and the recommended episode length.
//
// Variant map:
//   T1: robust aggregation, no privacy noise.
//   T2: robust aggregation + tree-based privacy (geometric median oracle).
//   T3: median-of-means oracle + tree-based privacy.
// With B = 0 and epsilon = 0, T2's formulas reduce bit-identically to T1's:
// the extra terms are exact IEEE zeros added to the shared subexpressions.
#pragma once

#include <algorithm>
#include <cmath>

#include "byzbandit/errors.hpp"

namespace byzbandit {

enum class Variant { T1, T2, T3 };

// Breakdown constant C_alpha = (2 - 2 alpha) / (1 - 2 alpha), alpha in [0, 1/2).
inline double c_alpha(double alpha) {
  if (!(alpha >= 0.0) || !(alpha < 0.5)) {
    throw InvalidAlpha("c_alpha: alpha must lie in [0, 1/2)");
  }
  return (2.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha);
}

// iota = ln(128 N T / delta), natural log.
inline double iota(int agents, long horizon, double delta) {
  if (agents < 1 || horizon < 1) throw ConfigError("iota: agents, horizon >= 1 required");
  if (!(delta > 0.0) || !(delta < 1.0)) throw ConfigError("iota: delta must lie in (0, 1)");
  return std::log(128.0 * static_cast<double>(agents) * static_cast<double>(horizon) / delta);
}

// All inputs the lambda_k / beta_k formulas need, fully resolved (padded
// horizon, effective alpha, resolved sigma, B already computed; B = 0 and
// sigma_node = 0 when privacy is disabled).
struct ScheduleParams {
  Variant variant = Variant::T1;
  double alpha = 0.0;   // corrupted fraction used in the formulas
  double sigma = 0.0;   // decision-set variability (Assumption-1 scale)
  double noise_r = 0.0; // reward noise sub-Gaussian scale R
  int d = 1;
  int agents = 1;
  long horizon = 1;     // padded horizon K * L
  double delta = 0.05;
  double epsilon = 1e-6;
  double budget_b = 0.0;  // B; 0 unless privacy noise is on
  long episode_len = 1;   // L
  long episodes = 1;      // K
  double iota_val = 0.0;
  double c_a = 2.0;
};

namespace detail {
// max{lambda_0, lambda_1 sqrt(k)} with lambda_0 = L. Shared verbatim between
// T1 and T2 so the B = epsilon = 0 reduction is bitwise.
inline double lambda_core(double episode_len, double lambda_1, long k) {
  return std::max(episode_len, lambda_1 * std::sqrt(static_cast<double>(k)));
}
}  // namespace detail

inline double lambda_k(const ScheduleParams& p, long k) {
  if (k < 1) throw ConfigError("lambda_k: k >= 1 required");
  const double el = static_cast<double>(p.episode_len);
  const double sqrt_d = std::sqrt(static_cast<double>(p.d));
  switch (p.variant) {
    case Variant::T1: {
      const double lambda_1 = 8.0 * std::sqrt(el * p.iota_val) * p.c_a * p.sigma;
      return detail::lambda_core(el, lambda_1, k);
    }
    case Variant::T2: {
      const double lambda_1 = 8.0 * std::sqrt(el * p.iota_val) * p.c_a * p.sigma;
      const double dp_term = 2.0 * p.c_a * (p.budget_b * el * sqrt_d + p.epsilon);
      return dp_term + detail::lambda_core(el, lambda_1, k);
    }
    case Variant::T3: {
      const double lambda_1 = 128.0 * p.sigma * std::sqrt(p.alpha * el * p.iota_val);
      return 8.0 * (p.budget_b * el * sqrt_d + p.epsilon) + detail::lambda_core(el, lambda_1, k);
    }
  }
  throw ConfigError("lambda_k: unknown variant");
}

inline double beta_k(const ScheduleParams& p, long k, double lambda) {
  if (k < 1) throw ConfigError("beta_k: k >= 1 required");
  const double el = static_cast<double>(p.episode_len);
  const double dd = static_cast<double>(p.d);
  const double prior = 3.0 * std::sqrt(lambda * dd);
  const double tail =
      2.0 * p.noise_r * std::sqrt(dd * p.iota_val / static_cast<double>(p.agents));
  const double sqrt_lambda = std::sqrt(lambda);
  switch (p.variant) {
    case Variant::T1: {
      const double dev = 4.0 * std::sqrt(static_cast<double>(k - 1) * el * dd * p.iota_val) *
                         p.c_a * (p.sigma + p.noise_r);
      return prior + dev / sqrt_lambda + tail;
    }
    case Variant::T2: {
      const double dev = 4.0 * std::sqrt(static_cast<double>(k - 1) * el * dd * p.iota_val) *
                         p.c_a * (p.sigma + p.noise_r);
      const double dp = p.c_a * (p.budget_b * el + p.epsilon);
      return prior + (dev + dp) / sqrt_lambda + tail;
    }
    case Variant::T3: {
      const double dev = 64.0 * (p.sigma + p.noise_r) *
                         std::sqrt(p.alpha * static_cast<double>(k - 1) * el * dd * p.iota_val);
      const double dp = 4.0 * (p.budget_b * el + p.epsilon);
      return prior + (dev + dp) / sqrt_lambda + tail;
    }
  }
  throw ConfigError("beta_k: unknown variant");
}

// Regret-optimal episode length, rounded to the nearest integer >= 1.
// T1/T2: C_alpha (sigma + R) sqrt(T iota); T3: max{(sigma + R) sqrt(alpha T iota), 1}.
inline long recommended_episode_len(Variant variant, double alpha, double sigma, double noise_r,
                                    long horizon, double iota_val) {
  double value = 0.0;
  const double t_iota = static_cast<double>(horizon) * iota_val;
  if (variant == Variant::T3) {
    value = std::max((sigma + noise_r) * std::sqrt(alpha * t_iota), 1.0);
  } else {
    value = c_alpha(alpha) * (sigma + noise_r) * std::sqrt(t_iota);
  }
  return std::max(std::lround(value), 1L);
}

}  // namespace byzbandit
