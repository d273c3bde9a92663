// Seeded random streams with explicit derivation, so every component of a run
// (environment, attack, partition, per-agent noise trees) draws from its own
// stream and simulations stay reproducible when unrelated components change.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace byzbandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// SplitMix64 step; used only to derive seeds, never as the sampling engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Hash a seed with a sequence of stream labels into a derived seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t s = seed;
  std::uint64_t out = splitmix64(s);
  for (std::uint64_t label : labels) {
    s = out ^ (label * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    out = splitmix64(s);
  }
  return out;
}

// Stream labels for derive_seed. Values are arbitrary but frozen: changing
// them reshuffles every seeded test and golden trace.
namespace stream {
constexpr std::uint64_t kEnvironment = 1;
constexpr std::uint64_t kAttack = 2;
constexpr std::uint64_t kPartition = 3;
constexpr std::uint64_t kNoiseTree = 4;
constexpr std::uint64_t kSigmaEstimate = 5;
constexpr std::uint64_t kRepetition = 6;
}  // namespace stream

// mt19937_64 wrapper with hand-rolled distributions. The standard engine is
// bit-exact across platforms; standard distributions are not, so uniform and
// normal variates are generated from raw 64-bit output here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), n >= 1, by rejection (no modulo bias).
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool coin(double p) { return uniform01() < p; }

  // Standard normal via Marsaglia polar rejection (only one variate kept,
  // keeping the draw count a simple function of the acceptance pattern).
  double normal() {
    while (true) {
      const double u = 2.0 * uniform01() - 1.0;
      const double v = 2.0 * uniform01() - 1.0;
      const double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) {
        return u * std::sqrt(-2.0 * std::log(s) / s);
      }
    }
  }

  Vector normal_vector(int d, double stddev) {
    Vector out(d);
    for (int i = 0; i < d; ++i) out[i] = stddev * normal();
    return out;
  }

  // Uniform direction on the unit sphere in R^d (d = 1 gives {-1, +1}).
  Vector unit_sphere(int d) {
    while (true) {
      Vector g = normal_vector(d, 1.0);
      const double n = g.norm();
      if (n > 1e-12) return g / n;
    }
  }

  // Haar-distributed orthogonal matrix via QR of a Gaussian matrix with the
  // sign convention R_ii > 0.
  Matrix random_orthogonal(int d) {
    Matrix g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i) {
      if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    }
    return q;
  }

  // Fisher-Yates shuffle of [0, n).
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(p[i], p[j]);
    }
    return p;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace byzbandit
