// Tree-based privacy mechanism: per-agent binary trees of Gaussian noise over
// episode prefixes, noise calibration, and the analytic bound on the
// accumulated noise norm.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "byzbandit/errors.hpp"
#include "byzbandit/linalg.hpp"
#include "byzbandit/rng.hpp"

namespace byzbandit {

// Closed dyadic interval of episodes, 1-based.
struct DyadicInterval {
  int lo = 0;
  int hi = 0;
  friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
};

inline int ceil_log2(int k) {
  return k <= 1 ? 0 : std::bit_width(static_cast<unsigned>(k - 1));
}

// Tree depth: m = 1 + ceil(log2 K).
inline int tree_depth(int episodes) {
  if (episodes < 1) throw ConfigError("tree_depth: episodes >= 1 required");
  return 1 + ceil_log2(episodes);
}

// Decompose [1, k] into at most ceil(log2 k) + 1 disjoint dyadic intervals,
// most significant block first: k = 7 -> [1,4], [5,6], [7,7].
inline std::vector<DyadicInterval> prefix_nodes(int k, int episodes) {
  if (k < 1 || k > episodes) {
    throw ConfigError("prefix_nodes: need 1 <= k <= episodes");
  }
  std::vector<DyadicInterval> nodes;
  int lo = 1;
  int remaining = k;
  while (remaining > 0) {
    const int len = 1 << (std::bit_width(static_cast<unsigned>(remaining)) - 1);
    nodes.push_back({lo, lo + len - 1});
    lo += len;
    remaining -= len;
  }
  return nodes;
}

// Per-node noise standard deviation for the Gaussian mechanism with the
// per-node budget (mu/m, nu/m) and L2 sensitivity 2L per node:
// sigma_node = (2 L m / mu) * sqrt(2 * ln(1.25 m / nu)).
inline double calibrate_node_sigma(double mu, double nu, long episode_len, int episodes) {
  if (mu <= 0.0 || nu <= 0.0) throw ConfigError("calibrate: mu, nu must be positive");
  if (episode_len < 1) throw ConfigError("calibrate: episode length >= 1 required");
  const int m = tree_depth(episodes);
  const double ratio = 1.25 * m / nu;
  if (ratio <= 1.0) throw ConfigError("calibrate: nu too large for the Gaussian mechanism");
  return (2.0 * static_cast<double>(episode_len) * m / mu) * std::sqrt(2.0 * std::log(ratio));
}

struct PrivacyBudget {
  double mu = 0.0;
  double nu = 0.0;
  long episode_len = 0;
  double bound = 0.0;  // B: high-probability bound scale, ||H|| and ||h|| <= B * L
};

// B = 48 * iota * ln(4 / nu) * (sqrt(d) + iota) / mu.
inline double noise_budget_bound(double mu, double nu, double iota, int d) {
  if (mu <= 0.0 || nu <= 0.0) throw ConfigError("noise budget: mu, nu must be positive");
  return 48.0 * iota * std::log(4.0 / nu) * (std::sqrt(static_cast<double>(d)) + iota) / mu;
}

inline PrivacyBudget make_privacy_budget(double mu, double nu, long episode_len, int d,
                                         double iota) {
  return PrivacyBudget{mu, nu, episode_len, noise_budget_bound(mu, nu, iota, d)};
}

// Binary tree of noise samples over [1, K]. Each node holds one d x d
// exactly-symmetric Gaussian matrix and one d-vector, drawn lazily from a
// seed derived from the node's interval, so a sample is a pure function of
// (tree seed, node) and is reused by every prefix that touches the node.
// sigma == 0 is the DP-disabled mode: no sampling, prefixes are exactly zero.
class NoiseTree {
 public:
  NoiseTree(int episodes, int d, double sigma_node, std::uint64_t seed)
      : episodes_(episodes), d_(d), sigma_(sigma_node), seed_(seed) {
    if (episodes < 1 || d < 1) throw ConfigError("NoiseTree: episodes >= 1, d >= 1 required");
    if (sigma_node < 0.0) throw ConfigError("NoiseTree: sigma must be >= 0");
  }

  int episodes() const { return episodes_; }
  int dim() const { return d_; }
  double sigma() const { return sigma_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t nodes_drawn() const { return nodes_.size(); }

  // Sum of node samples covering [1, upto]; upto == 0 gives exact zeros.
  std::pair<Matrix, Vector> accumulate_prefix(int upto) {
    Matrix h_mat = Matrix::Zero(d_, d_);
    Vector h_vec = Vector::Zero(d_);
    if (upto == 0 || sigma_ == 0.0) return {std::move(h_mat), std::move(h_vec)};
    for (const DyadicInterval& iv : prefix_nodes(upto, episodes_)) {
      const Node& node = get_node(iv);
      h_mat += node.mat;
      h_vec += node.vec;
    }
    return {std::move(h_mat), std::move(h_vec)};
  }

 private:
  struct Node {
    Matrix mat;
    Vector vec;
  };

  const Node& get_node(const DyadicInterval& iv) {
    const auto key = std::make_pair(iv.lo, iv.hi);
    auto it = nodes_.find(key);
    if (it != nodes_.end()) return it->second;
    Rng rng(derive_seed(seed_, {static_cast<std::uint64_t>(iv.lo), static_cast<std::uint64_t>(iv.hi)}));
    Node node;
    node.mat = Matrix(d_, d_);
    for (int i = 0; i < d_; ++i) {
      for (int j = i; j < d_; ++j) {
        const double g = sigma_ * rng.normal();
        node.mat(i, j) = g;
        node.mat(j, i) = g;
      }
    }
    node.vec = rng.normal_vector(d_, sigma_);
    return nodes_.emplace(key, std::move(node)).first->second;
  }

  int episodes_;
  int d_;
  double sigma_;
  std::uint64_t seed_;
  std::map<std::pair<int, int>, Node> nodes_;
};

// Privatized statistics handed to the controller before episode k: the noise
// covers episodes [1, k-1]. k == 1 and the DP-disabled tree return the inputs
// bit-identically.
inline std::pair<SymMatrix, Vector> privatize(NoiseTree& tree, const SymMatrix& v_mat,
                                              const Vector& v_vec, int k) {
  if (k < 1 || k > tree.episodes() + 1) {
    throw ConfigError("privatize: need 1 <= k <= episodes + 1");
  }
  if (k == 1 || tree.sigma() == 0.0) return {v_mat, v_vec};
  auto [h_mat, h_vec] = tree.accumulate_prefix(k - 1);
  // Both addends are exactly symmetric entrywise, so the sum is too.
  return {SymMatrix(v_mat.mat() + h_mat), v_vec + h_vec};
}

// Fraction of (trial, prefix) pairs whose accumulated noise exceeds B * L in
// spectral (matrix) or l2 (vector) norm. Fresh trees are drawn per trial from
// seeds derived off the prototype's seed.
inline double noise_norm_check(const NoiseTree& prototype, const PrivacyBudget& budget,
                               int trials) {
  if (trials < 1) throw ConfigError("noise_norm_check: trials >= 1 required");
  const double limit = budget.bound * static_cast<double>(budget.episode_len);
  long exceed = 0;
  long total = 0;
  for (int trial = 0; trial < trials; ++trial) {
    NoiseTree tree(prototype.episodes(), prototype.dim(), prototype.sigma(),
                   derive_seed(prototype.seed(), {0x6E6F7263ULL, static_cast<std::uint64_t>(trial)}));
    for (int upto = 1; upto <= prototype.episodes(); ++upto) {
      auto [h_mat, h_vec] = tree.accumulate_prefix(upto);
      const double mat_norm = spectral_norm(SymMatrix(h_mat));
      const double vec_norm = h_vec.norm();
      if (mat_norm > limit || vec_norm > limit) ++exceed;
      ++total;
    }
  }
  return static_cast<double>(exceed) / static_cast<double>(total);
}

}  // namespace byzbandit
