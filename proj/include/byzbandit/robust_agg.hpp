// Robust aggregation oracles: arithmetic mean, smoothed-Weiszfeld geometric
// median (vectors and symmetric-matrix flattenings), geometric median of
// group means, and an independent grid-search oracle used to validate the
// Weiszfeld path.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "byzbandit/errors.hpp"
#include "byzbandit/linalg.hpp"
#include "byzbandit/rng.hpp"

namespace byzbandit {

// Sanitized point set. Malformed inputs (wrong dimension or non-finite
// entries) are coerced to the zero point at construction: an adversarial
// value that is not even a point of the space is treated as 0 rather than
// rejected, so aggregation never fails on corrupted input.
struct PointCloud {
  int dim = 0;
  std::vector<Vector> pts;

  static PointCloud make(int dim, const std::vector<Vector>& raw) {
    PointCloud c;
    c.dim = dim;
    c.pts.reserve(raw.size());
    for (const Vector& p : raw) {
      if (p.size() == dim && all_finite(p)) {
        c.pts.push_back(p);
      } else {
        c.pts.push_back(Vector::Zero(dim));
      }
    }
    return c;
  }

  int n() const { return static_cast<int>(pts.size()); }
};

// Row-major flattening of d x d matrices to R^(d^2). A matrix that is not a
// valid symmetric point (asymmetric beyond tolerance, non-finite, wrong
// shape) is coerced to the zero matrix, mirroring PointCloud::make.
inline Vector flatten(const Matrix& m) {
  Vector v(m.rows() * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v[r * m.cols() + c] = m(r, c);
  return v;
}

inline Matrix unflatten(const Vector& v, int d) {
  Matrix m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = v[r * d + c];
  return m;
}

inline PointCloud matrix_cloud(int d, const std::vector<Matrix>& raw) {
  std::vector<Vector> flat;
  flat.reserve(raw.size());
  for (const Matrix& m : raw) {
    if (m.rows() == d && m.cols() == d && all_finite(m) && is_symmetric(m)) {
      flat.push_back(flatten(m));
    } else {
      flat.push_back(Vector::Zero(d * d));
    }
  }
  return PointCloud::make(d * d, flat);
}

// Mean over a subset of indices, summed in ascending index order. The order
// is part of the contract: a single group containing all agents must be
// bitwise identical to arithmetic_mean.
inline Vector mean_of(const PointCloud& cloud, const std::vector<int>& indices) {
  Vector s = Vector::Zero(cloud.dim);
  for (int i : indices) s += cloud.pts[static_cast<std::size_t>(i)];
  return s / static_cast<double>(indices.size());
}

inline Vector arithmetic_mean(const PointCloud& cloud) {
  std::vector<int> all(static_cast<std::size_t>(cloud.n()));
  for (int i = 0; i < cloud.n(); ++i) all[static_cast<std::size_t>(i)] = i;
  return mean_of(cloud, all);
}

// Mean Euclidean distance objective g(z) = (1/n) * sum_i ||z - z_i||.
inline double gm_objective(const PointCloud& cloud, const Vector& z) {
  double s = 0.0;
  for (const Vector& p : cloud.pts) s += (z - p).norm();
  return s / static_cast<double>(cloud.n());
}

inline Vector coordinatewise_median(const PointCloud& cloud) {
  const int n = cloud.n();
  Vector med(cloud.dim);
  std::vector<double> col(static_cast<std::size_t>(n));
  for (int c = 0; c < cloud.dim; ++c) {
    for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = cloud.pts[static_cast<std::size_t>(i)][c];
    const auto mid = col.begin() + n / 2;
    std::nth_element(col.begin(), mid, col.end());
    if (n % 2 == 1) {
      med[c] = *mid;
    } else {
      const double hi = *mid;
      const double lo = *std::max_element(col.begin(), mid);
      med[c] = (lo + hi) / 2.0;
    }
  }
  return med;
}

struct GmResult {
  Vector point;
  int iterations = 0;
  bool converged = false;  // a termination criterion fired before max_iter
  bool hit_max_iter = false;
};

// Smoothed Weiszfeld iteration. Weights are 1 / max(||z - z_i||, rho) with a
// floor rho tied to the honest-cluster scale: rho = 1e-12 * (1 + median_i
// ||z_i - z_init||), z_init the coordinatewise median. Tying the floor to the
// median distance (not the max norm) keeps a single huge-norm outlier from
// inflating rho and biasing the fixed point beyond the eps certificate.
//
// Termination is a true optimality certificate, not a movement heuristic
// (movement shrinks near vertex optima long before the objective gap does).
// At the current iterate, with S the summed unit directions to points beyond
// rho and m the count within rho, the minimal-norm subgradient of the mean
// objective has norm max(||S|| - m, 0) / n, and the optimum lies in the
// convex hull, hence within max_i ||z - z_i||. The product bounds the gap:
//   f(z) - f* <= max(||S|| - m, 0) / n * max_i ||z - z_i||  (+ O(rho)).
inline GmResult geometric_median(const PointCloud& cloud, double eps = 1e-6,
                                 int max_iter = 10000) {
  if (cloud.n() < 1) {
    throw ConfigError("geometric_median: empty cloud");
  }
  GmResult res;
  if (cloud.n() == 1) {
    res.point = cloud.pts[0];
    res.converged = true;
    return res;
  }
  const int n = cloud.n();
  Vector z = coordinatewise_median(cloud);

  std::vector<double> dists(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) dists[static_cast<std::size_t>(i)] = (cloud.pts[static_cast<std::size_t>(i)] - z).norm();
  std::vector<double> sorted = dists;
  const auto mid = sorted.begin() + n / 2;
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double rho = 1e-12 * (1.0 + *mid);

  for (int it = 0; it <= max_iter; ++it) {
    Vector s = Vector::Zero(cloud.dim);
    Vector num = Vector::Zero(cloud.dim);
    double den = 0.0;
    double coincident = 0.0;
    double max_d = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vector& p = cloud.pts[static_cast<std::size_t>(i)];
      const Vector diff = p - z;
      const double d = diff.norm();
      max_d = std::max(max_d, d);
      if (d <= rho) {
        coincident += 1.0;
      } else {
        s += diff / d;
      }
      const double w = 1.0 / std::max(d, rho);
      num += w * p;
      den += w;
    }
    const double gap_bound =
        std::max(s.norm() - coincident, 0.0) / static_cast<double>(n) * max_d;
    if (gap_bound <= eps) {
      res.converged = true;
      break;
    }
    if (it == max_iter) break;
    z = num / den;
    res.iterations = it + 1;
  }
  res.hit_max_iter = !res.converged;
  res.point = z;
  return res;
}

struct MatrixGmResult {
  SymMatrix sym;   // symmetrized output (never a worse objective, and the
                   // aggregate the protocol consumes)
  Matrix raw;      // pre-symmetrization reshape, kept for diagnostics/tests
  GmResult stats;
};

// Geometric median of symmetric matrices under the Frobenius norm: flatten,
// run the vector iteration, reshape, then project back to symmetric.
inline MatrixGmResult geometric_median_matrices(int d, const std::vector<Matrix>& raw,
                                                double eps = 1e-6, int max_iter = 10000) {
  const PointCloud cloud = matrix_cloud(d, raw);
  GmResult gm = geometric_median(cloud, eps, max_iter);
  MatrixGmResult out;
  out.raw = unflatten(gm.point, d);
  out.sym = SymMatrix::exact_symmetrized(out.raw);
  out.stats = std::move(gm);
  return out;
}

struct GroupPartition {
  std::vector<std::vector<int>> groups;  // disjoint cover of [0, N); each sorted
  int agents = 0;
};

// Deal a uniformly random permutation of [0, N) round-robin into
// P = max(3 * n_corrupted, 1) groups, so group sizes differ by at most one.
// Indices inside each group are sorted: the single-group case must aggregate
// in the same order as arithmetic_mean.
inline GroupPartition partition_agents(int agents, int n_corrupted, Rng& rng) {
  if (agents < 1 || n_corrupted < 0) {
    throw ConfigError("partition_agents: need agents >= 1 and n_corrupted >= 0");
  }
  if (n_corrupted > 0 && 3 * n_corrupted > agents) {
    throw InvalidCorruptionBound("partition_agents: 3 * corrupted > agents");
  }
  const int p = std::max(3 * n_corrupted, 1);
  GroupPartition part;
  part.agents = agents;
  part.groups.assign(static_cast<std::size_t>(p), {});
  const std::vector<int> perm = rng.permutation(agents);
  for (int i = 0; i < agents; ++i) {
    part.groups[static_cast<std::size_t>(i % p)].push_back(perm[static_cast<std::size_t>(i)]);
  }
  for (auto& g : part.groups) std::sort(g.begin(), g.end());
  return part;
}

// Geometric median of group means. With one group this reduces exactly
// (bitwise) to the arithmetic mean: mean_of sums in ascending order and
// geometric_median copies a singleton cloud.
inline GmResult gm_of_means(const PointCloud& cloud, const GroupPartition& part,
                            double eps = 1e-6, int max_iter = 10000) {
  std::vector<Vector> means;
  means.reserve(part.groups.size());
  for (const auto& g : part.groups) means.push_back(mean_of(cloud, g));
  return geometric_median(PointCloud::make(cloud.dim, means), eps, max_iter);
}

inline MatrixGmResult gm_of_means_matrices(int d, const std::vector<Matrix>& raw,
                                           const GroupPartition& part, double eps = 1e-6,
                                           int max_iter = 10000) {
  const PointCloud cloud = matrix_cloud(d, raw);
  GmResult gm = gm_of_means(cloud, part, eps, max_iter);
  MatrixGmResult out;
  out.raw = unflatten(gm.point, d);
  out.sym = SymMatrix::exact_symmetrized(out.raw);
  out.stats = std::move(gm);
  return out;
}

// Independent test oracle: exhaustive lattice search over the bounding box at
// `resolution`, then two refinement passes at 10x finer resolution around the
// incumbent. The coarse pass alone puts the returned objective within
// 2 * resolution * sqrt(dim) of the optimum (grid spacing times a Lipschitz-1
// objective, with slack). Ties keep the lexicographically lowest point, which
// is the first one visited. Dimensions above 4 are refused.
inline Vector brute_force_gm(const PointCloud& cloud, double resolution) {
  if (cloud.dim > 4) {
    throw DimensionTooLarge("brute_force_gm: dimension > 4");
  }
  if (cloud.n() < 1 || resolution <= 0.0) {
    throw ConfigError("brute_force_gm: need points and a positive resolution");
  }
  const int d = cloud.dim;

  Vector lo(d), hi(d);
  for (int c = 0; c < d; ++c) {
    double mn = cloud.pts[0][c], mx = cloud.pts[0][c];
    for (const Vector& p : cloud.pts) {
      mn = std::min(mn, p[c]);
      mx = std::max(mx, p[c]);
    }
    lo[c] = mn - resolution;
    hi[c] = mx + resolution;
  }

  Vector best = lo;
  double best_g = gm_objective(cloud, lo);

  auto scan = [&](const Vector& from, const Vector& to, double step) {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) {
      counts[static_cast<std::size_t>(c)] =
          static_cast<std::int64_t>(std::floor((to[c] - from[c]) / step + 0.5)) + 1;
    }
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
    Vector z(d);
    while (true) {
      for (int c = 0; c < d; ++c) z[c] = from[c] + step * static_cast<double>(idx[static_cast<std::size_t>(c)]);
      const double g = gm_objective(cloud, z);
      if (g < best_g) {
        best_g = g;
        best = z;
      }
      int c = d - 1;
      while (c >= 0) {
        if (++idx[static_cast<std::size_t>(c)] < counts[static_cast<std::size_t>(c)]) break;
        idx[static_cast<std::size_t>(c)] = 0;
        --c;
      }
      if (c < 0) break;
    }
  };

  scan(lo, hi, resolution);
  double step = resolution;
  for (int pass = 0; pass < 2; ++pass) {
    const double window = 2.0 * step;
    step /= 10.0;
    Vector from(d), to(d);
    for (int c = 0; c < d; ++c) {
      from[c] = best[c] - window;
      to[c] = best[c] + window;
    }
    scan(from, to, step);
  }
  return best;
}

}  // namespace byzbandit
