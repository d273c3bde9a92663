// Standalone invariant battery for the aggregation oracles and the linear
// algebra layer: geometric-median quality against brute force, the
// concentration bound under corruption, symmetrization optimality, PSD
// inversion ordering, and median-of-means degeneracies. Shared between the
// `oracle-check` CLI subcommand and the acceptance suite.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "byzbandit/linalg.hpp"
#include "byzbandit/robust_agg.hpp"
#include "byzbandit/rng.hpp"
#include "byzbandit/schedules.hpp"

namespace byzbandit {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace checkdetail {

constexpr std::uint64_t kBatterySeed = 0x6F7261636C65ULL;

inline std::string format_scientific(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

inline bool bits_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

// Bug-injection hook for the CI self-test: shifts every vector-GM answer so
// the battery must notice.
inline Vector gm_point(const PointCloud& cloud, double eps, bool inject_bug) {
  Vector z = geometric_median(cloud, eps).point;
  if (inject_bug) z[0] += 0.1;
  return z;
}

inline int scaled(int base, double scale) {
  const int n = static_cast<int>(std::lround(base * scale));
  return n < 1 ? 1 : n;
}

inline CheckResult gm_vs_bruteforce(double scale, bool inject_bug) {
  Rng rng(derive_seed(kBatterySeed, {1}));
  const int instances = scaled(50, scale);
  const double slack = 1e-6 + 2.0 * 1e-4 * std::sqrt(2.0);
  int ok = 0;
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int n = 3 + rng.uniform_int(7);
    std::vector<Vector> pts;
    for (int j = 0; j < n; ++j) {
      Vector p(2);
      p << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
      pts.push_back(p);
    }
    const PointCloud cloud = PointCloud::make(2, pts);
    const Vector w = gm_point(cloud, 1e-6, inject_bug);
    const Vector bf = brute_force_gm(cloud, 2e-3);
    const double excess = gm_objective(cloud, w) - gm_objective(cloud, bf);
    worst = std::max(worst, excess);
    if (excess <= slack) ++ok;
  }
  CheckResult r;
  r.name = "gm-vs-bruteforce";
  r.pass = ok == instances;
  r.detail = std::to_string(ok) + "/" + std::to_string(instances) +
             " within slack, max excess " + format_scientific(worst);
  return r;
}

inline CheckResult gm_concentration(double scale, bool inject_bug) {
  Rng rng(derive_seed(kBatterySeed, {2}));
  const int instances = scaled(1000, scale);
  int ok = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int n = 3 + rng.uniform_int(19);           // 3..21
    const int n1 = rng.uniform_int((n - 1) / 2 + 1); // 0..floor((n-1)/2), alpha < 1/2
    const int d = 1 + rng.uniform_int(5);
    Vector center = rng.normal_vector(d, 1.0);
    std::vector<Vector> pts;
    for (int j = 0; j < n - n1; ++j) pts.push_back(center + rng.normal_vector(d, 0.5));
    Vector honest_mean = Vector::Zero(d);
    for (const Vector& p : pts) honest_mean += p;
    honest_mean /= static_cast<double>(n - n1);
    double dev_sum = 0.0;
    for (const Vector& p : pts) dev_sum += (p - honest_mean).norm();
    for (int j = 0; j < n1; ++j) {
      const int kind = rng.uniform_int(3);
      if (kind == 0) {
        pts.push_back(1e9 * rng.unit_sphere(d));
      } else if (kind == 1) {
        pts.push_back(center + rng.normal_vector(d, 10.0));
      } else {
        pts.push_back(-center);
      }
    }
    const double eps = 1e-6;
    const Vector zhat = gm_point(PointCloud::make(d, pts), eps, inject_bug);
    const double alpha = static_cast<double>(n1) / static_cast<double>(n);
    const double bound =
        c_alpha(alpha) * (dev_sum / static_cast<double>(n - n1) + eps);
    const double lhs = (zhat - honest_mean).norm();
    if (lhs <= bound) ++ok;
    if (bound > 0) worst_ratio = std::max(worst_ratio, lhs / bound);
  }
  CheckResult r;
  r.name = "gm-concentration";
  r.pass = ok == instances;
  r.detail = std::to_string(ok) + "/" + std::to_string(instances) +
             " within bound, max lhs/bound " + format_scientific(worst_ratio);
  return r;
}

inline CheckResult gm_symmetrization(double scale) {
  Rng rng(derive_seed(kBatterySeed, {3}));
  const int instances = scaled(200, scale);
  int ok = 0;
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int d = 2 + rng.uniform_int(2);
    const int n = 4 + rng.uniform_int(6);
    std::vector<Matrix> mats;
    for (int j = 0; j < n; ++j) {
      Matrix a(d, d);
      for (int r0 = 0; r0 < d; ++r0)
        for (int c0 = 0; c0 < d; ++c0) a(r0, c0) = rng.normal();
      Matrix sym = SymMatrix::exact_symmetrized(a).mat();
      if (j == n - 1 && rng.coin(0.5)) sym *= 1e3;
      mats.push_back(sym);
    }
    const MatrixGmResult res = geometric_median_matrices(d, mats, 1e-6);
    std::vector<Vector> flat;
    for (const Matrix& m : mats) flat.push_back(flatten(m));
    const PointCloud cloud = PointCloud::make(d * d, flat);
    const double g_sym = gm_objective(cloud, flatten(res.sym.mat()));
    const double g_raw = gm_objective(cloud, flatten(res.raw));
    const double excess = g_sym - g_raw;
    worst = std::max(worst, excess);
    if (excess <= 1e-12) ++ok;
  }
  CheckResult r;
  r.name = "gm-symmetrization";
  r.pass = ok == instances;
  r.detail = std::to_string(ok) + "/" + std::to_string(instances) +
             " non-increasing, max increase " + format_scientific(worst);
  return r;
}

inline CheckResult psd_inversion_ordering(double scale) {
  Rng rng(derive_seed(kBatterySeed, {4}));
  const int instances = scaled(200, scale);
  int ok = 0;
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int d = 2 + rng.uniform_int(4);
    Matrix m(d, d), c(d, d);
    for (int r0 = 0; r0 < d; ++r0)
      for (int c0 = 0; c0 < d; ++c0) {
        m(r0, c0) = rng.normal();
        c(r0, c0) = rng.normal();
      }
    const Matrix b = SymMatrix::exact_symmetrized(m.transpose() * m).mat() +
                     0.1 * Matrix::Identity(d, d);
    const Matrix a = b + SymMatrix::exact_symmetrized(c.transpose() * c).mat();
    const Matrix binv = b.llt().solve(Matrix::Identity(d, d));
    const Matrix ainv = a.llt().solve(Matrix::Identity(d, d));
    const double lo = min_eigenvalue(SymMatrix::exact_symmetrized(binv - ainv));
    worst = std::min(worst, lo);
    if (lo >= -1e-8) ++ok;
  }
  CheckResult r;
  r.name = "psd-inversion-ordering";
  r.pass = ok == instances;
  r.detail = std::to_string(ok) + "/" + std::to_string(instances) +
             " ordered, min eigenvalue " + format_scientific(worst);
  return r;
}

inline CheckResult translation_equivariance(double scale, bool inject_bug) {
  Rng rng(derive_seed(kBatterySeed, {5}));
  const int instances = scaled(100, scale);
  int ok = 0;
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int d = 1 + rng.uniform_int(4);
    const int n = 3 + rng.uniform_int(8);
    std::vector<Vector> pts, shifted;
    const Vector t = rng.normal_vector(d, 5.0);
    for (int j = 0; j < n; ++j) {
      pts.push_back(rng.normal_vector(d, 1.0));
      shifted.push_back(pts.back() + t);
    }
    const Vector g0 = gm_point(PointCloud::make(d, pts), 1e-8, inject_bug);
    const Vector g1 = gm_point(PointCloud::make(d, shifted), 1e-8, false);
    const double err = (g1 - (g0 + t)).norm();
    worst = std::max(worst, err);
    if (err <= 1e-6) ++ok;
  }
  CheckResult r;
  r.name = "translation-equivariance";
  r.pass = ok == instances;
  r.detail = std::to_string(ok) + "/" + std::to_string(instances) +
             " equivariant, max error " + format_scientific(worst);
  return r;
}

inline CheckResult breakdown_sanity(double scale, bool inject_bug) {
  Rng rng(derive_seed(kBatterySeed, {6}));
  const int instances = scaled(50, scale);
  int ok = 0;
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int d = 2 + rng.uniform_int(3);
    const int honest = 4 + rng.uniform_int(4);
    const int bad = rng.uniform_int(honest / 2);  // bad < honest/2, alpha < 1/3
    std::vector<Vector> pts;
    for (int j = 0; j < honest; ++j) pts.push_back(rng.normal_vector(d, 1.0));
    for (int j = 0; j < bad; ++j) pts.push_back(1e9 * rng.unit_sphere(d));
    const Vector g = gm_point(PointCloud::make(d, pts), 1e-6, inject_bug);
    // Outliers sit at norm 1e9; a bounded answer demonstrates breakdown
    // robustness decisively without re-deriving the tight constant.
    const double norm = g.norm();
    worst = std::max(worst, norm);
    if (norm <= 100.0) ++ok;
  }
  CheckResult r;
  r.name = "breakdown-sanity";
  r.pass = ok == instances;
  r.detail = std::to_string(ok) + "/" + std::to_string(instances) +
             " bounded, max norm " + format_scientific(worst);
  return r;
}

inline CheckResult mom_degeneracies(double scale, bool inject_bug) {
  Rng rng(derive_seed(kBatterySeed, {7}));
  const int instances = scaled(20, scale);
  int ok = 0;
  for (int i = 0; i < instances; ++i) {
    const int d = 1 + rng.uniform_int(4);
    const int n = 4 + rng.uniform_int(9);
    std::vector<Vector> pts;
    for (int j = 0; j < n; ++j) pts.push_back(rng.normal_vector(d, 2.0));
    const PointCloud cloud = PointCloud::make(d, pts);

    // Zero corrupted agents: a single group, so the estimator must be the
    // arithmetic mean bit for bit.
    Rng prng(derive_seed(kBatterySeed, {8, static_cast<std::uint64_t>(i)}));
    const GroupPartition one = partition_agents(n, 0, prng);
    Vector mom1 = gm_of_means(cloud, one, 1e-6).point;
    if (inject_bug) mom1[0] += 0.1;
    const bool single_ok = one.groups.size() == 1 && bits_equal(mom1, arithmetic_mean(cloud));

    // Singleton groups: the estimator must match the plain geometric median
    // bit for bit.
    GroupPartition singletons;
    singletons.agents = n;
    for (int j = 0; j < n; ++j) singletons.groups.push_back({j});
    const Vector mom_n = gm_of_means(cloud, singletons, 1e-6).point;
    const bool singleton_ok = bits_equal(mom_n, geometric_median(cloud, 1e-6).point);

    if (single_ok && singleton_ok) ++ok;
  }
  CheckResult r;
  r.name = "mom-degeneracies";
  r.pass = ok == instances;
  r.detail = std::to_string(ok) + "/" + std::to_string(instances) + " exact";
  return r;
}

inline CheckResult bruteforce_ties() {
  CheckResult r;
  r.name = "bruteforce-ties";
  std::vector<Vector> two;
  Vector a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 0.0;
  two.push_back(a);
  two.push_back(b);
  const Vector g2 = brute_force_gm(PointCloud::make(2, two), 0.1);
  // Every point on the segment ties; lexicographically smallest lattice
  // point wins.
  const bool tie_ok = std::abs(g2[0] - 0.0) <= 1e-9 && std::abs(g2[1] - 0.0) <= 1e-9;

  std::vector<Vector> line;
  for (int i = 0; i <= 3; ++i) {
    Vector p(1);
    p << static_cast<double>(i);
    line.push_back(p);
  }
  const PointCloud lc = PointCloud::make(1, line);
  const Vector g4 = brute_force_gm(lc, 0.05);
  const bool line_ok = gm_objective(lc, g4) <= 1.5 + 1e-3;

  r.pass = tie_ok && line_ok;
  r.detail = std::string("tie point (") + format_scientific(g2[0]) + ", " +
             format_scientific(g2[1]) + "), collinear objective " +
             format_scientific(gm_objective(lc, g4));
  return r;
}

}  // namespace checkdetail

// trials is the instance count for the largest battery (concentration);
// every other battery scales proportionally. inject_bug perturbs GM outputs
// so CI can verify the battery has teeth.
inline std::vector<CheckResult> run_oracle_checks(int trials = 1000, bool inject_bug = false) {
  const double scale = static_cast<double>(trials) / 1000.0;
  std::vector<CheckResult> out;
  out.push_back(checkdetail::gm_vs_bruteforce(scale, inject_bug));
  out.push_back(checkdetail::gm_concentration(scale, inject_bug));
  out.push_back(checkdetail::gm_symmetrization(scale));
  out.push_back(checkdetail::psd_inversion_ordering(scale));
  out.push_back(checkdetail::translation_equivariance(scale, inject_bug));
  out.push_back(checkdetail::breakdown_sanity(scale, inject_bug));
  out.push_back(checkdetail::mom_degeneracies(scale, inject_bug));
  out.push_back(checkdetail::bruteforce_ties());
  return out;
}

}  // namespace byzbandit
