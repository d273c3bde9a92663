#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "byzbandit/robust_agg.hpp"

using namespace byzbandit;

namespace {

Vector vec2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

bool bits_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

constexpr double kFermatCoord = 0.21132486540518713;   // (3 - sqrt(3)) / 6
constexpr double kFermatObjective = 0.6439505508593789;

}  // namespace

TEST_CASE("PointCloud::make coerces malformed points to zero") {
  Vector bad(3);
  bad << 1, 2, 3;
  Vector nan = vec2(0.5, std::numeric_limits<double>::quiet_NaN());
  const PointCloud c = PointCloud::make(2, {vec2(1, 2), bad, nan});
  REQUIRE(c.n() == 3);
  REQUIRE(bits_equal(c.pts[0], vec2(1, 2)));
  REQUIRE(c.pts[1].norm() == 0.0);
  REQUIRE(c.pts[2].norm() == 0.0);
}

TEST_CASE("flatten is row-major and unflatten inverts it") {
  Matrix m(2, 2);
  m << 1, 2, 3, 4;
  const Vector f = flatten(m);
  REQUIRE(f[0] == 1.0);
  REQUIRE(f[1] == 2.0);
  REQUIRE(f[2] == 3.0);
  REQUIRE(f[3] == 4.0);
  REQUIRE((unflatten(f, 2) - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix_cloud zeroes asymmetric and non-finite matrices") {
  Matrix sym(2, 2), asym(2, 2), inf(2, 2);
  sym << 1, 2, 2, 1;
  asym << 0, 1, 0, 0;
  inf << 1, 0, 0, std::numeric_limits<double>::infinity();
  const PointCloud c = matrix_cloud(2, {sym, asym, inf});
  REQUIRE(c.dim == 4);
  REQUIRE(bits_equal(c.pts[0], flatten(sym)));
  REQUIRE(c.pts[1].norm() == 0.0);
  REQUIRE(c.pts[2].norm() == 0.0);
}

TEST_CASE("arithmetic_mean and mean_of") {
  const PointCloud c = PointCloud::make(2, {vec2(1, 0), vec2(3, 0), vec2(5, 6)});
  REQUIRE(bits_equal(mean_of(c, {0, 1}), vec2(2, 0)));
  const Vector m = arithmetic_mean(c);
  REQUIRE_THAT(m[0], Catch::Matchers::WithinAbs(3.0, 1e-15));
  REQUIRE_THAT(m[1], Catch::Matchers::WithinAbs(2.0, 1e-15));
}

TEST_CASE("gm_objective is the mean distance") {
  const PointCloud c = PointCloud::make(2, {vec2(0, 0), vec2(2, 0)});
  REQUIRE(gm_objective(c, vec2(1, 0)) == 1.0);
  REQUIRE(gm_objective(c, vec2(0, 0)) == 1.0);
}

TEST_CASE("coordinatewise_median handles odd and even counts") {
  Vector a(1), b(1), c(1), d(1);
  a << 1;
  b << 2;
  c << 9;
  d << 10;
  const PointCloud odd = PointCloud::make(1, {c, a, b});
  REQUIRE(coordinatewise_median(odd)[0] == 2.0);
  const PointCloud even = PointCloud::make(1, {d, a, c, b});
  REQUIRE(coordinatewise_median(even)[0] == 5.5);
}

TEST_CASE("geometric_median of a singleton is a bitwise copy") {
  const PointCloud c = PointCloud::make(2, {vec2(0.1, -7.3)});
  const GmResult res = geometric_median(c, 0.0);
  REQUIRE(res.converged);
  REQUIRE(bits_equal(res.point, vec2(0.1, -7.3)));
}

TEST_CASE("geometric_median finds the Fermat point of a right triangle") {
  const PointCloud c = PointCloud::make(2, {vec2(0, 0), vec2(1, 0), vec2(0, 1)});
  const GmResult res = geometric_median(c, 1e-9);
  REQUIRE(res.converged);
  REQUIRE_FALSE(res.hit_max_iter);
  REQUIRE_THAT(res.point[0], Catch::Matchers::WithinAbs(kFermatCoord, 1e-4));
  REQUIRE_THAT(res.point[1], Catch::Matchers::WithinAbs(kFermatCoord, 1e-4));
  // The certificate bounds the objective gap directly.
  REQUIRE_THAT(gm_objective(c, res.point),
               Catch::Matchers::WithinAbs(kFermatObjective, 2e-9));
}

TEST_CASE("geometric_median snaps to a coincident majority") {
  const Vector center = vec2(1, 2);
  const PointCloud c =
      PointCloud::make(2, {center, center, center, vec2(100, -50)});
  const GmResult res = geometric_median(c, 1e-9);
  REQUIRE(res.converged);
  REQUIRE(res.iterations == 0);  // the coordinatewise-median start already certifies
  REQUIRE(bits_equal(res.point, center));
}

TEST_CASE("geometric_median tracks the brute-force oracle") {
  Rng rng(2039);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(5));
    std::vector<Vector> pts;
    for (int i = 0; i < n; ++i)
      pts.push_back(vec2(rng.uniform(-1, 1), rng.uniform(-1, 1)));
    const PointCloud c = PointCloud::make(2, pts);
    const GmResult wz = geometric_median(c, 1e-6);
    const Vector bf = brute_force_gm(c, 2e-3);
    REQUIRE(wz.converged);
    REQUIRE(gm_objective(c, wz.point) <= gm_objective(c, bf) + 1.1e-6);
  }
}

TEST_CASE("brute_force_gm guards and tie-breaking") {
  const PointCloud big = PointCloud::make(5, {Vector::Zero(5)});
  REQUIRE_THROWS_AS(brute_force_gm(big, 0.1), DimensionTooLarge);
  const PointCloud c = PointCloud::make(2, {vec2(0, 0), vec2(1, 0)});
  REQUIRE_THROWS_AS(brute_force_gm(c, 0.0), ConfigError);
  // Every point on the segment ties; the lexicographically first grid point
  // that attains the optimum is (0, 0).
  const Vector best = brute_force_gm(c, 0.5);
  REQUIRE(best[0] == 0.0);
  REQUIRE(best[1] == 0.0);
}

TEST_CASE("matrix geometric median of three diagonal matrices") {
  Matrix z = Matrix::Zero(2, 2), e1 = Matrix::Zero(2, 2), e2 = Matrix::Zero(2, 2);
  e1(0, 0) = 2.0;
  e2(1, 1) = 2.0;
  // Congruent to the unit right triangle scaled by 2, so the optimum is
  // diag(2t, 2t) with t the Fermat coordinate.
  const MatrixGmResult res = geometric_median_matrices(2, {z, e1, e2}, 1e-9);
  REQUIRE(res.stats.converged);
  REQUIRE_THAT(res.sym.mat()(0, 0), Catch::Matchers::WithinAbs(2 * kFermatCoord, 1e-4));
  REQUIRE_THAT(res.sym.mat()(1, 1), Catch::Matchers::WithinAbs(2 * kFermatCoord, 1e-4));
  // Off-diagonal coordinates are zero in every input, and Weiszfeld iterates
  // stay inside the convex hull coordinatewise.
  REQUIRE(res.sym.mat()(0, 1) == 0.0);
  REQUIRE(res.sym.mat()(1, 0) == 0.0);
}

TEST_CASE("partition_agents validates and balances") {
  Rng rng(5);
  REQUIRE_THROWS_AS(partition_agents(11, 4, rng), InvalidCorruptionBound);
  REQUIRE_THROWS_AS(partition_agents(0, 0, rng), ConfigError);
  REQUIRE_THROWS_AS(partition_agents(4, -1, rng), ConfigError);

  const GroupPartition p = partition_agents(10, 2, rng);
  REQUIRE(p.groups.size() == 6);
  std::vector<int> seen;
  for (const auto& g : p.groups) {
    REQUIRE((g.size() == 1 || g.size() == 2));
    REQUIRE(std::is_sorted(g.begin(), g.end()));
    seen.insert(seen.end(), g.begin(), g.end());
  }
  std::sort(seen.begin(), seen.end());
  REQUIRE(seen.size() == 10);
  for (int i = 0; i < 10; ++i) REQUIRE(seen[static_cast<std::size_t>(i)] == i);

  // No corruption: one group holding everyone in order.
  Rng rng2(5);
  const GroupPartition whole = partition_agents(4, 0, rng2);
  REQUIRE(whole.groups.size() == 1);
  REQUIRE(whole.groups[0] == std::vector<int>{0, 1, 2, 3});

  // Same seed, same partition.
  Rng r3(99), r4(99);
  REQUIRE(partition_agents(9, 3, r3).groups == partition_agents(9, 3, r4).groups);
}

TEST_CASE("gm_of_means with a single group is bitwise the arithmetic mean") {
  Rng rng(7);
  std::vector<Vector> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(rng.normal_vector(3, 2.0));
  const PointCloud c = PointCloud::make(3, pts);
  Rng prng(1);
  const GroupPartition p = partition_agents(5, 0, prng);
  const GmResult res = gm_of_means(c, p, 1e-6);
  REQUIRE(bits_equal(res.point, arithmetic_mean(c)));
}

TEST_CASE("gm_of_means with singleton groups is bitwise the geometric median") {
  Rng rng(8);
  std::vector<Vector> pts;
  for (int i = 0; i < 9; ++i) pts.push_back(rng.normal_vector(2, 1.0));
  const PointCloud c = PointCloud::make(2, pts);
  // Identity-ordered singleton groups: the means cloud is the input cloud
  // itself, so the reduction must be exact. (A permuted deal would reorder
  // the summation and only match up to round-off.)
  GroupPartition p;
  p.agents = 9;
  for (int i = 0; i < 9; ++i) p.groups.push_back({i});
  const GmResult grouped = gm_of_means(c, p, 1e-8);
  const GmResult direct = geometric_median(c, 1e-8);
  REQUIRE(bits_equal(grouped.point, direct.point));
}

TEST_CASE("gm_of_means on two group means lands on the segment optimum") {
  const PointCloud c = PointCloud::make(2, {vec2(0, 0), vec2(2, 0), vec2(5, 5)});
  GroupPartition p;
  p.agents = 3;
  p.groups = {{0, 1}, {2}};
  // Means are (1, 0) and (5, 5); any point of the connecting segment is
  // optimal with mean distance |m1 - m2| / 2 = sqrt(41) / 2.
  const GmResult res = gm_of_means(c, p, 1e-6);
  const PointCloud means = PointCloud::make(2, {vec2(1, 0), vec2(5, 5)});
  REQUIRE_THAT(gm_objective(means, res.point),
               Catch::Matchers::WithinAbs(3.2015621187164243, 2e-6));
}

TEST_CASE("geometric median resists a large minority of huge outliers") {
  Rng rng(31337);
  for (int trial = 0; trial < 20; ++trial) {
    const int honest = 7, bad = 3;
    std::vector<Vector> pts;
    Vector center = rng.normal_vector(3, 1.0);
    for (int i = 0; i < honest; ++i) pts.push_back(center + rng.normal_vector(3, 0.5));
    for (int i = 0; i < bad; ++i) pts.push_back(Vector(1e9 * rng.unit_sphere(3)));
    const GmResult res = geometric_median(PointCloud::make(3, pts), 1e-6);
    REQUIRE(res.point.norm() < 100.0);
  }
}

TEST_CASE("empty cloud is rejected") {
  REQUIRE_THROWS_AS(geometric_median(PointCloud::make(2, {})), ConfigError);
}
