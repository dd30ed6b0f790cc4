#pragma once

// Deterministic construction of the six counterexample families
// (Lambda / Gamma / G, each in a time-focusing "p" and a space-spreading "q"
// variant) as sums of modulated Gaussian tubes of width C R.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "collapse/detail/numeric.hpp"
#include "collapse/errors.hpp"
#include "collapse/types.hpp"

namespace collapse {

enum class AmbientConstraint { Sphere, EqualNormSurface, Cone, Ball };

inline std::string to_string(AmbientConstraint c) {
  switch (c) {
    case AmbientConstraint::Sphere: return "sphere";
    case AmbientConstraint::EqualNormSurface: return "equal-norm-surface";
    case AmbientConstraint::Cone: return "cone";
    case AmbientConstraint::Ball: return "ball";
  }
  return "?";
}

struct PointCloud {
  std::vector<RealVec> points;
  double min_spacing = 0.0;
  AmbientConstraint constraint = AmbientConstraint::Sphere;
  double scale = 0.0;  // R for surfaces, R^m (ball radius) for lattices
  int block_dim = 1;
  bool coordinate_floor = false;

  std::size_t size() const { return points.size(); }
};

struct FamilySpec {
  FamilyKind family = FamilyKind::LambdaP;
  int n = 1;
  double R = 64.0;
  std::optional<double> C;  // unset: calibrated tube constant
  int m = 1;
  RealVec direction;        // unit n-vector; empty means e_1
  bool coordinate_floor = true;
  std::uint64_t seed = 0;
  std::size_t q_cap = std::size_t{1} << 20;

  RealVec direction_or_default() const {
    if (!direction.empty()) return direction;
    RealVec e(n, 0.0);
    e[0] = 1.0;
    return e;
  }

  void validate() const {
    if (family == FamilyKind::Custom) throw ConfigError("family: custom families cannot be built");
    if (n < 1) throw ConfigError("n: must be >= 1 (got " + std::to_string(n) + ")");
    if (!(R >= 4.0)) throw ConfigError("R: must be >= 4 (got " + std::to_string(R) + ")");
    if (C && !(*C >= 1.0)) throw ConfigError("C: must be >= 1 (got " + std::to_string(*C) + ")");
    if (is_q_family(family)) {
      if (m < 1) throw ConfigError("m: must be >= 1 (got " + std::to_string(m) + ")");
      const RealVec d = direction_or_default();
      if (static_cast<int>(d.size()) != n) throw ConfigError("direction: must have length n");
      if (std::abs(std::sqrt(norm2(d)) - 1.0) > 1e-12) throw ConfigError("direction: must be a unit vector");
    }
  }
};

/// Smallest integer C >= 1 for which the real part of the evolved unit tube
/// exp(-|x|^2/(2 C R)) stays >= threshold on |x_j| <= R^{1/2} (every block),
/// 0 <= t <= R. In the variables tau = t/R, rho_j = |x_j|^2/R the tube is
/// prod_j (1 + s_j i tau/C)^{-n_j/2} exp(-rho_j / (2 (C + s_j i tau))), which
/// does not depend on R; the minimum is taken over a grid in (tau, rho).
inline double calibrated_tube_constant(const BlockSignature& sig, double threshold = 0.5) {
  static std::mutex mu;
  static std::map<std::string, double> cache;
  const std::string key = sig.to_string() + "@" + std::to_string(threshold);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const auto& blocks = sig.blocks();
  const std::size_t nb = blocks.size();
  constexpr int kTau = 101, kRho = 11;
  auto min_real_part = [&](double C) {
    double lo = std::numeric_limits<double>::infinity();
    std::vector<int> idx(nb, 0);
    std::size_t combos = 1;
    for (std::size_t j = 0; j < nb; ++j) combos *= kRho;
    for (int it = 0; it < kTau; ++it) {
      const double tau = static_cast<double>(it) / (kTau - 1);
      for (std::size_t c = 0; c < combos; ++c) {
        std::size_t rem = c;
        cplx v(1.0, 0.0);
        for (std::size_t j = 0; j < nb; ++j) {
          const double rho = static_cast<double>(rem % kRho) / (kRho - 1);
          rem /= kRho;
          const double s = blocks[j].sign;
          v *= std::exp(-0.5 * blocks[j].dim * std::log(cplx(1.0, s * tau / C)) - rho / (2.0 * cplx(C, s * tau)));
        }
        lo = std::min(lo, v.real());
      }
    }
    return lo;
  };
  double C = 1.0;
  while (min_real_part(C) < threshold) {
    C += 1.0;
    if (C > 1e4) throw ContractViolation("calibrated_tube_constant: no C <= 1e4 meets the threshold");
  }
  std::lock_guard lock(mu);
  cache[key] = C;
  return C;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Additive-recurrence (Kronecker) low-discrepancy sequence in [0,1)^dim with
/// the generalized golden ratio, started at a seed-dependent offset.
class KroneckerStream {
 public:
  KroneckerStream(int dim, std::uint64_t seed) : state_(dim), step_(dim) {
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    for (int j = 0; j < dim; ++j) {
      step_[j] = std::fmod(1.0 / std::pow(phi, j + 1), 1.0);
      state_[j] = static_cast<double>(splitmix64(seed * 0x100000001b3ULL + j) >> 11) * 0x1.0p-53;
    }
  }
  const RealVec& next() {
    for (std::size_t j = 0; j < state_.size(); ++j) {
      state_[j] += step_[j];
      if (state_[j] >= 1.0) state_[j] -= 1.0;
    }
    return state_;
  }

 private:
  RealVec state_, step_;
};

/// Unit vector in R^k from 2 ceil(k/2) uniforms via Box-Muller.
inline bool unit_vector_from(std::span<const double> u, int k, RealVec& out) {
  out.assign(k, 0.0);
  for (int i = 0; i < k; i += 2) {
    const double u1 = u[i], u2 = u[i + 1];
    if (u1 <= 0.0) return false;
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(2.0 * kPi * u2);
    if (i + 1 < k) out[i + 1] = r * std::sin(2.0 * kPi * u2);
  }
  const double nrm = std::sqrt(norm2(out));
  if (nrm < 1e-12) return false;
  for (double& v : out) v /= nrm;
  return true;
}

inline std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

/// Accepted points bucketed by their first (up to) three coordinates on a
/// grid of cell size `spacing`. Any point closer than `spacing` is also that
/// close in the projected coordinates, so a query visits at most 27 cells.
class SpacingIndex {
 public:
  explicit SpacingIndex(double spacing) : spacing_(spacing) {}

  bool far_from_all(const RealVec& p) const {
    const std::size_t k = std::min<std::size_t>(p.size(), 3);
    std::array<std::int64_t, 3> base{0, 0, 0};
    for (std::size_t i = 0; i < k; ++i) base[i] = cell_of(p[i]);
    std::size_t combos = 1;
    for (std::size_t i = 0; i < k; ++i) combos *= 3;
    const double s2 = spacing_ * spacing_;
    for (std::size_t c = 0; c < combos; ++c) {
      std::array<std::int64_t, 3> cell = base;
      std::size_t rem = c;
      for (std::size_t i = 0; i < k; ++i) {
        cell[i] += static_cast<std::int64_t>(rem % 3) - 1;
        rem /= 3;
      }
      auto it = cells_.find(cell);
      if (it == cells_.end()) continue;
      for (std::size_t idx : it->second)
        if (distance2(p, points_[idx]) < s2) return false;
    }
    return true;
  }

  void insert(const RealVec& p) {
    std::array<std::int64_t, 3> cell{0, 0, 0};
    for (std::size_t i = 0; i < std::min<std::size_t>(p.size(), 3); ++i) cell[i] = cell_of(p[i]);
    cells_[cell].push_back(points_.size());
    points_.push_back(p);
  }

  std::vector<RealVec> take() { return std::move(points_); }
  std::size_t size() const { return points_.size(); }

 private:
  std::int64_t cell_of(double x) const { return static_cast<std::int64_t>(std::floor(x / spacing_)); }

  double spacing_;
  std::vector<RealVec> points_;
  std::map<std::array<std::int64_t, 3>, std::vector<std::size_t>> cells_;
};

/// Greedy thinning: accept candidates in stream order when they are at least
/// `spacing` from every accepted point. Stops at `cap` points, after `budget`
/// candidates, or after a long run of consecutive rejections.
template <typename NextCandidate>
std::vector<RealVec> greedy_thin(NextCandidate&& next, double spacing, std::size_t cap, std::size_t budget) {
  SpacingIndex index(spacing);
  RealVec p;
  std::size_t stall = 0;
  for (std::size_t c = 0; c < budget && index.size() < cap; ++c) {
    if (!next(p)) continue;
    if (index.far_from_all(p)) {
      index.insert(p);
      stall = 0;
    } else if (++stall > std::max<std::size_t>(4096, 4 * index.size())) {
      break;
    }
  }
  return index.take();
}

inline std::size_t candidate_budget(std::size_t cap) { return 64 * cap + 4096; }

inline void require_nonempty(const std::vector<RealVec>& pts, const std::string& what) {
  if (pts.empty()) throw ConstructionError(what + ": admissible region produced no points (achieved 0)", 0);
}

}  // namespace detail

/// Points on the sphere |(x, y)| = R in R^{2n} with pairwise spacing >= R^{1/2},
/// at most ceil(R^{n-1/2}) of them. With the coordinate floor every coordinate
/// of point / R is >= 1/(10 n).
inline PointCloud sphere_points(double R, int n, std::uint64_t seed, bool coordinate_floor = true) {
  if (!(R >= 4.0)) throw ContractViolation("sphere_points: R must be >= 4");
  const double spacing = std::sqrt(R);
  const std::size_t cap = detail::ceil_count(std::pow(R, n - 0.5));
  const double floor_v = 1.0 / (10.0 * n);
  PointCloud cloud{{}, spacing, AmbientConstraint::Sphere, R, 2 * n, coordinate_floor};
  if (n == 1) {
    // circle: chord step exactly R^{1/2}, centered on the admissible arc
    const double step = 2.0 * std::asin(spacing / (2.0 * R)) * (1.0 + 1e-12);
    double lo = 0.0, hi = 2.0 * kPi - step;
    if (coordinate_floor) {
      lo = std::asin(floor_v);
      hi = std::acos(floor_v);
    }
    if (hi < lo) detail::require_nonempty({}, "sphere_points");
    const auto available = static_cast<std::size_t>(std::floor((hi - lo) / step)) + 1;
    const std::size_t count = std::min(available, cap);
    const double start = 0.5 * (lo + hi) - 0.5 * step * static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) {
      const double th = start + step * static_cast<double>(k);
      cloud.points.push_back({R * std::cos(th), R * std::sin(th)});
    }
    return cloud;
  }
  const int dim = 2 * n;
  detail::KroneckerStream stream(2 * ((dim + 1) / 2), seed);
  RealVec u;
  auto next = [&](RealVec& p) {
    if (!detail::unit_vector_from(stream.next(), dim, u)) return false;
    p.resize(dim);
    for (int i = 0; i < dim; ++i) {
      const double c = coordinate_floor ? std::abs(u[i]) : u[i];
      if (coordinate_floor && c < floor_v) return false;
      p[i] = R * c;
    }
    return true;
  };
  cloud.points = detail::greedy_thin(next, spacing, cap, detail::candidate_budget(cap));
  detail::require_nonempty(cloud.points, "sphere_points");
  return cloud;
}

/// Points (x, y) in R^{2n} with |x| = |y| in [R/2, R], spacing >= R^{1/2}, at
/// most ceil(R^{n-1/2}). With the floor, coordinates of x/R and of -y/R are
/// >= 1/(10 n).
inline PointCloud equal_norm_surface_points(double R, int n, std::uint64_t seed, bool coordinate_floor = true) {
  if (!(R >= 4.0)) throw ContractViolation("equal_norm_surface_points: R must be >= 4");
  const double spacing = std::sqrt(R);
  const std::size_t cap = detail::ceil_count(std::pow(R, n - 0.5));
  const double floor_v = 1.0 / (10.0 * n);
  PointCloud cloud{{}, spacing, AmbientConstraint::EqualNormSurface, R, n, coordinate_floor};
  if (n == 1) {
    // the lines y = +-x; along one line consecutive points are R^{1/2} apart
    const double dr = spacing / std::sqrt(2.0) * (1.0 + 1e-12);
    const auto steps = static_cast<std::size_t>(std::floor((R / 2.0) / dr));
    std::vector<RealVec> candidates;
    const std::vector<std::pair<int, int>> signs =
        coordinate_floor ? std::vector<std::pair<int, int>>{{1, -1}}
                         : std::vector<std::pair<int, int>>{{1, -1}, {1, 1}, {-1, 1}, {-1, -1}};
    for (std::size_t k = 0; k <= steps; ++k) {
      const double r = R / 2.0 + dr * static_cast<double>(k);
      for (auto [sx, sy] : signs) candidates.push_back({sx * r, sy * r});
    }
    std::size_t pos = 0;
    auto next = [&](RealVec& p) {
      p = candidates[pos++];
      return true;
    };
    cloud.points = detail::greedy_thin(next, spacing, cap, candidates.size());
    detail::require_nonempty(cloud.points, "equal_norm_surface_points");
    return cloud;
  }
  const int need = 1 + 2 * ((n + 1) / 2) * 2;
  detail::KroneckerStream stream(need + (need % 2), seed);
  RealVec u, v;
  const int half = 2 * ((n + 1) / 2);
  auto next = [&](RealVec& p) {
    const RealVec& s = stream.next();
    const double r = R / 2.0 + (R / 2.0) * s[0];
    if (!detail::unit_vector_from(std::span<const double>(s).subspan(1, half), n, u)) return false;
    if (!detail::unit_vector_from(std::span<const double>(s).subspan(1 + half, half), n, v)) return false;
    p.resize(2 * n);
    for (int i = 0; i < n; ++i) {
      const double ux = coordinate_floor ? std::abs(u[i]) : u[i];
      const double vy = coordinate_floor ? -std::abs(v[i]) : v[i];
      if (coordinate_floor && (r * ux / R < floor_v || -r * vy / R < floor_v)) return false;
      p[i] = r * ux;
      p[n + i] = r * vy;
    }
    return true;
  };
  cloud.points = detail::greedy_thin(next, spacing, cap, detail::candidate_budget(cap));
  detail::require_nonempty(cloud.points, "equal_norm_surface_points");
  return cloud;
}

/// Points (x, y, z) in R^{3n} with |x|^2 + |y|^2 = |z|^2 and |x|, |y| in
/// [R/2, R], spacing >= R^{1/2}, at most ceil(R^{(3n-1)/2}). With the floor,
/// coordinates of x/R, y/R and -z/R are >= 1/(10 n).
inline PointCloud cone_points(double R, int n, std::uint64_t seed, bool coordinate_floor = true) {
  if (!(R >= 4.0)) throw ContractViolation("cone_points: R must be >= 4");
  const double spacing = std::sqrt(R);
  const std::size_t cap = detail::ceil_count(std::pow(R, 0.5 * (3 * n - 1)));
  const double floor_v = 1.0 / (10.0 * n);
  PointCloud cloud{{}, spacing, AmbientConstraint::Cone, R, n, coordinate_floor};
  if (n == 1) {
    // (x, y) grid with step R^{1/2}; z = -+|(x, y)|
    const double step = spacing * (1.0 + 1e-12);
    const auto steps = static_cast<std::size_t>(std::floor((R / 2.0) / step));
    std::vector<RealVec> candidates;
    const std::vector<int> xs = coordinate_floor ? std::vector<int>{1} : std::vector<int>{1, -1};
    const std::vector<int> zs = coordinate_floor ? std::vector<int>{-1} : std::vector<int>{-1, 1};
    for (std::size_t i = 0; i <= steps; ++i)
      for (std::size_t j = 0; j <= steps; ++j)
        for (int sx : xs)
          for (int sy : xs)
            for (int sz : zs) {
              const double x = sx * (R / 2.0 + step * static_cast<double>(i));
              const double y = sy * (R / 2.0 + step * static_cast<double>(j));
              candidates.push_back({x, y, sz * std::hypot(x, y)});
            }
    std::size_t pos = 0;
    auto next = [&](RealVec& p) {
      p = candidates[pos++];
      return true;
    };
    cloud.points = detail::greedy_thin(next, spacing, cap, candidates.size());
    detail::require_nonempty(cloud.points, "cone_points");
    return cloud;
  }
  const int half = 2 * ((n + 1) / 2);
  detail::KroneckerStream stream(2 + 3 * half, seed);
  RealVec u1, u2, u3;
  auto next = [&](RealVec& p) {
    const RealVec& s = stream.next();
    const double r1 = R / 2.0 + (R / 2.0) * s[0];
    const double r2 = R / 2.0 + (R / 2.0) * s[1];
    const std::span<const double> sp(s);
    if (!detail::unit_vector_from(sp.subspan(2, half), n, u1)) return false;
    if (!detail::unit_vector_from(sp.subspan(2 + half, half), n, u2)) return false;
    if (!detail::unit_vector_from(sp.subspan(2 + 2 * half, half), n, u3)) return false;
    const double rz = std::hypot(r1, r2);
    p.resize(3 * n);
    for (int i = 0; i < n; ++i) {
      const double a = coordinate_floor ? std::abs(u1[i]) : u1[i];
      const double b = coordinate_floor ? std::abs(u2[i]) : u2[i];
      const double c = coordinate_floor ? -std::abs(u3[i]) : u3[i];
      if (coordinate_floor && (r1 * a / R < floor_v || r2 * b / R < floor_v || -rz * c / R < floor_v)) return false;
      p[i] = r1 * a;
      p[n + i] = r2 * b;
      p[2 * n + i] = rz * c;
    }
    return true;
  };
  cloud.points = detail::greedy_thin(next, spacing, cap, detail::candidate_budget(cap));
  detail::require_nonempty(cloud.points, "cone_points");
  return cloud;
}

/// Cubic lattice of spacing R^{1/2} intersected with the ball of radius R^m in
/// R^n, in lexicographic order. Throws ResourceError when the count exceeds cap.
inline PointCloud ball_lattice_points(double R, int m, int n, std::size_t cap) {
  if (m < 1) throw ContractViolation("ball_lattice_points: m must be >= 1");
  if (!(R >= 4.0)) throw ContractViolation("ball_lattice_points: R must be >= 4");
  const double h = std::sqrt(R);
  const double radius = std::pow(R, m);
  const double radius2 = radius * radius * (1.0 + 1e-12);
  const auto K = static_cast<long long>(std::floor(radius / h * (1.0 + 1e-12)));

  auto for_each_index = [&](auto&& fn) {
    std::vector<long long> k(n, -K);
    while (true) {
      double r2 = 0.0;
      for (int i = 0; i < n; ++i) r2 += static_cast<double>(k[i] * k[i]) * R;
      if (r2 <= radius2) fn(k);
      int i = n - 1;
      while (i >= 0 && k[i] == K) k[i--] = -K;
      if (i < 0) break;
      ++k[i];
    }
  };

  std::size_t count = 0;
  if (n == 1) {
    count = static_cast<std::size_t>(2 * K + 1);
  } else {
    for_each_index([&](const std::vector<long long>&) { ++count; });
  }
  if (count > cap)
    throw ResourceError("ball_lattice_points: " + std::to_string(count) + " points exceed cap " +
                            std::to_string(cap) + "; raise q_cap to at least " + std::to_string(count),
                        count);
  PointCloud cloud{{}, h, AmbientConstraint::Ball, radius, n, false};
  cloud.points.reserve(count);
  for_each_index([&](const std::vector<long long>& k) {
    RealVec p(n);
    for (int i = 0; i < n; ++i) p[i] = static_cast<double>(k[i]) * h;
    cloud.points.push_back(std::move(p));
  });
  return cloud;
}

/// Smallest pairwise distance (infinity for fewer than two points).
inline double min_pairwise_distance(const PointCloud& cloud) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < cloud.size(); ++a)
    for (std::size_t b = a + 1; b < cloud.size(); ++b)
      best = std::min(best, distance2(cloud.points[a], cloud.points[b]));
  return std::sqrt(best);
}

/// Recheck of spacing, ambient constraint (relative 1e-9) and coordinate floor.
/// Returns an empty string when every invariant holds, else the first failure.
inline std::string check_point_cloud(const PointCloud& cloud) {
  const double tol = 1e-9;
  const double R = cloud.scale;
  const int n = cloud.block_dim;
  if (cloud.size() > 1 && min_pairwise_distance(cloud) < cloud.min_spacing)
    return "spacing below " + std::to_string(cloud.min_spacing);
  const double floor_v = 1.0 / (10.0 * n);
  for (const RealVec& p : cloud.points) {
    switch (cloud.constraint) {
      case AmbientConstraint::Sphere: {
        if (std::abs(std::sqrt(norm2(p)) - R) > tol * R) return "point off the sphere";
        if (cloud.coordinate_floor)
          for (double c : p)
            if (c / R < 1.0 / (10.0 * (p.size() / 2)) - 1e-15) return "coordinate floor violated";
        break;
      }
      case AmbientConstraint::EqualNormSurface: {
        const std::span<const double> x(p.data(), n), y(p.data() + n, n);
        const double nx = std::sqrt(norm2(x)), ny = std::sqrt(norm2(y));
        if (std::abs(nx - ny) > tol * R) return "|x| != |y|";
        if (nx < R / 2.0 * (1 - tol) || nx > R * (1 + tol)) return "|x| outside [R/2, R]";
        if (cloud.coordinate_floor)
          for (int i = 0; i < n; ++i)
            if (x[i] / R < floor_v - 1e-15 || -y[i] / R < floor_v - 1e-15) return "coordinate floor violated";
        break;
      }
      case AmbientConstraint::Cone: {
        const std::span<const double> x(p.data(), n), y(p.data() + n, n), z(p.data() + 2 * n, n);
        const double lhs = norm2(x) + norm2(y), rhs = norm2(z);
        if (std::abs(lhs - rhs) > tol * rhs) return "cone condition violated";
        const double nx = std::sqrt(norm2(x)), ny = std::sqrt(norm2(y));
        if (nx < R / 2.0 * (1 - tol) || nx > R * (1 + tol) || ny < R / 2.0 * (1 - tol) || ny > R * (1 + tol))
          return "|x| or |y| outside [R/2, R]";
        if (cloud.coordinate_floor)
          for (int i = 0; i < n; ++i)
            if (x[i] / R < floor_v - 1e-15 || y[i] / R < floor_v - 1e-15 || -z[i] / R < floor_v - 1e-15)
              return "coordinate floor violated";
        break;
      }
      case AmbientConstraint::Ball: {
        if (std::sqrt(norm2(p)) > R * (1 + tol)) return "point outside the ball";
        break;
      }
    }
  }
  return {};
}

namespace detail {

inline double tube_width(const FamilySpec& spec) {
  const double C = spec.C ? *spec.C : calibrated_tube_constant(signature_for(spec.family, spec.n));
  return C * spec.R;
}

inline FamilyMeta meta_for(const FamilySpec& spec) {
  FamilyMeta meta;
  meta.family = spec.family;
  meta.R = spec.R;
  meta.C = tube_width(spec) / spec.R;
  if (is_q_family(spec.family)) meta.m = spec.m;
  meta.n = spec.n;
  return meta;
}

inline void require_family(const FamilySpec& spec, FamilyKind k) {
  spec.validate();
  if (spec.family != k) throw ContractViolation("builder called with family " + to_string(spec.family));
}

// p-family: one term per point, center -point, modulation sign_b * point_b / R.
inline WavepacketSum build_focusing(const FamilySpec& spec, const PointCloud& cloud, const std::vector<int>& mod_sign) {
  const double w = tube_width(spec);
  const BlockSignature sig = signature_for(spec.family, spec.n);
  std::vector<GaussianTerm> terms;
  terms.reserve(cloud.size());
  for (const RealVec& p : cloud.points) {
    GaussianTerm t;
    t.width = w;
    t.center.resize(p.size());
    t.modulation.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      t.center[i] = -p[i];
      t.modulation[i] = mod_sign[i / spec.n] * p[i] / spec.R;
    }
    terms.push_back(std::move(t));
  }
  return WavepacketSum(sig, std::move(terms), meta_for(spec));
}

// q-family: every block center is -x_k, block modulation mod_scale_b * xi.
inline WavepacketSum build_spreading(const FamilySpec& spec, const std::vector<double>& mod_scale) {
  const PointCloud cloud = ball_lattice_points(spec.R, spec.m, spec.n, spec.q_cap);
  const double w = tube_width(spec);
  const BlockSignature sig = signature_for(spec.family, spec.n);
  const RealVec xi = spec.direction_or_default();
  const std::size_t nb = mod_scale.size();
  RealVec modulation(nb * spec.n);
  for (std::size_t b = 0; b < nb; ++b)
    for (int i = 0; i < spec.n; ++i) modulation[b * spec.n + i] = mod_scale[b] * xi[i] + 0.0;
  std::vector<GaussianTerm> terms;
  terms.reserve(cloud.size());
  for (const RealVec& x : cloud.points) {
    GaussianTerm t;
    t.width = w;
    t.modulation = modulation;
    t.center.resize(nb * spec.n);
    for (std::size_t b = 0; b < nb; ++b)
      for (int i = 0; i < spec.n; ++i) t.center[b * spec.n + i] = -x[i] + 0.0;
    terms.push_back(std::move(t));
  }
  return WavepacketSum(sig, std::move(terms), meta_for(spec));
}

}  // namespace detail

inline WavepacketSum build_lambda_p(const FamilySpec& spec) {
  detail::require_family(spec, FamilyKind::LambdaP);
  return detail::build_focusing(spec, sphere_points(spec.R, spec.n, spec.seed, spec.coordinate_floor), {1, 1});
}

inline WavepacketSum build_gamma_p(const FamilySpec& spec) {
  detail::require_family(spec, FamilyKind::GammaP);
  return detail::build_focusing(spec, equal_norm_surface_points(spec.R, spec.n, spec.seed, spec.coordinate_floor),
                                {1, -1});
}

inline WavepacketSum build_g_p(const FamilySpec& spec) {
  detail::require_family(spec, FamilyKind::GP);
  return detail::build_focusing(spec, cone_points(spec.R, spec.n, spec.seed, spec.coordinate_floor), {1, 1, -1});
}

inline WavepacketSum build_lambda_q(const FamilySpec& spec) {
  detail::require_family(spec, FamilyKind::LambdaQ);
  return detail::build_spreading(spec, {1.0, 1.0});
}

inline WavepacketSum build_gamma_q(const FamilySpec& spec) {
  detail::require_family(spec, FamilyKind::GammaQ);
  return detail::build_spreading(spec, {1.0, 0.0});
}

inline WavepacketSum build_g_q(const FamilySpec& spec) {
  detail::require_family(spec, FamilyKind::GQ);
  return detail::build_spreading(spec, {1.0, 1.0, -1.0});
}

inline WavepacketSum build_family(const FamilySpec& spec) {
  switch (spec.family) {
    case FamilyKind::LambdaP: return build_lambda_p(spec);
    case FamilyKind::LambdaQ: return build_lambda_q(spec);
    case FamilyKind::GammaP: return build_gamma_p(spec);
    case FamilyKind::GammaQ: return build_gamma_q(spec);
    case FamilyKind::GP: return build_g_p(spec);
    case FamilyKind::GQ: return build_g_q(spec);
    case FamilyKind::Custom: break;
  }
  throw ConfigError("family: custom families cannot be built");
}

/// The point cloud a p-family is built from (recomputed, for invariant checks).
inline PointCloud family_points(const FamilySpec& spec) {
  switch (spec.family) {
    case FamilyKind::LambdaP: return sphere_points(spec.R, spec.n, spec.seed, spec.coordinate_floor);
    case FamilyKind::GammaP: return equal_norm_surface_points(spec.R, spec.n, spec.seed, spec.coordinate_floor);
    case FamilyKind::GP: return cone_points(spec.R, spec.n, spec.seed, spec.coordinate_floor);
    default: return ball_lattice_points(spec.R, spec.m, spec.n, spec.q_cap);
  }
}

}  // namespace collapse
