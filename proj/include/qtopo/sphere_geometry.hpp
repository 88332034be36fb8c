#pragma once
// Metric geometry of the round unit sphere: points, sensor nets, covering
// checks, admissible parameter ranges and partitions of unity.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qtopo/error.hpp"

namespace qtopo {

inline constexpr double kPi = std::numbers::pi;

/// A point of the unit sphere. Construction validates |v| = 1 within 1e-12.
class SpherePoint {
 public:
  SpherePoint() : v_(0.0, 0.0, 1.0) {}

  explicit SpherePoint(const Eigen::Vector3d& v) : v_(v) {
    if (!std::isfinite(v.squaredNorm()) || std::abs(v.norm() - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "SpherePoint: vector (" << v.x() << ", " << v.y() << ", " << v.z()
          << ") is not a unit vector";
      throw ValidationError(msg.str());
    }
  }

  SpherePoint(double x, double y, double z) : SpherePoint(Eigen::Vector3d(x, y, z)) {}

  static SpherePoint normalized(const Eigen::Vector3d& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw ValidationError("SpherePoint::normalized: zero or non-finite vector");
    }
    return SpherePoint(Eigen::Vector3d(v / n));
  }

  /// Polar angle theta measured from the north pole (0, 0, 1), azimuth phi.
  static SpherePoint from_angles(double theta, double phi) {
    const double s = std::sin(theta);
    return normalized(Eigen::Vector3d(s * std::cos(phi), s * std::sin(phi), std::cos(theta)));
  }

  static SpherePoint north() { return SpherePoint(0.0, 0.0, 1.0); }
  static SpherePoint south() { return SpherePoint(0.0, 0.0, -1.0); }

  const Eigen::Vector3d& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  double polar() const { return std::atan2(std::hypot(v_.x(), v_.y()), v_.z()); }
  double azimuth() const { return std::atan2(v_.y(), v_.x()); }

 private:
  Eigen::Vector3d v_;
};

/// Great-circle distance in radians, in [0, pi].
inline double geodesic_distance(const SpherePoint& p, const SpherePoint& q) {
  return std::atan2(p.vec().cross(q.vec()).norm(), p.vec().dot(q.vec()));
}

/// Finite sensor set with cached pairwise distances.
class SensorNet {
 public:
  SensorNet() = default;

  explicit SensorNet(std::vector<SpherePoint> points) : points_(std::move(points)) {
    const auto n = static_cast<Eigen::Index>(points_.size());
    distances_ = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = geodesic_distance(points_[i], points_[j]);
        distances_(i, j) = d;
        distances_(j, i) = d;
      }
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<SpherePoint>& points() const { return points_; }
  const SpherePoint& point(std::size_t i) const { return points_.at(i); }
  double distance(std::size_t i, std::size_t j) const {
    return distances_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& distances() const { return distances_; }

  /// Net radius rho such that the balls B(z, rho) cover the sphere, if verified.
  std::optional<double> net_radius() const { return net_radius_; }

  SensorNet with_net_radius(double rho) const {
    SensorNet copy = *this;
    copy.net_radius_ = rho;
    return copy;
  }

  /// Applies a rotation to every sensor; distances are unchanged.
  SensorNet rotated(const Eigen::Matrix3d& rotation) const {
    std::vector<SpherePoint> pts;
    pts.reserve(points_.size());
    for (const auto& p : points_) pts.push_back(SpherePoint::normalized(rotation * p.vec()));
    SensorNet out(std::move(pts));
    out.net_radius_ = net_radius_;
    return out;
  }

  /// FNV-1a over the coordinate bits; used as an operator cache key.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& p : points_) {
      for (int c = 0; c < 3; ++c) {
        double v = p.vec()[c];
        std::uint64_t bits = 0;
        std::memcpy(&bits, &v, sizeof bits);
        for (int b = 0; b < 8; ++b) {
          h ^= (bits >> (8 * b)) & 0xffU;
          h *= 1099511628211ULL;
        }
      }
    }
    return h;
  }

 private:
  std::vector<SpherePoint> points_;
  Eigen::MatrixXd distances_;
  std::optional<double> net_radius_;
};

/// Golden-angle spiral with n points.
inline SensorNet fibonacci_net(std::size_t n) {
  if (n == 0) throw ValidationError("fibonacci_net: n must be at least 1");
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<SpherePoint> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    pts.push_back(SpherePoint::normalized(Eigen::Vector3d(rho * std::cos(phi), rho * std::sin(phi), z)));
  }
  return SensorNet(std::move(pts));
}

/// Vertices of the icosahedron refined `levels` times by edge midpoints;
/// 10 * 4^levels + 2 points.
inline std::vector<Eigen::Vector3d> icosahedral_grid(int levels) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                                    {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                                    {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < levels; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return v;
}

struct NetRadiusCheck {
  bool covered = false;
  double max_distance = 0.0;  ///< max over probes of the distance to the nearest sensor
  SpherePoint witness;        ///< probe attaining max_distance
  std::size_t probes = 0;
};

/// Max-min distance from a probe grid to the net.
inline NetRadiusCheck probe_covering_radius(const SensorNet& net, int levels = 7) {
  if (net.empty()) throw ValidationError("verify_net_radius: empty net");
  const auto grid = icosahedral_grid(levels);
  NetRadiusCheck out;
  out.probes = grid.size();
  double worst_cos = 2.0;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double best = -2.0;
    for (const auto& s : net.points()) best = std::max(best, s.vec().dot(grid[i]));
    if (best < worst_cos) {
      worst_cos = best;
      worst = i;
    }
  }
  out.witness = SpherePoint::normalized(grid[worst]);
  double nearest = kPi;
  for (const auto& s : net.points()) nearest = std::min(nearest, geodesic_distance(s, out.witness));
  out.max_distance = nearest;
  return out;
}

/// True iff every probe of an icosahedral grid (level 7: 163842 points) lies
/// within rho of some sensor.
inline NetRadiusCheck verify_net_radius(const SensorNet& net, double rho, int levels = 7) {
  if (!(rho > 0.0)) throw ValidationError("verify_net_radius: rho must be positive");
  auto out = probe_covering_radius(net, levels);
  out.covered = out.max_distance < rho;
  return out;
}

/// Parameter ranges tied to a net of radius r/2.
struct AdmissibleRange {
  double r = 0.0;
  double r_prime = 0.0;
  double lambda = 1.0;
  double m = 0.5;
  double interval_lo = 0.0;  ///< 2 r lambda
  double interval_hi = 0.0;  ///< 2 r' / lambda
  bool strict = false;
  bool needs_diamond = false;  ///< m >= 1: the support-tangency condition must be checked
  bool ratio_ok = false;       ///< r'/r > 4 lambda^4
  std::optional<double> a;
  std::optional<double> b;
  bool endpoints_in_interior = false;
  bool endpoint_ratio_ok = false;  ///< b/a > 4 lambda^2
  std::vector<std::string> notes;

  /// Smallest b allowed by b/a > 4 lambda^2.
  double min_b_for(double a_value) const { return 4.0 * lambda * lambda * a_value; }

  bool interior(double s) const { return s > interval_lo && s < interval_hi; }

  /// Fixes the two ranges a < b. Strict mode rejects violations of the
  /// inequalities; relaxed mode records them.
  AdmissibleRange with_endpoints(double a_value, double b_value) const {
    if (!(a_value > 0.0) || !(b_value > a_value)) {
      throw ValidationError("admissible_range: need 0 < a < b");
    }
    AdmissibleRange out = *this;
    out.a = a_value;
    out.b = b_value;
    out.endpoints_in_interior = interior(a_value) && interior(b_value);
    out.endpoint_ratio_ok = b_value / a_value > 4.0 * lambda * lambda;
    if (strict) {
      if (!out.endpoints_in_interior) {
        std::ostringstream msg;
        msg << "strict mode: a = " << a_value << " and b = " << b_value
            << " must lie in the interior of [2 r lambda, 2 r'/lambda] = [" << interval_lo << ", "
            << interval_hi << "]";
        throw ValidationError(msg.str());
      }
      if (!out.endpoint_ratio_ok) {
        std::ostringstream msg;
        msg << "strict mode: inequality b/a > 4 lambda^2 violated (b/a = " << b_value / a_value
            << ", 4 lambda^2 = " << 4.0 * lambda * lambda << ", need b > " << min_b_for(a_value) << ")";
        throw ValidationError(msg.str());
      }
    } else {
      if (!out.endpoints_in_interior) out.notes.push_back("relaxed: a or b outside the interior of I");
      if (!out.endpoint_ratio_ok) out.notes.push_back("relaxed: b/a > 4 lambda^2 not satisfied");
    }
    return out;
  }
};

inline AdmissibleRange admissible_range(double r, double r_prime, double lambda, double m, bool strict) {
  if (!(lambda > 1.0)) throw ValidationError("admissible_range: lambda must exceed 1");
  if (!(r > 0.0) || !(r_prime > r)) throw ValidationError("admissible_range: need 0 < r < r'");
  if (!(4.0 * r_prime < kPi / 2.0)) {
    throw ValidationError("admissible_range: convexity bound 4 r' < pi/2 violated");
  }
  if (!(m > 0.0)) throw ValidationError("admissible_range: m must be positive");
  AdmissibleRange out;
  out.r = r;
  out.r_prime = r_prime;
  out.lambda = lambda;
  out.m = m;
  out.strict = strict;
  out.interval_lo = 2.0 * r * lambda;
  out.interval_hi = 2.0 * r_prime / lambda;
  out.needs_diamond = m >= 1.0;
  out.ratio_ok = r_prime / r > 4.0 * std::pow(lambda, 4);
  if (!out.ratio_ok) {
    std::ostringstream msg;
    msg << "inequality r'/r > 4 lambda^4 violated (r'/r = " << r_prime / r
        << ", 4 lambda^4 = " << 4.0 * std::pow(lambda, 4) << ", need r < "
        << r_prime / (4.0 * std::pow(lambda, 4)) << ")";
    if (strict) throw ValidationError("strict mode: " + msg.str());
    out.notes.push_back("relaxed: " + msg.str());
  }
  return out;
}

/// Quintic smoothstep: 0 at s <= 0, 1 at s >= 1, C^2.
inline double smoothstep5(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

/// Partition of unity subordinated to the balls B(z, lambda eps / 2):
/// f_z = g_z / sum_w g_w with g_z = 1 on the closed ball of radius
/// eps/(2 lambda) and g_z = 0 outside the open ball of radius outer_radius.
class PartitionOfUnity {
 public:
  PartitionOfUnity(SensorNet net, double epsilon, double lambda, double inner, double outer)
      : net_(std::move(net)),
        epsilon_(epsilon),
        lambda_(lambda),
        inner_(inner),
        outer_(outer),
        cos_outer_(std::cos(outer)) {}

  const SensorNet& net() const { return net_; }
  std::size_t size() const { return net_.size(); }
  double epsilon() const { return epsilon_; }
  double lambda() const { return lambda_; }
  double inner_radius() const { return inner_; }
  double outer_radius() const { return outer_; }

  /// Unnormalized bump g_z(x).
  double bump(std::size_t z, const SpherePoint& x) const {
    const double c = net_.point(z).vec().dot(x.vec());
    if (outer_ < kPi && c <= cos_outer_) return 0.0;
    return profile(geodesic_distance(net_.point(z), x));
  }

  double profile(double d) const {
    if (d <= inner_) return 1.0;
    if (d >= outer_) return 0.0;
    return smoothstep5((outer_ - d) / (outer_ - inner_));
  }

  /// Nonzero values f_z(x) as (z, value) pairs, sorted by z.
  std::vector<std::pair<std::size_t, double>> evaluate(const SpherePoint& x) const {
    std::vector<std::pair<std::size_t, double>> out;
    double total = 0.0;
    for (std::size_t z = 0; z < net_.size(); ++z) {
      const double g = bump(z, x);
      if (g > 0.0) {
        out.emplace_back(z, g);
        total += g;
      }
    }
    if (!(total > 0.0)) {
      throw NumericalError("PartitionOfUnity: point outside every support (inner balls do not cover)");
    }
    for (auto& e : out) e.second /= total;
    return out;
  }

  double value(std::size_t z, const SpherePoint& x) const {
    for (const auto& [idx, v] : evaluate(x)) {
      if (idx == z) return v;
    }
    return 0.0;
  }

  /// Interiors of supp f_z and supp f_w intersect, decided from radii.
  bool supports_overlap(std::size_t z, std::size_t w) const {
    return z == w || net_.distance(z, w) < 2.0 * outer_;
  }

 private:
  SensorNet net_;
  double epsilon_;
  double lambda_;
  double inner_;
  double outer_;
  double cos_outer_;
};

inline constexpr double kOuterShrink = 1.0 - 1e-6;

/// Builds the partition at range epsilon. `support_scale` multiplies both
/// radii; it exists for constructing deliberately shrunk counterexamples.
inline PartitionOfUnity build_partition(const SensorNet& net, double epsilon, double lambda,
                                        double support_scale = 1.0, int probe_levels = 5) {
  if (net.empty()) throw ValidationError("build_partition: empty net");
  if (!(lambda > 1.0)) throw ValidationError("build_partition: lambda must exceed 1");
  if (!(epsilon > 0.0)) throw ValidationError("build_partition: epsilon must be positive");
  if (!(support_scale > 0.0)) throw ValidationError("build_partition: support_scale must be positive");
  const double inner = support_scale * epsilon / (2.0 * lambda);
  const double outer = support_scale * kOuterShrink * lambda * epsilon / 2.0;
  PartitionOfUnity pou(net, epsilon, lambda, inner, outer);
  const double cos_outer = std::cos(outer);
  for (const auto& p : icosahedral_grid(probe_levels)) {
    bool hit = false;
    for (const auto& s : net.points()) {
      if (outer >= kPi || s.vec().dot(p) > cos_outer) {
        hit = true;
        break;
      }
    }
    if (!hit) {
      std::ostringstream msg;
      msg << "build_partition: supports of radius " << outer << " fail to cover the probe point ("
          << p.x() << ", " << p.y() << ", " << p.z() << ")";
      throw ValidationError(msg.str());
    }
  }
  return pou;
}

/// Tangency test for the support-disjointness assumption: false iff some pair
/// of closed supports touches only along their boundaries (|d - 2 outer| < tol).
inline bool check_disjointness_assumption(const SensorNet& net, double epsilon, double lambda, double tol) {
  const double outer = kOuterShrink * lambda * epsilon / 2.0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (std::size_t j = i + 1; j < net.size(); ++j) {
      if (std::abs(net.distance(i, j) - 2.0 * outer) < tol) return false;
    }
  }
  return true;
}

/// Same test with an explicit support radius (closed balls of radius s).
inline bool check_disjointness_for_radius(const SensorNet& net, double support_radius, double tol) {
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (std::size_t j = i + 1; j < net.size(); ++j) {
      if (std::abs(net.distance(i, j) - 2.0 * support_radius) < tol) return false;
    }
  }
  return true;
}

inline void write_net_csv(const SensorNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "x,y,z\n";
  out.precision(17);
  for (const auto& p : net.points()) out << p.x() << ',' << p.y() << ',' << p.z() << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline SensorNet read_net_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::vector<SpherePoint> pts;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.find_first_of("xyzXYZ") != std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0, y = 0, z = 0;
    if (!(row >> x >> y >> z)) throw IoError(path + ": malformed row " + std::to_string(lineno));
    pts.push_back(SpherePoint::normalized(Eigen::Vector3d(x, y, z)));
  }
  if (pts.empty()) throw IoError(path + ": no sensors");
  return SensorNet(std::move(pts));
}

}  // namespace qtopo
