#pragma once
// Regions of the sphere built from open caps and boolean operations, plus the
// ring decomposition used to integrate piecewise-constant functions: on a
// circle of constant polar angle every cap cuts out an arc with closed-form
// endpoints, so azimuthal integrals over cap arrangements are exact.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "qtopo/error.hpp"
#include "qtopo/sphere_geometry.hpp"

namespace qtopo {

/// Open geodesic ball {x : d(x, center) < radius}.
struct Cap {
  SpherePoint center;
  double radius = 0.0;

  bool contains(const SpherePoint& x) const { return geodesic_distance(center, x) < radius; }
  bool polar() const { return std::abs(std::abs(center.z()) - 1.0) < 1e-15; }
};

/// Membership predicate assembled from caps with complement, intersection
/// and union. Membership is evaluated exactly from distances.
class Region {
 public:
  enum class Kind { kEmpty, kFull, kCap, kComplement, kIntersection, kUnion };

  static Region empty() { return Region(std::make_shared<Node>(Node{Kind::kEmpty, {}, {}})); }
  static Region full() { return Region(std::make_shared<Node>(Node{Kind::kFull, {}, {}})); }
  static Region cap(const SpherePoint& center, double radius) {
    if (!(radius >= 0.0)) throw ValidationError("Region::cap: negative radius");
    return Region(std::make_shared<Node>(Node{Kind::kCap, Cap{center, radius}, {}}));
  }
  /// {x : polar angle < theta0}.
  static Region polar_cap(double theta0) { return cap(SpherePoint::north(), theta0); }
  static Region hemisphere() { return polar_cap(kPi / 2.0); }

  Region complement() const {
    return Region(std::make_shared<Node>(Node{Kind::kComplement, {}, {node_}}));
  }
  friend Region operator&(const Region& a, const Region& b) {
    return Region(std::make_shared<Node>(Node{Kind::kIntersection, {}, {a.node_, b.node_}}));
  }
  friend Region operator|(const Region& a, const Region& b) {
    return Region(std::make_shared<Node>(Node{Kind::kUnion, {}, {a.node_, b.node_}}));
  }
  Region operator-(const Region& b) const { return *this & b.complement(); }

  Kind kind() const { return node_->kind; }

  bool contains(const SpherePoint& x) const { return eval(*node_, x); }

  std::vector<Cap> caps() const {
    std::vector<Cap> out;
    collect(*node_, out);
    return out;
  }

  /// Every cap is centred at a pole: the region is invariant under rotation
  /// about the z axis.
  bool zonal() const {
    for (const auto& c : caps()) {
      if (!c.polar()) return false;
    }
    return true;
  }

 private:
  struct Node {
    Kind kind;
    Cap cap;
    std::vector<std::shared_ptr<const Node>> children;
  };

  explicit Region(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static bool eval(const Node& n, const SpherePoint& x) {
    switch (n.kind) {
      case Kind::kEmpty:
        return false;
      case Kind::kFull:
        return true;
      case Kind::kCap:
        return n.cap.contains(x);
      case Kind::kComplement:
        return !eval(*n.children[0], x);
      case Kind::kIntersection:
        return eval(*n.children[0], x) && eval(*n.children[1], x);
      case Kind::kUnion:
        return eval(*n.children[0], x) || eval(*n.children[1], x);
    }
    return false;
  }

  static void collect(const Node& n, std::vector<Cap>& out) {
    if (n.kind == Kind::kCap) out.push_back(n.cap);
    for (const auto& c : n.children) collect(*c, out);
  }

  std::shared_ptr<const Node> node_;
};

/// Maximal arc [begin, end] of a ring (end may exceed 2 pi) on which a
/// piecewise-constant function takes `value`.
struct RingArc {
  double begin = 0.0;
  double end = 0.0;
  double value = 0.0;
};

/// Azimuths where the boundaries of `caps` cross the ring of polar cosine u.
inline std::vector<double> ring_breakpoints(const std::vector<Cap>& caps, double u) {
  const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
  std::vector<double> out;
  for (const auto& c : caps) {
    const double uc = c.center.z();
    const double sc = std::hypot(c.center.x(), c.center.y());
    if (s * sc < 1e-300) continue;
    const double q = (std::cos(c.radius) - u * uc) / (s * sc);
    if (q >= 1.0 || q <= -1.0) continue;
    const double half = std::acos(q);
    const double phic = std::atan2(c.center.y(), c.center.x());
    for (double phi : {phic - half, phic + half}) {
      double p = std::fmod(phi, 2.0 * kPi);
      if (p < 0.0) p += 2.0 * kPi;
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Decomposes the ring of polar cosine u into arcs on which `value` is
/// constant, evaluating `value` at arc midpoints.
inline std::vector<RingArc> ring_arcs(const std::vector<Cap>& caps, double u,
                                      const std::function<double(const SpherePoint&)>& value) {
  const double theta = std::acos(std::clamp(u, -1.0, 1.0));
  const auto cuts = ring_breakpoints(caps, u);
  std::vector<RingArc> arcs;
  if (cuts.empty()) {
    arcs.push_back({0.0, 2.0 * kPi, value(SpherePoint::from_angles(theta, 0.0))});
    return arcs;
  }
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = (i + 1 < cuts.size()) ? cuts[i + 1] : cuts[0] + 2.0 * kPi;
    if (b - a <= 0.0) continue;
    const double v = value(SpherePoint::from_angles(theta, 0.5 * (a + b)));
    if (!std::isfinite(v)) throw NumericalError("piecewise symbol returned a non-finite value");
    arcs.push_back({a, b, v});
  }
  return arcs;
}

/// Polar angles in (0, pi) where the arc structure of the cap arrangement
/// changes (tangency or full containment of a ring).
inline std::vector<double> polar_breakpoints(const std::vector<Cap>& caps) {
  std::vector<double> out;
  for (const auto& c : caps) {
    const double tc = c.center.polar();
    double lo = std::abs(tc - c.radius);
    double hi = tc + c.radius;
    if (hi > kPi) hi = 2.0 * kPi - hi;
    for (double t : {lo, hi}) {
      if (t > 1e-14 && t < kPi - 1e-14) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }),
            out.end());
  return out;
}

}  // namespace qtopo
