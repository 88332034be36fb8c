#pragma once
// Independent reference computations shared by the test executables.

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <cmath>
#include <random>
#include <vector>

#include "qtopo/persistence.hpp"
#include "qtopo/sphere_geometry.hpp"

namespace testing_support {

inline qtopo::SpherePoint random_point(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  while (true) {
    Eigen::Vector3d v(g(rng), g(rng), g(rng));
    if (v.norm() > 1e-6) return qtopo::SpherePoint::normalized(v);
  }
}

/// Exact covering radius of a point set on S^2: the largest empty
/// circumscribed circle over all sensor triples (spherical Voronoi vertices).
inline double covering_radius_oracle(const qtopo::SensorNet& net) {
  const auto& pts = net.points();
  const std::size_t n = pts.size();
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        Eigen::Vector3d c = (pts[j].vec() - pts[i].vec()).cross(pts[k].vec() - pts[i].vec());
        if (c.norm() < 1e-14) continue;
        c.normalize();
        for (int sign : {1, -1}) {
          const Eigen::Vector3d cc = sign * c;
          const double cos_r = cc.dot(pts[i].vec());
          bool empty = true;
          for (std::size_t q = 0; q < n && empty; ++q) {
            if (q == i || q == j || q == k) continue;
            if (cc.dot(pts[q].vec()) > cos_r + 1e-14) empty = false;
          }
          if (empty) best = std::max(best, std::acos(std::clamp(cos_r, -1.0, 1.0)));
        }
      }
    }
  }
  return best;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Random closed complex on n vertices with monotone integer values in [0, levels).
inline qtopo::FilteredComplex random_filtered_complex(std::mt19937_64& rng, std::size_t n, int levels) {
  std::uniform_int_distribution<int> level(0, levels - 1);
  std::bernoulli_distribution keep(0.6);
  std::map<qtopo::Simplex, double> value;
  for (std::size_t v = 0; v < n; ++v) value[{v}] = level(rng);
  for (std::size_t size = 2; size <= 4; ++size) {
    std::vector<qtopo::Simplex> candidates;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != size) continue;
      qtopo::Simplex s;
      for (std::size_t v = 0; v < n; ++v) {
        if (mask & (1u << v)) s.push_back(v);
      }
      candidates.push_back(s);
    }
    for (const auto& s : candidates) {
      double face_max = -1.0;
      bool faces = true;
      for (const auto& f : qtopo::boundary_faces(s)) {
        const auto it = value.find(f);
        faces = faces && it != value.end();
        if (it != value.end()) face_max = std::max(face_max, it->second);
      }
      if (faces && keep(rng)) value[s] = std::max<double>(face_max, level(rng));
    }
  }
  auto fc = qtopo::FilteredComplex::with_vertices(n);
  for (const auto& [s, v] : value) fc.add(s, v);
  return fc;
}

}  // namespace testing_support
