#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qtopo/error.hpp"
#include "qtopo/quantization.hpp"
#include "qtopo/region.hpp"
#include "qtopo/registration.hpp"
#include "qtopo/sphere_geometry.hpp"

namespace qtopo {

/// Sorted tuple of vertex positions.
using Simplex = std::vector<std::size_t>;

inline std::string to_string(const Simplex& s) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < s.size(); ++i) out << (i ? "," : "") << s[i];
  out << ']';
  return out.str();
}

/// Faces of codimension one, in the order obtained by dropping vertex i.
inline std::vector<Simplex> boundary_faces(const Simplex& s) {
  std::vector<Simplex> out;
  if (s.size() < 2) return out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    Simplex f;
    f.reserve(s.size() - 1);
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j != i) f.push_back(s[j]);
    }
    out.push_back(std::move(f));
  }
  return out;
}

class SimplicialComplex {
 public:
  SimplicialComplex() = default;

  /// Vertices 0..labels.size()-1 are always present; `simplices` may list
  /// any further simplices (of dimension >= 1) and must be closed under faces.
  SimplicialComplex(std::vector<std::size_t> labels, const std::vector<Simplex>& simplices)
      : labels_(std::move(labels)) {
    by_dim_.assign(1, {});
    for (std::size_t v = 0; v < labels_.size(); ++v) by_dim_[0].push_back({v});
    for (Simplex s : simplices) {
      std::sort(s.begin(), s.end());
      if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
        throw ValidationError("simplicial complex: repeated vertex in " + to_string(s));
      }
      if (s.empty()) throw ValidationError("simplicial complex: empty simplex");
      if (s.back() >= labels_.size()) throw ValidationError("simplicial complex: unknown vertex in " + to_string(s));
      if (s.size() == 1) continue;
      const std::size_t d = s.size() - 1;
      if (by_dim_.size() <= d) by_dim_.resize(d + 1);
      by_dim_[d].push_back(std::move(s));
    }
    for (auto& layer : by_dim_) {
      std::sort(layer.begin(), layer.end());
      layer.erase(std::unique(layer.begin(), layer.end()), layer.end());
    }
    while (by_dim_.size() > 1 && by_dim_.back().empty()) by_dim_.pop_back();
    check_closure();
  }

  /// Vertices labelled 0..n-1.
  static SimplicialComplex with_vertices(std::size_t n, const std::vector<Simplex>& simplices = {}) {
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i;
    return SimplicialComplex(std::move(labels), simplices);
  }

  std::size_t vertex_count() const { return labels_.size(); }
  const std::vector<std::size_t>& labels() const { return labels_; }

  /// Highest dimension with a simplex, -1 for the void complex.
  int dimension() const {
    if (labels_.empty()) return -1;
    return static_cast<int>(by_dim_.size()) - 1;
  }

  const std::vector<Simplex>& simplices(int d) const {
    static const std::vector<Simplex> none;
    if (d < 0 || static_cast<std::size_t>(d) >= by_dim_.size()) return none;
    return by_dim_[static_cast<std::size_t>(d)];
  }

  std::size_t count(int d) const { return simplices(d).size(); }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& layer : by_dim_) n += layer.size();
    return n;
  }

  bool contains(const Simplex& s) const {
    if (s.empty()) return false;
    const auto& layer = simplices(static_cast<int>(s.size()) - 1);
    return std::binary_search(layer.begin(), layer.end(), s);
  }

  long long euler_characteristic() const {
    long long chi = 0;
    for (std::size_t d = 0; d < by_dim_.size(); ++d) {
      chi += (d % 2 == 0 ? 1 : -1) * static_cast<long long>(by_dim_[d].size());
    }
    return chi;
  }

  std::vector<Simplex> all_simplices() const {
    std::vector<Simplex> out;
    for (const auto& layer : by_dim_) out.insert(out.end(), layer.begin(), layer.end());
    return out;
  }

  friend bool operator==(const SimplicialComplex& a, const SimplicialComplex& b) {
    return a.labels_ == b.labels_ && a.by_dim_ == b.by_dim_;
  }

  /// Throws if some face of a listed simplex is missing.
  void check_closure() const {
    for (std::size_t d = 1; d < by_dim_.size(); ++d) {
      for (const auto& s : by_dim_[d]) {
        for (const auto& f : boundary_faces(s)) {
          if (!contains(f)) {
            throw ValidationError("simplicial complex: face " + to_string(f) + " of " + to_string(s) + " is missing");
          }
        }
      }
    }
  }

 private:
  std::vector<std::size_t> labels_;
  std::vector<std::vector<Simplex>> by_dim_ = {{}};
};

inline nlohmann::json to_json(const SimplicialComplex& k) {
  nlohmann::json out;
  out["vertices"] = k.labels();
  nlohmann::json simplices = nlohmann::json::object();
  for (int d = 0; d <= k.dimension(); ++d) {
    nlohmann::json layer = nlohmann::json::array();
    for (const auto& s : k.simplices(d)) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t v : s) row.push_back(k.labels()[v]);
      layer.push_back(row);
    }
    simplices[std::to_string(d)] = layer;
  }
  out["simplices"] = simplices;
  return out;
}

inline SimplicialComplex complex_from_json(const nlohmann::json& j) {
  const auto labels = j.at("vertices").get<std::vector<std::size_t>>();
  std::map<std::size_t, std::size_t> position;
  for (std::size_t i = 0; i < labels.size(); ++i) position[labels[i]] = i;
  std::vector<Simplex> simplices;
  for (const auto& [dim, layer] : j.at("simplices").items()) {
    (void)dim;
    for (const auto& row : layer) {
      Simplex s;
      for (std::size_t label : row.get<std::vector<std::size_t>>()) {
        const auto it = position.find(label);
        if (it == position.end()) throw ValidationError("complex_from_json: unknown vertex label");
        s.push_back(it->second);
      }
      simplices.push_back(std::move(s));
    }
  }
  return SimplicialComplex(labels, simplices);
}

using EdgePredicate = std::function<bool(std::size_t, std::size_t)>;

inline constexpr int kDefaultMaxDim = 3;

/// Clique complex of a symmetric predicate on n vertices, simplices up to
/// dimension max_dim, by ordered expansion over higher-indexed neighbours.
inline SimplicialComplex flag_complex(std::size_t n, const EdgePredicate& edge, int max_dim = kDefaultMaxDim) {
  if (max_dim < 0) throw ValidationError("flag_complex: max_dim must be >= 0");
  std::vector<std::vector<std::size_t>> up(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (edge(i, j)) up[i].push_back(j);
    }
  }
  std::vector<Simplex> out;
  std::function<void(Simplex&, const std::vector<std::size_t>&)> expand = [&](Simplex& s,
                                                                             const std::vector<std::size_t>& cand) {
    if (s.size() > 1) out.push_back(s);
    if (static_cast<int>(s.size()) > max_dim) return;
    for (std::size_t idx = 0; idx < cand.size(); ++idx) {
      const std::size_t v = cand[idx];
      std::vector<std::size_t> next;
      std::set_intersection(cand.begin() + static_cast<long>(idx) + 1, cand.end(), up[v].begin(), up[v].end(),
                            std::back_inserter(next));
      s.push_back(v);
      expand(s, next);
      s.pop_back();
    }
  };
  for (std::size_t v = 0; v < n; ++v) {
    Simplex s{v};
    expand(s, up[v]);
  }
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i;
  return SimplicialComplex(std::move(labels), out);
}

/// Flag complex with edges where p_zw >= threshold.
inline SimplicialComplex threshold_complex(const ProbabilityTable& table, double threshold,
                                           int max_dim = kDefaultMaxDim) {
  return flag_complex(
      table.size(), [&](std::size_t z, std::size_t w) { return table.pairs(z, w) >= threshold; }, max_dim);
}

/// Q_{m,hbar,eps}: simplices whose pairs all satisfy p^Q_zw >= hbar^m.
inline SimplicialComplex quantum_complex(const ProbabilityTable& table, double m, double hbar,
                                         int max_dim = kDefaultMaxDim) {
  if (!(hbar > 0.0)) throw ValidationError("quantum_complex: hbar must be positive");
  return threshold_complex(table, std::pow(hbar, m), max_dim);
}

inline SimplicialComplex quantum_complex(const ProbabilityTable& table, double m, int max_dim = kDefaultMaxDim) {
  return quantum_complex(table, m, table.hbar, max_dim);
}

/// C_eps: supports of f_z and f_w overlap, decided from the support radius
/// (support_scale multiplies it, as in build_partition).
inline SimplicialComplex classical_complex(const SensorNet& net, double epsilon, double lambda,
                                           int max_dim = kDefaultMaxDim, double support_scale = 1.0) {
  if (!(epsilon > 0.0) || !(lambda > 1.0)) throw ValidationError("classical_complex: need epsilon > 0 and lambda > 1");
  const double outer = support_scale * kOuterShrink * lambda * epsilon / 2.0;
  return flag_complex(
      net.size(), [&](std::size_t z, std::size_t w) { return net.distance(z, w) < 2.0 * outer; }, max_dim);
}

inline SimplicialComplex classical_complex(const PartitionOfUnity& pou, int max_dim = kDefaultMaxDim) {
  return flag_complex(
      pou.size(), [&](std::size_t z, std::size_t w) { return pou.supports_overlap(z, w); }, max_dim);
}

/// R_t: simplices of diameter < t.
inline SimplicialComplex vietoris_rips(const SensorNet& net, double t, int max_dim = kDefaultMaxDim) {
  if (!(t > 0.0)) throw ValidationError("vietoris_rips: t must be positive");
  return flag_complex(
      net.size(), [&](std::size_t z, std::size_t w) { return net.distance(z, w) < t; }, max_dim);
}

/// Every simplex of a is a simplex of b. Labels must agree.
inline std::optional<Simplex> first_missing(const SimplicialComplex& a, const SimplicialComplex& b) {
  if (a.labels() != b.labels()) throw ValidationError("inclusion_check: vertex labels differ");
  for (int d = 0; d <= a.dimension(); ++d) {
    for (const auto& s : a.simplices(d)) {
      if (!b.contains(s)) return s;
    }
  }
  return std::nullopt;
}

inline bool inclusion_check(const SimplicialComplex& a, const SimplicialComplex& b) {
  return !first_missing(a, b).has_value();
}

// ---------------------------------------------------------------------------
// Nerves of covers.

/// Some point of `r`, searched first on the nodes of a Gauss grid and then on
/// successively finer geodesic grids.
inline std::optional<SpherePoint> find_witness(const Region& r, int resolution = 64, int max_level = 8) {
  const auto ctx = make_context(resolution);
  for (int i = 0; i < ctx.n_theta(); ++i) {
    for (int p = 0; p < ctx.n_phi(); ++p) {
      const auto x = ctx.node(i, p);
      if (r.contains(x)) return x;
    }
  }
  for (int level = 5; level <= max_level; ++level) {
    for (const auto& v : icosahedral_grid(level)) {
      const auto x = SpherePoint::normalized(v);
      if (r.contains(x)) return x;
    }
  }
  return std::nullopt;
}

inline Region intersection_of(const std::vector<Region>& cover, const Simplex& s) {
  Region r = cover[s[0]];
  for (std::size_t i = 1; i < s.size(); ++i) r = r & cover[s[i]];
  return r;
}

namespace detail {

/// Grows simplices dimension by dimension: a candidate is tested only when
/// all its facets are present.
inline SimplicialComplex grow_complex(std::size_t n, int max_dim, const std::function<bool(const Simplex&)>& accept) {
  std::vector<Simplex> accepted;
  std::vector<Simplex> layer;
  std::vector<std::size_t> vertices;
  for (std::size_t v = 0; v < n; ++v) {
    if (accept({v})) {
      layer.push_back({v});
      vertices.push_back(v);
    }
  }
  std::set<Simplex> present(layer.begin(), layer.end());
  for (int d = 1; d <= max_dim && !layer.empty(); ++d) {
    std::vector<Simplex> next;
    for (const auto& s : layer) {
      for (std::size_t v : vertices) {
        if (v <= s.back()) continue;
        Simplex c = s;
        c.push_back(v);
        bool faces = true;
        for (const auto& f : boundary_faces(c)) faces = faces && present.count(f) > 0;
        if (faces && accept(c)) next.push_back(std::move(c));
      }
    }
    for (const auto& s : next) present.insert(s);
    accepted.insert(accepted.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  // Vertices that fail their own test are dropped; labels keep the cover indices.
  std::vector<std::size_t> position(n, 0);
  for (std::size_t i = 0; i < vertices.size(); ++i) position[vertices[i]] = i;
  for (auto& s : accepted) {
    for (auto& v : s) v = position[v];
  }
  return SimplicialComplex(vertices, accepted);
}

}  // namespace detail

/// L(U): a simplex for every index set with nonempty common intersection.
inline SimplicialComplex nerve_complex(const std::vector<Region>& cover, int max_dim = kDefaultMaxDim,
                                       int resolution = 64) {
  if (cover.empty()) throw ValidationError("nerve_complex: empty cover");
  return detail::grow_complex(cover.size(), max_dim, [&](const Simplex& s) {
    return find_witness(intersection_of(cover, s), resolution).has_value();
  });
}

inline constexpr double kNerveExponentBound = 0.125;

struct QuantumNerve {
  SimplicialComplex complex;
  std::vector<std::size_t> rejected_vertices;  ///< vertices whose own probability is <= hbar^m
  std::map<Simplex, double> probabilities;     ///< every tested index set
};

/// Quantum nerve: simplex sigma = (i_0 < ... < i_q) enters when
/// p^Q_sigma > hbar^m, tested only when all facets are present.
inline QuantumNerve quantum_nerve(const QuantizationContext& ctx, const CoverModel& cover, double m,
                                  int max_dim = kDefaultMaxDim) {
  if (!(m > 0.0) || !(m < kNerveExponentBound)) {
    throw ValidationError("quantum_nerve: the registration rate O(hbar^(1/8)) requires 0 < m < 1/8, got m = " +
                          std::to_string(m));
  }
  const auto ops = cover.operators(ctx);
  std::vector<HermitianOperator> roots;
  for (const auto& f : ops) roots.push_back(hermitian_sqrt(f));
  const double threshold = std::pow(ctx.hbar(), m);
  QuantumNerve out;
  out.complex = detail::grow_complex(cover.size(), max_dim, [&](const Simplex& s) {
    std::vector<const HermitianOperator*> op_ptr, root_ptr;
    for (std::size_t i : s) {
      op_ptr.push_back(&ops[i]);
      root_ptr.push_back(&roots[i]);
    }
    const double p = quantum_kfold(op_ptr, root_ptr);
    out.probabilities[s] = p;
    const bool ok = p > threshold;
    if (!ok && s.size() == 1) out.rejected_vertices.push_back(s[0]);
    return ok;
  });
  return out;
}

}  // namespace qtopo
