#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qtopo/complexes.hpp"
#include "qtopo/error.hpp"

namespace qtopo {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A simplicial complex with an entry value for every simplex. The space at
/// parameter v consists of the simplices with value <= v.
class FilteredComplex {
 public:
  FilteredComplex() = default;
  explicit FilteredComplex(std::vector<std::size_t> labels) : labels_(std::move(labels)) {}

  static FilteredComplex with_vertices(std::size_t n) {
    std::vector<std::size_t> labels(n);
    std::iota(labels.begin(), labels.end(), std::size_t{0});
    return FilteredComplex(std::move(labels));
  }

  void add(Simplex s, double value) {
    std::sort(s.begin(), s.end());
    if (s.empty() || s.back() >= labels_.size()) throw ValidationError("filtered complex: bad simplex " + to_string(s));
    if (!std::isfinite(value)) throw ValidationError("filtered complex: non-finite value for " + to_string(s));
    simplices_.push_back(std::move(s));
    values_.push_back(value);
  }

  const std::vector<std::size_t>& labels() const { return labels_; }
  std::size_t size() const { return simplices_.size(); }
  const std::vector<Simplex>& simplices() const { return simplices_; }
  const std::vector<double>& values() const { return values_; }

  /// Sorted distinct filtration values.
  std::vector<double> grid() const {
    std::vector<double> g = values_;
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  }

  SimplicialComplex at(double v) const {
    std::vector<Simplex> kept;
    for (std::size_t i = 0; i < simplices_.size(); ++i) {
      if (values_[i] <= v && simplices_[i].size() > 1) kept.push_back(simplices_[i]);
    }
    // Vertices not yet born are still listed by SimplicialComplex; keep only born ones.
    std::vector<bool> born(labels_.size(), false);
    for (std::size_t i = 0; i < simplices_.size(); ++i) {
      if (values_[i] <= v && simplices_[i].size() == 1) born[simplices_[i][0]] = true;
    }
    std::vector<std::size_t> position(labels_.size(), 0), labels;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (born[i]) {
        position[i] = labels.size();
        labels.push_back(labels_[i]);
      }
    }
    for (auto& s : kept) {
      for (auto& x : s) {
        if (!born[x]) throw ValidationError("filtered complex: vertex of " + to_string(s) + " enters later");
        x = position[x];
      }
    }
    return SimplicialComplex(labels, kept);
  }

  /// Largest parameter: the final space.
  SimplicialComplex final_space() const { return at(kInfinity); }

 private:
  std::vector<std::size_t> labels_;
  std::vector<Simplex> simplices_;
  std::vector<double> values_;
};

/// Filtration of a nested family K_0 ⊆ K_1 ⊆ ... indexed by increasing grid
/// values; each simplex enters at its first appearance.
inline FilteredComplex filtration_from_family(const std::vector<double>& grid,
                                              const std::vector<SimplicialComplex>& family) {
  if (grid.size() != family.size() || grid.empty()) throw ValidationError("filtration_from_family: size mismatch");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ValidationError("filtration_from_family: grid must increase");
  }
  const auto& labels = family.back().labels();
  FilteredComplex fc(labels);
  std::map<Simplex, double> entry;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (family[i].labels() != labels) throw ValidationError("filtration_from_family: vertex labels differ");
    if (i > 0) {
      if (const auto miss = first_missing(family[i - 1], family[i])) {
        std::ostringstream msg;
        msg << "filtration_from_family: family not nested, simplex " << to_string(*miss) << " present at " << grid[i - 1]
            << " but missing at " << grid[i];
        throw ValidationError(msg.str());
      }
    }
    for (const auto& s : family[i].all_simplices()) entry.emplace(s, grid[i]);
  }
  for (const auto& [s, v] : entry) fc.add(s, v);
  return fc;
}

/// Flag filtration: a simplex enters at the largest weight among its edges
/// (vertices at 0). Only edges with weight < cutoff are used.
inline FilteredComplex flag_filtration(std::size_t n, const std::function<double(std::size_t, std::size_t)>& weight,
                                       double cutoff = kInfinity, int max_dim = kDefaultMaxDim) {
  const auto k = flag_complex(
      n, [&](std::size_t i, std::size_t j) { return weight(i, j) < cutoff; }, max_dim);
  FilteredComplex fc = FilteredComplex::with_vertices(n);
  for (const auto& s : k.all_simplices()) {
    double v = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a) {
      for (std::size_t b = a + 1; b < s.size(); ++b) v = std::max(v, weight(s[a], s[b]));
    }
    fc.add(s, v);
  }
  return fc;
}

/// Rips filtration by diameter. Under the strict convention R_t contains the
/// simplices with filtration value < t.
inline FilteredComplex rips_filtration(const SensorNet& net, double cutoff = kInfinity, int max_dim = kDefaultMaxDim) {
  return flag_filtration(
      net.size(), [&](std::size_t i, std::size_t j) { return net.distance(i, j); }, cutoff, max_dim);
}

struct Bar {
  double birth = 0.0;
  double death = kInfinity;
  bool infinite() const { return std::isinf(death); }
  friend bool operator==(const Bar&, const Bar&) = default;
  friend bool operator<(const Bar& a, const Bar& b) {
    return a.birth != b.birth ? a.birth < b.birth : a.death < b.death;
  }
};

/// Half-open bars [birth, death) per homology degree.
struct Barcode {
  std::vector<std::vector<Bar>> bars;

  int max_degree() const { return static_cast<int>(bars.size()) - 1; }

  const std::vector<Bar>& degree(int q) const {
    static const std::vector<Bar> none;
    if (q < 0 || q > max_degree()) return none;
    return bars[static_cast<std::size_t>(q)];
  }

  /// Betti number of the space at parameter v.
  std::size_t rank_at(int q, double v) const {
    std::size_t n = 0;
    for (const auto& b : degree(q)) n += (b.birth <= v && v < b.death) ? 1 : 0;
    return n;
  }

  /// Number of bars containing [s, t], i.e. the rank of H(K_s) -> H(K_t).
  std::size_t containing(int q, double s, double t) const {
    std::size_t n = 0;
    for (const auto& b : degree(q)) n += (b.birth <= s && t < b.death) ? 1 : 0;
    return n;
  }

  std::size_t infinite_count(int q) const {
    std::size_t n = 0;
    for (const auto& b : degree(q)) n += b.infinite() ? 1 : 0;
    return n;
  }

  friend bool operator==(const Barcode&, const Barcode&) = default;
};

inline nlohmann::json to_json(const Barcode& b) {
  nlohmann::json out = nlohmann::json::object();
  for (int q = 0; q <= b.max_degree(); ++q) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& bar : b.degree(q)) {
      rows.push_back(nlohmann::json::array({bar.birth, bar.infinite() ? nlohmann::json(nullptr) : nlohmann::json(bar.death)}));
    }
    out[std::to_string(q)] = rows;
  }
  return out;
}

inline Barcode barcode_from_json(const nlohmann::json& j) {
  Barcode b;
  for (int q = 0; j.contains(std::to_string(q)); ++q) {
    std::vector<Bar> rows;
    for (const auto& r : j.at(std::to_string(q))) {
      rows.push_back(Bar{r.at(0).get<double>(), r.at(1).is_null() ? kInfinity : r.at(1).get<double>()});
    }
    b.bars.push_back(std::move(rows));
  }
  return b;
}

inline std::string to_text(const Barcode& b) {
  std::ostringstream out;
  for (int q = 0; q <= b.max_degree(); ++q) {
    out << "H" << q << ": " << b.degree(q).size() << " bars\n";
    for (const auto& bar : b.degree(q)) {
      out << "  [" << bar.birth << ", " << (bar.infinite() ? std::string("inf") : std::to_string(bar.death)) << ")\n";
    }
  }
  return out.str();
}

namespace detail {

using Column = std::vector<std::uint32_t>;

inline void add_column(Column& target, const Column& source, Column& scratch) {
  scratch.clear();
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(scratch));
  target.swap(scratch);
}

}  // namespace detail

/// Z/2 persistence by column reduction with clearing. Simplices are ordered by
/// (value, dimension, lexicographic); a seed shuffles ties in (value, dimension).
inline Barcode reduce_to_barcode(const FilteredComplex& fc, int max_degree,
                                 std::optional<std::uint64_t> tie_seed = std::nullopt) {
  if (max_degree < 0) throw ValidationError("reduce_to_barcode: max_degree must be >= 0");
  const auto& simplices = fc.simplices();
  const auto& values = fc.values();
  const std::size_t n = simplices.size();
  if (n >= std::numeric_limits<std::uint32_t>::max()) throw ValidationError("reduce_to_barcode: too many simplices");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint64_t> tie(n, 0);
  if (tie_seed) {
    std::mt19937_64 rng(*tie_seed);
    for (auto& t : tie) t = rng();
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    if (simplices[a].size() != simplices[b].size()) return simplices[a].size() < simplices[b].size();
    if (tie[a] != tie[b]) return tie[a] < tie[b];
    return simplices[a] < simplices[b];
  });

  std::map<Simplex, std::uint32_t> position;
  for (std::size_t i = 0; i < n; ++i) {
    if (!position.emplace(simplices[order[i]], static_cast<std::uint32_t>(i)).second) {
      throw ValidationError("reduce_to_barcode: duplicate simplex " + to_string(simplices[order[i]]));
    }
  }
  std::vector<double> value(n);
  std::vector<int> dim(n);
  for (std::size_t i = 0; i < n; ++i) {
    value[i] = values[order[i]];
    dim[i] = static_cast<int>(simplices[order[i]].size()) - 1;
  }

  std::vector<detail::Column> columns(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = simplices[order[i]];
    if (dim[i] > max_degree + 1) continue;
    for (const auto& f : boundary_faces(s)) {
      const auto it = position.find(f);
      if (it == position.end()) {
        throw ValidationError("reduce_to_barcode: face " + to_string(f) + " of " + to_string(s) + " is missing");
      }
      if (values[order[it->second]] > value[i]) {
        std::ostringstream msg;
        msg << "reduce_to_barcode: non-monotone filtration, face " << to_string(f) << " (value "
            << values[order[it->second]] << ") enters after " << to_string(s) << " (value " << value[i] << ")";
        throw ValidationError(msg.str());
      }
      columns[i].push_back(it->second);
    }
    std::sort(columns[i].begin(), columns[i].end());
  }

  constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> pivot_owner(n, kNone);  // row -> column whose low it is
  std::vector<bool> cleared(n, false);
  detail::Column scratch;
  for (int d = max_degree + 1; d >= 1; --d) {
    for (std::size_t j = 0; j < n; ++j) {
      if (dim[j] != d) continue;
      if (cleared[j]) {
        columns[j].clear();
        continue;
      }
      auto& col = columns[j];
      while (!col.empty() && pivot_owner[col.back()] != kNone) {
        detail::add_column(col, columns[pivot_owner[col.back()]], scratch);
      }
      if (!col.empty()) {
        pivot_owner[col.back()] = static_cast<std::uint32_t>(j);
        cleared[col.back()] = true;
      }
    }
  }

  Barcode out;
  out.bars.assign(static_cast<std::size_t>(max_degree) + 1, {});
  for (std::size_t i = 0; i < n; ++i) {
    if (dim[i] > max_degree) continue;
    const bool positive = dim[i] == 0 || columns[i].empty();
    if (!positive) continue;
    if (pivot_owner[i] != kNone) {
      const double death = value[pivot_owner[i]];
      if (value[i] < death) out.bars[static_cast<std::size_t>(dim[i])].push_back({value[i], death});
    } else {
      out.bars[static_cast<std::size_t>(dim[i])].push_back({value[i], kInfinity});
    }
  }
  for (auto& layer : out.bars) std::sort(layer.begin(), layer.end());
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force homology.

inline constexpr std::size_t kBruteForceLimit = 50000;

/// Rank over Z/2 of a 0/1 matrix given by its columns as lists of row indices.
inline std::size_t z2_rank(std::size_t rows, const std::vector<std::vector<std::size_t>>& columns) {
  const std::size_t words = (rows + 63) / 64;
  std::vector<std::vector<std::uint64_t>> basis(rows);  // basis[r]: vector with leading bit r
  std::size_t rank = 0;
  std::vector<std::uint64_t> v(words);
  for (const auto& col : columns) {
    std::fill(v.begin(), v.end(), 0);
    for (std::size_t r : col) v[r / 64] ^= std::uint64_t{1} << (r % 64);
    for (std::size_t w = words; w-- > 0;) {
      while (v[w] != 0) {
        const std::size_t bit = 63 - static_cast<std::size_t>(__builtin_clzll(v[w]));
        const std::size_t lead = w * 64 + bit;
        if (basis[lead].empty()) {
          basis[lead] = v;
          ++rank;
          std::fill(v.begin(), v.end(), 0);
          break;
        }
        for (std::size_t u = 0; u <= w; ++u) v[u] ^= basis[lead][u];
      }
    }
  }
  return rank;
}

/// rank of the boundary map from dimension d to d-1.
inline std::size_t boundary_rank(const SimplicialComplex& k, int d) {
  if (d <= 0 || k.count(d) == 0) return 0;
  const auto& rows = k.simplices(d - 1);
  std::vector<std::vector<std::size_t>> columns;
  columns.reserve(k.count(d));
  for (const auto& s : k.simplices(d)) {
    std::vector<std::size_t> col;
    for (const auto& f : boundary_faces(s)) {
      col.push_back(static_cast<std::size_t>(std::lower_bound(rows.begin(), rows.end(), f) - rows.begin()));
    }
    columns.push_back(std::move(col));
  }
  return z2_rank(rows.size(), columns);
}

/// Betti number over Z/2 by dense elimination of the boundary maps.
inline std::size_t homology_rank_bruteforce(const SimplicialComplex& k, int degree) {
  if (degree < 0) throw ValidationError("homology_rank_bruteforce: negative degree");
  if (k.size() > kBruteForceLimit) {
    throw ValidationError("homology_rank_bruteforce: complex has " + std::to_string(k.size()) +
                          " simplices, limit is " + std::to_string(kBruteForceLimit));
  }
  const std::size_t cycles = k.count(degree) - boundary_rank(k, degree);
  return cycles - boundary_rank(k, degree + 1);
}

inline std::vector<std::size_t> betti_numbers_bruteforce(const SimplicialComplex& k, int max_degree) {
  std::vector<std::size_t> out;
  for (int q = 0; q <= max_degree; ++q) out.push_back(homology_rank_bruteforce(k, q));
  return out;
}

// ---------------------------------------------------------------------------
// Persistent images, truncation and interleavings.

/// Rank of H_q(K_a) -> H_q(K_b) from the two-step filtration K_a (0) ⊆ K_b (1).
inline std::size_t persistent_image_rank(const SimplicialComplex& ka, const SimplicialComplex& kb, int degree) {
  if (const auto miss = first_missing(ka, kb)) {
    throw ValidationError("persistent_image_rank: K_a is not contained in K_b, missing simplex " + to_string(*miss));
  }
  FilteredComplex fc(kb.labels());
  for (const auto& s : kb.all_simplices()) fc.add(s, ka.contains(s) ? 0.0 : 1.0);
  const auto bars = reduce_to_barcode(fc, degree);
  std::size_t n = 0;
  for (const auto& b : bars.degree(degree)) n += (b.birth == 0.0 && b.death > 1.0) ? 1 : 0;
  return n;
}

inline std::vector<std::size_t> persistent_image_ranks(const SimplicialComplex& ka, const SimplicialComplex& kb,
                                                       int max_degree) {
  if (const auto miss = first_missing(ka, kb)) {
    throw ValidationError("persistent_image_rank: K_a is not contained in K_b, missing simplex " + to_string(*miss));
  }
  FilteredComplex fc(kb.labels());
  for (const auto& s : kb.all_simplices()) fc.add(s, ka.contains(s) ? 0.0 : 1.0);
  const auto bars = reduce_to_barcode(fc, max_degree);
  std::vector<std::size_t> out;
  for (int q = 0; q <= max_degree; ++q) {
    std::size_t n = 0;
    for (const auto& b : bars.degree(q)) n += (b.birth == 0.0 && b.death > 1.0) ? 1 : 0;
    out.push_back(n);
  }
  return out;
}

/// Ranks of a family on a grid, set to zero outside the window [lo, hi].
struct TruncatedModule {
  std::vector<double> grid;
  double lo = 0.0;
  double hi = 0.0;
  /// ranks[q][i] = dim V_{grid[i]}; transitions[q][i][j] = rank V_{grid[i]} -> V_{grid[j]} for i <= j.
  std::vector<std::vector<std::size_t>> ranks;
  std::vector<std::vector<std::vector<std::size_t>>> transitions;

  bool in_window(std::size_t i) const { return grid[i] >= lo && grid[i] <= hi; }
};

inline TruncatedModule truncated_module(const std::vector<double>& grid, const std::vector<SimplicialComplex>& family,
                                        double lo, double hi, int max_degree) {
  TruncatedModule m;
  m.grid = grid;
  m.lo = lo;
  m.hi = hi;
  const std::size_t g = grid.size();
  m.ranks.assign(static_cast<std::size_t>(max_degree) + 1, std::vector<std::size_t>(g, 0));
  m.transitions.assign(static_cast<std::size_t>(max_degree) + 1,
                       std::vector<std::vector<std::size_t>>(g, std::vector<std::size_t>(g, 0)));
  bool any = false;
  for (std::size_t i = 0; i < g; ++i) any = any || m.in_window(i);
  if (!any) return m;
  const auto bars = reduce_to_barcode(filtration_from_family(grid, family), max_degree);
  for (int q = 0; q <= max_degree; ++q) {
    const auto qi = static_cast<std::size_t>(q);
    for (std::size_t i = 0; i < g; ++i) {
      if (!m.in_window(i)) continue;
      m.ranks[qi][i] = bars.rank_at(q, grid[i]);
      for (std::size_t j = i; j < g; ++j) {
        if (m.in_window(j)) m.transitions[qi][i][j] = bars.containing(q, grid[i], grid[j]);
      }
    }
  }
  return m;
}

using ComplexFamily = std::function<SimplicialComplex(double)>;

struct InterleavingFailure {
  double parameter = 0.0;
  std::string direction;
  Simplex witness;
};

struct InterleavingReport {
  double lambda = 1.0;
  std::size_t checked = 0;
  std::vector<InterleavingFailure> failures;
  bool holds() const { return failures.empty(); }
  /// Failures in the given direction ("A->B" or "B->A").
  std::size_t failures_in(const std::string& direction) const {
    std::size_t n = 0;
    for (const auto& f : failures) n += f.direction == direction ? 1 : 0;
    return n;
  }
};

/// Checks A_s ⊆ B_{lambda s} ("A->B") and B_s ⊆ A_{lambda s} ("B->A") at
/// every grid parameter s.
inline InterleavingReport interleaving_check(const ComplexFamily& a, const ComplexFamily& b, double lambda,
                                             const std::vector<double>& grid) {
  if (!(lambda >= 1.0)) throw ValidationError("interleaving_check: lambda must be >= 1");
  InterleavingReport report;
  report.lambda = lambda;
  for (double s : grid) {
    if (const auto miss = first_missing(a(s), b(lambda * s))) report.failures.push_back({s, "A->B", *miss});
    if (const auto miss = first_missing(b(s), a(lambda * s))) report.failures.push_back({s, "B->A", *miss});
    report.checked += 2;
  }
  return report;
}

inline nlohmann::json to_json(const InterleavingReport& r) {
  nlohmann::json out;
  out["lambda"] = r.lambda;
  out["checked"] = r.checked;
  out["holds"] = r.holds();
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : r.failures) fails.push_back({{"parameter", f.parameter}, {"direction", f.direction}, {"witness", f.witness}});
  out["failures"] = fails;
  return out;
}

/// Greedy matching of finite bars in log scale; unmatched bars cost half their
/// log length. A diagnostic only: it bounds the bottleneck distance from above.
inline double greedy_log_bottleneck(const std::vector<Bar>& x, const std::vector<Bar>& y) {
  auto logs = [](const std::vector<Bar>& bars) {
    std::vector<std::pair<double, double>> out;
    for (const auto& b : bars) {
      if (b.birth > 0.0) out.emplace_back(std::log(b.birth), b.infinite() ? kInfinity : std::log(b.death));
    }
    return out;
  };
  auto u = logs(x), v = logs(y);
  std::vector<bool> used(v.size(), false);
  double worst = 0.0;
  for (const auto& p : u) {
    double best = p.second == kInfinity ? kInfinity : (p.second - p.first) / 2;
    std::size_t pick = v.size();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (used[i] || std::isinf(p.second) != std::isinf(v[i].second)) continue;
      const double c = std::max(std::abs(p.first - v[i].first),
                                std::isinf(p.second) ? 0.0 : std::abs(p.second - v[i].second));
      if (c < best) {
        best = c;
        pick = i;
      }
    }
    if (pick < v.size()) used[pick] = true;
    worst = std::max(worst, best);
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!used[i]) worst = std::max(worst, std::isinf(v[i].second) ? kInfinity : (v[i].second - v[i].first) / 2);
  }
  return worst;
}

}  // namespace qtopo
