#pragma once
// Registration statistics for a partition of unity {f_z}: classical
// probabilities p_z = int f_z dmu, p_zw = int f_z f_w dmu and their quantum
// counterparts p_z = tr(F_z)/d, p_zw = tr(F_z F_w)/d with F_z = T(f_z);
// repeated registration in a cover; the finite hypergraph model.

#include <Eigen/Dense>
#include <boost/rational.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qtopo/error.hpp"
#include "qtopo/linalg.hpp"
#include "qtopo/quantization.hpp"
#include "qtopo/region.hpp"
#include "qtopo/sphere_geometry.hpp"

namespace qtopo {

enum class Route { kMatrix, kKernel };

inline std::string to_string(Route r) { return r == Route::kMatrix ? "matrix" : "kernel"; }

struct ProbabilityTable {
  std::string model;  ///< "classical" or "quantum"
  std::string route;  ///< "quadrature", "matrix" or "kernel"
  double epsilon = 0.0;
  double lambda = 0.0;
  int k = 0;          ///< spin level, 0 for classical tables
  double hbar = 0.0;  ///< 1/k, 0 for classical tables
  Eigen::VectorXd singles;
  Eigen::MatrixXd pairs;

  std::size_t size() const { return static_cast<std::size_t>(singles.size()); }

  /// Smallest strictly positive off-diagonal pair value (0 if none).
  double min_positive_pair() const {
    double best = 0.0;
    for (Eigen::Index i = 0; i < pairs.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < pairs.cols(); ++j) {
        if (pairs(i, j) > 0.0 && (best == 0.0 || pairs(i, j) < best)) best = pairs(i, j);
      }
    }
    return best;
  }
  double max_pair() const {
    double best = 0.0;
    for (Eigen::Index i = 0; i < pairs.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < pairs.cols(); ++j) best = std::max(best, pairs(i, j));
    }
    return best;
  }
};

/// Values of every f_z at the nodes of a quadrature grid, grouped per sensor
/// and ordered by ring.
struct PartitionSamples {
  std::vector<std::vector<GridSample>> per_sensor;
};

inline PartitionSamples sample_partition(const QuantizationContext& ctx, const PartitionOfUnity& pou) {
  PartitionSamples out;
  out.per_sensor.resize(pou.size());
  for (int r = 0; r < ctx.n_theta(); ++r) {
    for (int p = 0; p < ctx.n_phi(); ++p) {
      for (const auto& [z, v] : pou.evaluate(ctx.node(r, p))) out.per_sensor[z].push_back({r, p, v});
    }
  }
  return out;
}

/// Classical table by quadrature on the grid of `quad` (only its nodes and
/// weights are used). Pairs with disjoint geometric supports are exactly 0.
inline ProbabilityTable classical_table(const PartitionOfUnity& pou, const QuantizationContext& quad) {
  const auto n = static_cast<Eigen::Index>(pou.size());
  ProbabilityTable t;
  t.model = "classical";
  t.route = "quadrature";
  t.epsilon = pou.epsilon();
  t.lambda = pou.lambda();
  t.singles = Eigen::VectorXd::Zero(n);
  t.pairs = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < quad.n_theta(); ++r) {
    const double w = quad.node_weight(r);
    for (int p = 0; p < quad.n_phi(); ++p) {
      const auto vals = pou.evaluate(quad.node(r, p));
      for (std::size_t a = 0; a < vals.size(); ++a) {
        const auto za = static_cast<Eigen::Index>(vals[a].first);
        t.singles[za] += w * vals[a].second;
        t.pairs(za, za) += w * vals[a].second * vals[a].second;
        for (std::size_t b = a + 1; b < vals.size(); ++b) {
          const auto zb = static_cast<Eigen::Index>(vals[b].first);
          const double v = w * vals[a].second * vals[b].second;
          t.pairs(za, zb) += v;
          t.pairs(zb, za) += v;
        }
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!pou.supports_overlap(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) t.pairs(i, j) = 0.0;
    }
  }
  return t;
}

/// POVM elements F_z = T(f_z) from grid samples.
inline std::vector<HermitianOperator> partition_operators(const QuantizationContext& ctx, const PartitionSamples& samples) {
  std::vector<HermitianOperator> ops;
  ops.reserve(samples.per_sensor.size());
  for (const auto& s : samples.per_sensor) ops.push_back(assemble_toeplitz(ctx, rings_from_samples(ctx, s)));
  return ops;
}

inline std::vector<HermitianOperator> partition_operators(const QuantizationContext& ctx, const PartitionOfUnity& pou) {
  return partition_operators(ctx, sample_partition(ctx, pou));
}

/// Table with p_z = tr(F_z)/d and p_zw = tr(F_z F_w)/d.
inline ProbabilityTable quantum_table_from_operators(const std::vector<HermitianOperator>& ops, int k, double epsilon,
                                                     double lambda) {
  const auto n = static_cast<Eigen::Index>(ops.size());
  ProbabilityTable t;
  t.model = "quantum";
  t.route = "matrix";
  t.epsilon = epsilon;
  t.lambda = lambda;
  t.k = k;
  t.hbar = 1.0 / k;
  t.singles = Eigen::VectorXd::Zero(n);
  t.pairs = Eigen::MatrixXd::Zero(n, n);
  const double d = k + 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    t.singles[i] = ops[i].trace() / d;
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = trace_product(ops[i], ops[j]) / d;
      t.pairs(i, j) = v;
      t.pairs(j, i) = v;
    }
  }
  return t;
}

/// (1/d) sum_x sum_y w_x w_y f_z(x) f_w(y) |K(x,y)|^2 on the context grid.
inline double kernel_pair(const QuantizationContext& ctx, const std::vector<GridSample>& fz,
                          const std::vector<GridSample>& fw) {
  std::vector<Eigen::Vector3d> yv;
  std::vector<double> yw;
  yv.reserve(fw.size());
  yw.reserve(fw.size());
  for (const auto& s : fw) {
    yv.push_back(ctx.node_vector(s.ring, s.azimuth));
    yw.push_back(ctx.node_weight(s.ring) * s.value);
  }
  const int k = ctx.k();
  double total = 0.0;
  for (const auto& s : fz) {
    const Eigen::Vector3d x = ctx.node_vector(s.ring, s.azimuth);
    double inner = 0.0;
    for (std::size_t j = 0; j < yv.size(); ++j) {
      const double c = std::clamp(0.5 * (1.0 + x.dot(yv[j])), 0.0, 1.0);
      inner += yw[j] * std::pow(c, k);
    }
    total += ctx.node_weight(s.ring) * s.value * inner;
  }
  return total * static_cast<double>(ctx.dim());
}

/// Quantum table by either route. The kernel route is quadratic in the
/// number of grid nodes per support and meant for small nets.
inline ProbabilityTable quantum_table(const QuantizationContext& ctx, const PartitionOfUnity& pou, Route route) {
  const auto samples = sample_partition(ctx, pou);
  if (route == Route::kMatrix) {
    return quantum_table_from_operators(partition_operators(ctx, samples), ctx.k(), pou.epsilon(), pou.lambda());
  }
  const auto n = static_cast<Eigen::Index>(pou.size());
  ProbabilityTable t;
  t.model = "quantum";
  t.route = "kernel";
  t.epsilon = pou.epsilon();
  t.lambda = pou.lambda();
  t.k = ctx.k();
  t.hbar = ctx.hbar();
  t.singles = Eigen::VectorXd::Zero(n);
  t.pairs = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& s : samples.per_sensor[i]) t.singles[i] += ctx.node_weight(s.ring) * s.value;
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = kernel_pair(ctx, samples.per_sensor[i], samples.per_sensor[j]);
      t.pairs(i, j) = v;
      t.pairs(j, i) = v;
    }
  }
  return t;
}

struct RouteMismatch {
  std::size_t z = 0;
  std::size_t w = 0;
  double matrix_value = 0.0;
  double kernel_value = 0.0;
};

/// Compares the two routes on the given pairs. Values below `floor` in both
/// routes are compared absolutely against `floor` instead of relatively.
inline std::vector<RouteMismatch> compare_routes(const QuantizationContext& ctx, const PartitionOfUnity& pou,
                                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                                 double rel_tol, double floor) {
  const auto samples = sample_partition(ctx, pou);
  const auto ops = partition_operators(ctx, samples);
  std::vector<RouteMismatch> out;
  for (const auto& [z, w] : pairs) {
    const double a = trace_product(ops[z], ops[w]) / ctx.dim();
    const double b = kernel_pair(ctx, samples.per_sensor[z], samples.per_sensor[w]);
    const double scale = std::max(std::abs(a), std::abs(b));
    const bool ok = scale < floor ? std::abs(a - b) <= floor : std::abs(a - b) <= rel_tol * scale;
    if (!ok) out.push_back({z, w, a, b});
  }
  return out;
}

/// Throws a diagnostic naming both values for the first mismatching pair.
inline void require_routes_agree(const QuantizationContext& ctx, const PartitionOfUnity& pou,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double rel_tol,
                                 double floor) {
  const auto bad = compare_routes(ctx, pou, pairs, rel_tol, floor);
  if (!bad.empty()) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "quantum_table: routes disagree for pair (" << bad[0].z << ", " << bad[0].w
        << "): matrix = " << bad[0].matrix_value << ", kernel = " << bad[0].kernel_value;
    throw NumericalError(msg.str());
  }
}

/// Lüders update eta = F^{1/2} rho F^{1/2} / tr(F rho).
inline constexpr double kVanishingProbability = 1e-14;

inline HermitianOperator luders_posterior(const HermitianOperator& rho, const HermitianOperator& f) {
  if (rho.dim() != f.dim()) throw ValidationError("luders_posterior: dimension mismatch");
  const double prob = trace_product(f, rho);
  if (!(prob > kVanishingProbability)) {
    std::ostringstream msg;
    msg << "luders_posterior: outcome has vanishing probability (tr(F rho) = " << prob << ")";
    throw NumericalError(msg.str());
  }
  const auto s = hermitian_sqrt(f);
  return HermitianOperator(ComplexMatrix(s.matrix() * rho.matrix() * s.matrix() / prob));
}

/// Husimi expectation tr(T(f) rho).
inline double husimi_expectation(const QuantizationContext& ctx, const HermitianOperator& rho, const Symbol& f) {
  return trace_product(toeplitz(ctx, f), rho);
}

/// tr(F_k^{1/2} ... F_2^{1/2} F_1 F_2^{1/2} ... F_k^{1/2}) / d, where
/// `roots[j]` must be the square root of the j-th operator (j >= 1).
inline double quantum_kfold(const std::vector<const HermitianOperator*>& ops,
                            const std::vector<const HermitianOperator*>& roots) {
  if (ops.empty()) throw ValidationError("quantum_kfold: empty index vector");
  ComplexMatrix x = ops[0]->matrix();
  for (std::size_t j = 1; j < ops.size(); ++j) {
    const auto& s = roots[j]->matrix();
    x = s * x * s;
  }
  return x.trace().real() / static_cast<double>(x.rows());
}

inline double quantum_kfold(const std::vector<HermitianOperator>& ops) {
  std::vector<HermitianOperator> roots;
  roots.reserve(ops.size());
  for (std::size_t j = 0; j < ops.size(); ++j) roots.push_back(j == 0 ? ops[0] : hermitian_sqrt(ops[j]));
  std::vector<const HermitianOperator*> op_ptr, root_ptr;
  for (std::size_t j = 0; j < ops.size(); ++j) {
    op_ptr.push_back(&ops[j]);
    root_ptr.push_back(&roots[j]);
  }
  return quantum_kfold(op_ptr, root_ptr);
}

/// POVM of a cover: f_i = chi_i / chi, chi = sum_j chi_j.
class CoverModel {
 public:
  explicit CoverModel(std::vector<Region> cover) : cover_(std::move(cover)) {
    if (cover_.empty()) throw ValidationError("CoverModel: empty cover");
    for (const auto& r : cover_) {
      auto c = r.caps();
      caps_.insert(caps_.end(), c.begin(), c.end());
    }
  }

  std::size_t size() const { return cover_.size(); }
  const std::vector<Region>& regions() const { return cover_; }
  const std::vector<Cap>& caps() const { return caps_; }

  int multiplicity(const SpherePoint& x) const {
    int chi = 0;
    for (const auto& r : cover_) chi += r.contains(x) ? 1 : 0;
    return chi;
  }

  /// f_{i_1} ... f_{i_k} = chi_{U_I} chi^{-k}.
  Symbol product_symbol(const std::vector<std::size_t>& index) const {
    check_index(index);
    return Symbol::piecewise(caps_, [this, index](const SpherePoint& x) {
      const int chi = multiplicity(x);
      if (chi == 0) throw ValidationError("cover does not cover M (multiplicity 0 at a sample point)");
      for (std::size_t i : index) {
        if (!cover_[i].contains(x)) return 0.0;
      }
      return std::pow(static_cast<double>(chi), -static_cast<double>(index.size()));
    });
  }

  /// F_i = T(chi_i / chi).
  std::vector<HermitianOperator> operators(const QuantizationContext& ctx) const {
    std::vector<HermitianOperator> ops;
    for (std::size_t i = 0; i < cover_.size(); ++i) ops.push_back(toeplitz(ctx, product_symbol({i})));
    return ops;
  }

  void check_index(const std::vector<std::size_t>& index) const {
    if (index.empty()) throw ValidationError("cover index vector is empty");
    for (std::size_t i : index) {
      if (i >= cover_.size()) throw ValidationError("cover index out of range");
    }
  }

 private:
  std::vector<Region> cover_;
  std::vector<Cap> caps_;
};

/// p^C_I = int_{U_I} chi^{-k} dmu with k = |I|, integrated exactly along rings
/// and by Gauss panels across them (`resolution` sets the panel density).
inline double classical_kfold(const CoverModel& cover, const std::vector<std::size_t>& index, int resolution = 64) {
  const Symbol f = cover.product_symbol(index);
  double total = 0.0;
  for (const auto& ring : rings_from_piecewise(f, resolution, 2.0)) total += ring.weight * ring.coeff[0].real();
  return total;
}

inline double classical_kfold(const std::vector<Region>& cover, const std::vector<std::size_t>& index,
                              int resolution = 64) {
  return classical_kfold(CoverModel(cover), index, resolution);
}

// ---------------------------------------------------------------------------
// Finite hypergraph model.

using Rational = boost::rational<long long>;

class Hypergraph {
 public:
  /// Vertices 0..n-1; every vertex must lie in some edge.
  Hypergraph(std::size_t vertex_count, std::vector<std::vector<std::size_t>> edges)
      : n_(vertex_count), edges_(std::move(edges)), chi_(vertex_count, 0) {
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      auto& e = edges_[i];
      if (e.empty()) throw ValidationError("hypergraph: edge " + std::to_string(i) + " is empty");
      std::sort(e.begin(), e.end());
      e.erase(std::unique(e.begin(), e.end()), e.end());
      for (std::size_t v : e) {
        if (v >= n_) throw ValidationError("hypergraph: vertex out of range");
        ++chi_[v];
      }
    }
    for (std::size_t v = 0; v < n_; ++v) {
      if (chi_[v] == 0) throw ValidationError("hypergraph: vertex " + std::to_string(v) + " lies in no edge");
    }
    total_ = std::accumulate(chi_.begin(), chi_.end(), 0LL);
  }

  std::size_t vertex_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<std::vector<std::size_t>>& edges() const { return edges_; }
  long long chi(std::size_t v) const { return chi_[v]; }
  long long total() const { return total_; }

  Rational mu(std::size_t v) const { return Rational(chi_[v], total_); }

  bool in_edge(std::size_t v, std::size_t e) const {
    return std::binary_search(edges_[e].begin(), edges_[e].end(), v);
  }

  /// Repeated registration of the same particle: S^{-1} sum_{z in U_I} chi(z)^{1-k}.
  Rational registration(const std::vector<std::size_t>& index) const {
    if (index.empty()) throw ValidationError("hypergraph: empty index vector");
    Rational sum(0);
    for (std::size_t v = 0; v < n_; ++v) {
      bool inside = true;
      for (std::size_t e : index) inside = inside && in_edge(v, e);
      if (!inside) continue;
      Rational term(1);
      for (std::size_t j = 1; j < index.size(); ++j) term /= chi_[v];
      sum += term;
    }
    return sum / total_;
  }

  /// Hypergraph random walk: p_{i_1} P(i_2 | i_1) ... P(i_k | i_{k-1}).
  Rational walk(const std::vector<std::size_t>& index) const {
    if (index.empty()) throw ValidationError("hypergraph: empty index vector");
    const auto p = transition();
    Rational out = registration({index[0]});
    for (std::size_t j = 1; j < index.size(); ++j) out *= p[index[j - 1]][index[j]];
    return out;
  }

  /// P(j|i) = (sum_{z in U_i cap U_j} chi(z)^{-1}) / #U_i.
  std::vector<std::vector<Rational>> transition() const {
    const std::size_t m = edges_.size();
    std::vector<std::vector<Rational>> p(m, std::vector<Rational>(m, Rational(0)));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        Rational s(0);
        for (std::size_t v : edges_[i]) {
          if (in_edge(v, j)) s += Rational(1, chi_[v]);
        }
        p[i][j] = s / static_cast<long long>(edges_[i].size());
      }
    }
    return p;
  }

 private:
  std::size_t n_;
  std::vector<std::vector<std::size_t>> edges_;
  std::vector<long long> chi_;
  long long total_ = 0;
};

inline std::vector<std::vector<Rational>> hypergraph_transition(const Hypergraph& h) { return h.transition(); }

inline std::string to_string(const Rational& r) {
  std::ostringstream s;
  s << r.numerator();
  if (r.denominator() != 1) s << '/' << r.denominator();
  return s.str();
}

// ---------------------------------------------------------------------------
// Export.

inline nlohmann::json table_metadata(const ProbabilityTable& t) {
  return {{"model", t.model}, {"route", t.route}, {"k", t.k}, {"hbar", t.hbar}, {"epsilon", t.epsilon},
          {"lambda", t.lambda}};
}

inline nlohmann::json to_json(const ProbabilityTable& t) {
  nlohmann::json j;
  j["metadata"] = table_metadata(t);
  j["singles"] = std::vector<double>(t.singles.data(), t.singles.data() + t.singles.size());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < t.pairs.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(t.pairs.cols()));
    for (Eigen::Index c = 0; c < t.pairs.cols(); ++c) row[static_cast<std::size_t>(c)] = t.pairs(i, c);
    rows.push_back(row);
  }
  j["pairs"] = rows;
  return j;
}

inline ProbabilityTable table_from_json(const nlohmann::json& j) {
  ProbabilityTable t;
  const auto& m = j.at("metadata");
  t.model = m.at("model").get<std::string>();
  t.route = m.at("route").get<std::string>();
  t.k = m.at("k").get<int>();
  t.hbar = m.at("hbar").get<double>();
  t.epsilon = m.at("epsilon").get<double>();
  t.lambda = m.at("lambda").get<double>();
  const auto singles = j.at("singles").get<std::vector<double>>();
  t.singles = Eigen::Map<const Eigen::VectorXd>(singles.data(), static_cast<Eigen::Index>(singles.size()));
  const auto rows = j.at("pairs").get<std::vector<std::vector<double>>>();
  t.pairs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw ValidationError("table_from_json: pair matrix is not square");
    for (std::size_t c = 0; c < rows.size(); ++c) t.pairs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  }
  return t;
}

/// CSV rows "z,w,p" for z <= w.
inline void write_table_csv(const ProbabilityTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.precision(17);
  out << "z,w,p\n";
  for (Eigen::Index i = 0; i < t.pairs.rows(); ++i) {
    for (Eigen::Index j = i; j < t.pairs.cols(); ++j) out << i << ',' << j << ',' << t.pairs(i, j) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace qtopo
