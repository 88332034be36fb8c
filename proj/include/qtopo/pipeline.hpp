#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "qtopo/complexes.hpp"
#include "qtopo/error.hpp"
#include "qtopo/persistence.hpp"
#include "qtopo/piecewise_symbols.hpp"
#include "qtopo/quantization.hpp"
#include "qtopo/registration.hpp"
#include "qtopo/sphere_geometry.hpp"

namespace qtopo {

// ---------------------------------------------------------------------------
// Configuration.

struct RegistrationScanConfig {
  std::vector<int> overlap_ks = {16, 32, 64, 128, 256};
  std::size_t overlap_sensors = 12;
  double overlap_lambda = 1.5;
  double overlap_epsilon = 2.4;
  int overlap_reference_k = 600;  ///< resolution of the classical reference table
  double overlap_min_slope = 0.9;

  std::vector<int> disjoint_ks = {16, 24, 32, 48, 64};
  double disjoint_lambda = 1.05;
  double disjoint_epsilon = 2.0463;
  double disjoint_max_at_last = 1e-8;
  double disjoint_min_r2 = 0.99;

  std::vector<int> triple_ks = {16, 32, 64, 128, 256};
  double triple_radius = 2.0;
  double triple_min_slope = 0.12;
};

struct AppendixConfig {
  std::vector<int> ks = {16, 32, 64, 128, 256};
  std::vector<int> spectrum_ks = {15, 31, 63, 127, 255};
  int idempotency_k = 256;
  std::vector<int> kernel_ks = {16, 64, 256};
  double kernel_rel_tol = 1e-6;
};

struct NerveConfig {
  double cap_radius = 1.35;
  double m = 0.1;
  std::vector<int> ks = {128};
};

struct HypergraphConfig {
  std::size_t vertices = 3;
  std::vector<std::vector<std::size_t>> edges = {{0, 1}, {1, 2}};
  std::vector<std::size_t> extra_edge = {0, 2};
};

struct ExperimentConfig {
  std::vector<int> ks = {64};
  std::string net = "fibonacci";  ///< fibonacci | random | file
  std::size_t sensors = 150;
  std::string net_file;
  double lambda = 1.05;
  std::optional<double> r;  ///< net radius; probed when absent
  double r_prime = 0.39;
  double a = 0.45;
  double b = 0.9;
  double m = 0.5;
  int max_dim = 2;  ///< highest homology degree; complexes carry simplices one dimension higher
  bool strict_constants = false;
  double quadrature_oversample = 2.0;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  std::vector<double> scan_a;  ///< plateau scan; empty means a * (1 + 0.1 i), i = 0..6
  double min_plateau_span = 1.5;
  std::size_t oracle_max_simplices = kBruteForceLimit;
  RegistrationScanConfig registration;
  AppendixConfig appendix;
  NerveConfig nerve;
  HypergraphConfig hypergraph;
};

namespace detail {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config field '" + key + "' in " + where);
    }
  }
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["ks"] = c.ks;
  j["net"] = c.net;
  j["sensors"] = c.sensors;
  j["net_file"] = c.net_file;
  j["lambda"] = c.lambda;
  j["r"] = c.r ? nlohmann::json(*c.r) : nlohmann::json(nullptr);
  j["r_prime"] = c.r_prime;
  j["a"] = c.a;
  j["b"] = c.b;
  j["m"] = c.m;
  j["max_dim"] = c.max_dim;
  j["strict_constants"] = c.strict_constants;
  j["quadrature_oversample"] = c.quadrature_oversample;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["scan_a"] = c.scan_a;
  j["min_plateau_span"] = c.min_plateau_span;
  j["oracle_max_simplices"] = c.oracle_max_simplices;
  const auto& g = c.registration;
  j["registration"] = {{"overlap_ks", g.overlap_ks},
                       {"overlap_sensors", g.overlap_sensors},
                       {"overlap_lambda", g.overlap_lambda},
                       {"overlap_epsilon", g.overlap_epsilon},
                       {"overlap_reference_k", g.overlap_reference_k},
                       {"overlap_min_slope", g.overlap_min_slope},
                       {"disjoint_ks", g.disjoint_ks},
                       {"disjoint_lambda", g.disjoint_lambda},
                       {"disjoint_epsilon", g.disjoint_epsilon},
                       {"disjoint_max_at_last", g.disjoint_max_at_last},
                       {"disjoint_min_r2", g.disjoint_min_r2},
                       {"triple_ks", g.triple_ks},
                       {"triple_radius", g.triple_radius},
                       {"triple_min_slope", g.triple_min_slope}};
  j["appendix"] = {{"ks", c.appendix.ks},
                   {"spectrum_ks", c.appendix.spectrum_ks},
                   {"idempotency_k", c.appendix.idempotency_k},
                   {"kernel_ks", c.appendix.kernel_ks},
                   {"kernel_rel_tol", c.appendix.kernel_rel_tol}};
  j["nerve"] = {{"cap_radius", c.nerve.cap_radius}, {"m", c.nerve.m}, {"ks", c.nerve.ks}};
  j["hypergraph"] = {{"vertices", c.hypergraph.vertices},
                     {"edges", c.hypergraph.edges},
                     {"extra_edge", c.hypergraph.extra_edge}};
  return j;
}

/// Parses a config document; every field is optional and unknown fields are errors.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  ExperimentConfig c;
  detail::reject_unknown(j,
                         {"ks", "net", "sensors", "net_file", "lambda", "r", "r_prime", "a", "b", "m", "max_dim",
                          "strict_constants", "quadrature_oversample", "output_dir", "seed", "scan_a",
                          "min_plateau_span", "oracle_max_simplices", "registration", "appendix", "nerve",
                          "hypergraph"},
                         "config");
  read_field(j, "ks", c.ks);
  read_field(j, "net", c.net);
  read_field(j, "sensors", c.sensors);
  read_field(j, "net_file", c.net_file);
  read_field(j, "lambda", c.lambda);
  if (j.contains("r") && !j.at("r").is_null()) {
    double r = 0.0;
    read_field(j, "r", r);
    c.r = r;
  }
  read_field(j, "r_prime", c.r_prime);
  read_field(j, "a", c.a);
  read_field(j, "b", c.b);
  read_field(j, "m", c.m);
  read_field(j, "max_dim", c.max_dim);
  read_field(j, "strict_constants", c.strict_constants);
  read_field(j, "quadrature_oversample", c.quadrature_oversample);
  read_field(j, "output_dir", c.output_dir);
  read_field(j, "seed", c.seed);
  read_field(j, "scan_a", c.scan_a);
  read_field(j, "min_plateau_span", c.min_plateau_span);
  read_field(j, "oracle_max_simplices", c.oracle_max_simplices);
  if (j.contains("registration")) {
    const auto& s = j.at("registration");
    detail::reject_unknown(s,
                           {"overlap_ks", "overlap_sensors", "overlap_lambda", "overlap_epsilon",
                            "overlap_reference_k", "overlap_min_slope", "disjoint_ks", "disjoint_lambda",
                            "disjoint_epsilon", "disjoint_max_at_last", "disjoint_min_r2", "triple_ks",
                            "triple_radius", "triple_min_slope"},
                           "registration");
    auto& g = c.registration;
    read_field(s, "overlap_ks", g.overlap_ks);
    read_field(s, "overlap_sensors", g.overlap_sensors);
    read_field(s, "overlap_lambda", g.overlap_lambda);
    read_field(s, "overlap_epsilon", g.overlap_epsilon);
    read_field(s, "overlap_reference_k", g.overlap_reference_k);
    read_field(s, "overlap_min_slope", g.overlap_min_slope);
    read_field(s, "disjoint_ks", g.disjoint_ks);
    read_field(s, "disjoint_lambda", g.disjoint_lambda);
    read_field(s, "disjoint_epsilon", g.disjoint_epsilon);
    read_field(s, "disjoint_max_at_last", g.disjoint_max_at_last);
    read_field(s, "disjoint_min_r2", g.disjoint_min_r2);
    read_field(s, "triple_ks", g.triple_ks);
    read_field(s, "triple_radius", g.triple_radius);
    read_field(s, "triple_min_slope", g.triple_min_slope);
  }
  if (j.contains("appendix")) {
    const auto& s = j.at("appendix");
    detail::reject_unknown(s, {"ks", "spectrum_ks", "idempotency_k", "kernel_ks", "kernel_rel_tol"}, "appendix");
    read_field(s, "ks", c.appendix.ks);
    read_field(s, "spectrum_ks", c.appendix.spectrum_ks);
    read_field(s, "idempotency_k", c.appendix.idempotency_k);
    read_field(s, "kernel_ks", c.appendix.kernel_ks);
    read_field(s, "kernel_rel_tol", c.appendix.kernel_rel_tol);
  }
  if (j.contains("nerve")) {
    const auto& s = j.at("nerve");
    detail::reject_unknown(s, {"cap_radius", "m", "ks"}, "nerve");
    read_field(s, "cap_radius", c.nerve.cap_radius);
    read_field(s, "m", c.nerve.m);
    read_field(s, "ks", c.nerve.ks);
  }
  if (j.contains("hypergraph")) {
    const auto& s = j.at("hypergraph");
    detail::reject_unknown(s, {"vertices", "edges", "extra_edge"}, "hypergraph");
    read_field(s, "vertices", c.hypergraph.vertices);
    read_field(s, "edges", c.hypergraph.edges);
    read_field(s, "extra_edge", c.hypergraph.extra_edge);
  }
  return c;
}

/// Structural checks that do not need the net.
inline void validate_config(const ExperimentConfig& c) {
  if (c.ks.empty()) throw ConfigError("config: ks must not be empty");
  for (int k : c.ks) {
    if (k < 1) throw ConfigError("config: every k must be >= 1");
  }
  if (c.net != "fibonacci" && c.net != "random" && c.net != "file") {
    throw ConfigError("config: net must be 'fibonacci', 'random' or 'file'");
  }
  if (c.net != "file" && c.sensors == 0) throw ConfigError("config: sensors must be positive");
  if (c.net == "file" && c.net_file.empty()) throw ConfigError("config: net 'file' needs net_file");
  if (!(c.lambda > 1.0)) throw ConfigError("config: lambda must exceed 1");
  if (!(c.a > 0.0) || !(c.b > c.a)) throw ConfigError("config: need 0 < a < b");
  if (!(c.m > 0.0)) throw ConfigError("config: m must be positive");
  if (c.max_dim < 0 || c.max_dim > 3) throw ConfigError("config: max_dim must lie in 0..3");
  if (!(c.quadrature_oversample >= 1.0)) throw ConfigError("config: quadrature_oversample must be >= 1");
  if (!(c.min_plateau_span >= 1.0)) throw ConfigError("config: min_plateau_span must be >= 1");
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  auto c = config_from_json(j);
  validate_config(c);
  return c;
}

inline SensorNet build_net(const ExperimentConfig& c) {
  if (c.net == "file") return read_net_csv(c.net_file);
  if (c.net == "random") {
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> g;
    std::vector<SpherePoint> pts;
    for (std::size_t i = 0; i < c.sensors; ++i) {
      Eigen::Vector3d v(g(rng), g(rng), g(rng));
      pts.push_back(SpherePoint::normalized(v));
    }
    return SensorNet(std::move(pts));
  }
  return fibonacci_net(c.sensors);
}

// ---------------------------------------------------------------------------
// Operator cache.

/// Partition operators keyed by (k, epsilon, lambda, quadrature, net hash).
class OperatorCache {
 public:
  using Key = std::tuple<int, double, double, double, std::uint64_t>;

  std::shared_ptr<const std::vector<HermitianOperator>> operators(const QuantizationContext& ctx,
                                                                  const PartitionOfUnity& pou, double oversample) {
    const Key key{ctx.k(), pou.epsilon(), pou.lambda(), oversample, pou.net().hash()};
    const auto it = entries_.find(key);
    if (it != entries_.end()) {
      ++hits_;
      return it->second;
    }
    auto ops = std::make_shared<const std::vector<HermitianOperator>>(partition_operators(ctx, pou));
    entries_.emplace(key, ops);
    return ops;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t hits() const { return hits_; }

 private:
  std::map<Key, std::shared_ptr<const std::vector<HermitianOperator>>> entries_;
  std::size_t hits_ = 0;
};

// ---------------------------------------------------------------------------
// Inference pipeline.

inline std::vector<std::size_t> sphere_homology(int max_degree) {
  std::vector<std::size_t> out;
  for (int q = 0; q <= max_degree; ++q) out.push_back(q == 0 || q == 2 ? 1 : 0);
  return out;
}

inline std::vector<std::size_t> simplex_counts(const SimplicialComplex& k) {
  std::vector<std::size_t> out;
  for (int d = 0; d <= k.dimension(); ++d) out.push_back(k.count(d));
  return out;
}

struct KRun {
  int k = 0;
  double hbar = 0.0;
  double threshold = 0.0;  ///< hbar^m
  double max_pair_a = 0.0;
  double max_pair_b = 0.0;
  std::vector<std::size_t> qa_counts, qb_counts, ca_counts, cb_counts;
  bool qa_equals_ca = false;
  bool qb_equals_cb = false;
  bool inclusion = false;
  std::vector<std::size_t> ranks;      ///< persistent image ranks, degrees 0..max_dim
  std::vector<std::size_t> betti_qa;   ///< brute-force oracle; empty when skipped
  std::vector<std::size_t> betti_qb;
  bool euler_ok = false;
  bool oracle_consistent = false;  ///< image ranks bounded by both Betti vectors
  bool matches_expected = false;
  Barcode barcode;  ///< two-step filtration Q_a (0) ⊆ Q_b (1)
  std::vector<std::string> warnings;
};

struct PlateauRow {
  double a = 0.0;
  double b = 0.0;
  bool inclusion = false;
  std::vector<std::size_t> ranks;
  bool matches = false;
};

struct PlateauScan {
  int k = 0;
  std::vector<PlateauRow> rows;
  double lo = 0.0;  ///< plateau through the configured a (ranks equal to H(S^2))
  double hi = 0.0;
  double span = 0.0;
  bool contains_config = false;
};

struct PipelineReport {
  nlohmann::json config;
  std::size_t net_size = 0;
  std::uint64_t net_hash = 0;
  double net_radius = 0.0;
  nlohmann::json admissibility;
  std::vector<std::size_t> expected;
  std::vector<KRun> runs;
  PlateauScan plateau;
  std::string comparison_module;
  std::vector<std::string> warnings;
  bool pass = false;
  /// Quantum tables at (a, b) per k; exported as CSV, not part of the JSON report.
  std::vector<std::pair<ProbabilityTable, ProbabilityTable>> tables;
};

inline nlohmann::json to_json(const KRun& r) {
  return {{"k", r.k},
          {"hbar", r.hbar},
          {"threshold", r.threshold},
          {"max_pair_a", r.max_pair_a},
          {"max_pair_b", r.max_pair_b},
          {"qa_counts", r.qa_counts},
          {"qb_counts", r.qb_counts},
          {"ca_counts", r.ca_counts},
          {"cb_counts", r.cb_counts},
          {"qa_equals_ca", r.qa_equals_ca},
          {"qb_equals_cb", r.qb_equals_cb},
          {"inclusion", r.inclusion},
          {"ranks", r.ranks},
          {"betti_qa", r.betti_qa},
          {"betti_qb", r.betti_qb},
          {"euler_ok", r.euler_ok},
          {"oracle_consistent", r.oracle_consistent},
          {"matches_expected", r.matches_expected},
          {"barcode", to_json(r.barcode)},
          {"warnings", r.warnings}};
}

inline KRun krun_from_json(const nlohmann::json& j) {
  KRun r;
  r.k = j.at("k").get<int>();
  r.hbar = j.at("hbar").get<double>();
  r.threshold = j.at("threshold").get<double>();
  r.max_pair_a = j.at("max_pair_a").get<double>();
  r.max_pair_b = j.at("max_pair_b").get<double>();
  r.qa_counts = j.at("qa_counts").get<std::vector<std::size_t>>();
  r.qb_counts = j.at("qb_counts").get<std::vector<std::size_t>>();
  r.ca_counts = j.at("ca_counts").get<std::vector<std::size_t>>();
  r.cb_counts = j.at("cb_counts").get<std::vector<std::size_t>>();
  r.qa_equals_ca = j.at("qa_equals_ca").get<bool>();
  r.qb_equals_cb = j.at("qb_equals_cb").get<bool>();
  r.inclusion = j.at("inclusion").get<bool>();
  r.ranks = j.at("ranks").get<std::vector<std::size_t>>();
  r.betti_qa = j.at("betti_qa").get<std::vector<std::size_t>>();
  r.betti_qb = j.at("betti_qb").get<std::vector<std::size_t>>();
  r.euler_ok = j.at("euler_ok").get<bool>();
  r.oracle_consistent = j.at("oracle_consistent").get<bool>();
  r.matches_expected = j.at("matches_expected").get<bool>();
  r.barcode = barcode_from_json(j.at("barcode"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

inline nlohmann::json to_json(const PipelineReport& r) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& k : r.runs) runs.push_back(to_json(k));
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : r.plateau.rows) {
    rows.push_back({{"a", p.a}, {"b", p.b}, {"inclusion", p.inclusion}, {"ranks", p.ranks}, {"matches", p.matches}});
  }
  return {{"config", r.config},
          {"net", {{"size", r.net_size}, {"hash", r.net_hash}, {"radius", r.net_radius}}},
          {"admissibility", r.admissibility},
          {"expected", r.expected},
          {"runs", runs},
          {"plateau",
           {{"k", r.plateau.k},
            {"rows", rows},
            {"lo", r.plateau.lo},
            {"hi", r.plateau.hi},
            {"span", r.plateau.span},
            {"contains_config", r.plateau.contains_config}}},
          {"comparison_module", r.comparison_module},
          {"warnings", r.warnings},
          {"pass", r.pass}};
}

inline PipelineReport pipeline_report_from_json(const nlohmann::json& j) {
  PipelineReport r;
  r.config = j.at("config");
  r.net_size = j.at("net").at("size").get<std::size_t>();
  r.net_hash = j.at("net").at("hash").get<std::uint64_t>();
  r.net_radius = j.at("net").at("radius").get<double>();
  r.admissibility = j.at("admissibility");
  r.expected = j.at("expected").get<std::vector<std::size_t>>();
  for (const auto& k : j.at("runs")) r.runs.push_back(krun_from_json(k));
  const auto& p = j.at("plateau");
  r.plateau.k = p.at("k").get<int>();
  for (const auto& row : p.at("rows")) {
    r.plateau.rows.push_back({row.at("a").get<double>(), row.at("b").get<double>(), row.at("inclusion").get<bool>(),
                              row.at("ranks").get<std::vector<std::size_t>>(), row.at("matches").get<bool>()});
  }
  r.plateau.lo = p.at("lo").get<double>();
  r.plateau.hi = p.at("hi").get<double>();
  r.plateau.span = p.at("span").get<double>();
  r.plateau.contains_config = p.at("contains_config").get<bool>();
  r.comparison_module = j.at("comparison_module").get<std::string>();
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  r.pass = j.at("pass").get<bool>();
  return r;
}

namespace detail {

inline ProbabilityTable pipeline_table(const QuantizationContext& ctx, const SensorNet& net, double eps,
                                       const ExperimentConfig& c, OperatorCache& cache) {
  const auto pou = build_partition(net, eps, c.lambda);
  const auto ops = cache.operators(ctx, pou, c.quadrature_oversample);
  return quantum_table_from_operators(*ops, ctx.k(), eps, c.lambda);
}

inline std::vector<std::size_t> image_ranks_or_empty(const SimplicialComplex& qa, const SimplicialComplex& qb,
                                                     int max_degree) {
  if (!inclusion_check(qa, qb)) return {};
  return persistent_image_ranks(qa, qb, max_degree);
}

}  // namespace detail

/// Net -> partitions at a, b -> quantum tables -> Q_a, Q_b -> inclusion ->
/// persistent image ranks, compared with H(S^2; Z/2).
inline PipelineReport run_inference_pipeline(const ExperimentConfig& c, OperatorCache* shared_cache = nullptr) {
  validate_config(c);
  OperatorCache local;
  OperatorCache& cache = shared_cache ? *shared_cache : local;

  PipelineReport rep;
  rep.config = to_json(c);
  const auto net = build_net(c);
  rep.net_size = net.size();
  rep.net_hash = net.hash();
  rep.net_radius = c.r ? *c.r : probe_covering_radius(net).max_distance;
  rep.expected = sphere_homology(c.max_dim);

  nlohmann::json adm;
  try {
    const auto range = admissible_range(rep.net_radius, c.r_prime, c.lambda, c.m, c.strict_constants)
                           .with_endpoints(c.a, c.b);
    adm = {{"interval", {range.interval_lo, range.interval_hi}},
           {"ratio_ok", range.ratio_ok},
           {"endpoints_in_interior", range.endpoints_in_interior},
           {"endpoint_ratio_ok", range.endpoint_ratio_ok},
           {"needs_diamond", range.needs_diamond},
           {"notes", range.notes}};
    if (range.needs_diamond) {
      adm["diamond_a"] = check_disjointness_assumption(net, c.a, c.lambda, 1e-9);
      adm["diamond_b"] = check_disjointness_assumption(net, c.b, c.lambda, 1e-9);
    }
  } catch (const ValidationError& e) {
    if (c.strict_constants) throw ConfigError(e.what());
    adm = {{"error", e.what()}};
    rep.warnings.push_back(std::string("admissibility not established: ") + e.what());
  }
  rep.admissibility = adm;
  rep.comparison_module =
      "Y_t = H(S^2) for t in (r, 4r'), zero elsewhere: expected bars containing [a, b] are one in degree 0 and one "
      "in degree 2";

  const int top = c.max_dim + 1;
  const auto ca = classical_complex(net, c.a, c.lambda, top);
  const auto cb = classical_complex(net, c.b, c.lambda, top);
  bool all_ok = true;
  for (int k : c.ks) {
    const auto ctx = make_context(k, c.quadrature_oversample);
    KRun run;
    run.k = k;
    run.hbar = ctx.hbar();
    run.threshold = std::pow(ctx.hbar(), c.m);
    auto ta = detail::pipeline_table(ctx, net, c.a, c, cache);
    auto tb = detail::pipeline_table(ctx, net, c.b, c, cache);
    run.max_pair_a = ta.max_pair();
    run.max_pair_b = tb.max_pair();
    const auto qa = quantum_complex(ta, c.m, ctx.hbar(), top);
    const auto qb = quantum_complex(tb, c.m, ctx.hbar(), top);
    run.qa_counts = simplex_counts(qa);
    run.qb_counts = simplex_counts(qb);
    run.ca_counts = simplex_counts(ca);
    run.cb_counts = simplex_counts(cb);
    run.qa_equals_ca = qa == ca;
    run.qb_equals_cb = qb == cb;
    if (qb.count(1) == 0 && net.size() > 1) {
      std::ostringstream msg;
      msg << "threshold too high: hbar^m = " << run.threshold << " exceeds every pair probability (max "
          << std::max(run.max_pair_a, run.max_pair_b) << "); Q_a and Q_b are vertex-only";
      run.warnings.push_back(msg.str());
    }
    run.inclusion = inclusion_check(qa, qb);
    if (run.inclusion) {
      FilteredComplex fc(qb.labels());
      for (const auto& s : qb.all_simplices()) fc.add(s, qa.contains(s) ? 0.0 : 1.0);
      run.barcode = reduce_to_barcode(fc, c.max_dim, c.seed);
      for (int q = 0; q <= c.max_dim; ++q) run.ranks.push_back(run.barcode.containing(q, 0.0, 1.0));
    } else {
      run.warnings.push_back("Q_a is not contained in Q_b; persistent image undefined");
    }
    if (qa.size() <= c.oracle_max_simplices && qb.size() <= c.oracle_max_simplices) {
      run.betti_qa = betti_numbers_bruteforce(qa, top);
      run.betti_qb = betti_numbers_bruteforce(qb, top);
      auto chi = [](const std::vector<std::size_t>& b) {
        long long x = 0;
        for (std::size_t q = 0; q < b.size(); ++q) x += (q % 2 == 0 ? 1 : -1) * static_cast<long long>(b[q]);
        return x;
      };
      run.euler_ok = chi(run.betti_qa) == qa.euler_characteristic() && chi(run.betti_qb) == qb.euler_characteristic();
      run.oracle_consistent = run.inclusion;
      for (std::size_t q = 0; q < run.ranks.size(); ++q) {
        run.oracle_consistent = run.oracle_consistent && run.ranks[q] <= run.betti_qa[q] && run.ranks[q] <= run.betti_qb[q];
      }
    } else {
      run.warnings.push_back("brute-force oracle skipped: complex exceeds oracle_max_simplices");
    }
    run.matches_expected = run.inclusion && run.ranks == rep.expected;
    all_ok = all_ok && run.matches_expected;
    rep.tables.emplace_back(std::move(ta), std::move(tb));
    rep.runs.push_back(std::move(run));
  }

  // Plateau scan over a with b/a fixed, at the first k.
  std::vector<double> scan = c.scan_a;
  if (scan.empty()) {
    for (int i = 0; i <= 6; ++i) scan.push_back(c.a * (1.0 + 0.1 * i));
  }
  if (std::find(scan.begin(), scan.end(), c.a) == scan.end()) scan.push_back(c.a);
  std::sort(scan.begin(), scan.end());
  const double ratio = c.b / c.a;
  const auto ctx = make_context(c.ks.front(), c.quadrature_oversample);
  rep.plateau.k = c.ks.front();
  for (double a : scan) {
    PlateauRow row;
    row.a = a;
    row.b = a * ratio;
    try {
      const auto qa = quantum_complex(detail::pipeline_table(ctx, net, row.a, c, cache), c.m, ctx.hbar(), top);
      const auto qb = quantum_complex(detail::pipeline_table(ctx, net, row.b, c, cache), c.m, ctx.hbar(), top);
      row.inclusion = inclusion_check(qa, qb);
      row.ranks = detail::image_ranks_or_empty(qa, qb, c.max_dim);
      row.matches = row.inclusion && row.ranks == rep.expected;
    } catch (const ValidationError& e) {
      rep.warnings.push_back("plateau scan at a = " + std::to_string(a) + ": " + e.what());
    }
    rep.plateau.rows.push_back(std::move(row));
  }
  const auto& rows = rep.plateau.rows;
  const auto at = static_cast<std::size_t>(
      std::find_if(rows.begin(), rows.end(), [&](const PlateauRow& r) { return r.a == c.a; }) - rows.begin());
  if (at < rows.size() && rows[at].matches) {
    std::size_t lo = at, hi = at;
    while (lo > 0 && rows[lo - 1].matches) --lo;
    while (hi + 1 < rows.size() && rows[hi + 1].matches) ++hi;
    rep.plateau.lo = rows[lo].a;
    rep.plateau.hi = rows[hi].a;
    rep.plateau.span = rows[hi].a / rows[lo].a;
    rep.plateau.contains_config = true;
  }
  rep.pass = all_ok && rep.plateau.contains_config && rep.plateau.span >= c.min_plateau_span;
  return rep;
}

// ---------------------------------------------------------------------------
// Registration scan.

struct ScanRow {
  std::string name;
  std::vector<int> ks;
  std::vector<double> values;
  double slope = 0.0;
  double threshold = 0.0;
  bool pass = false;
  nlohmann::json details;
};

inline nlohmann::json to_json(const ScanRow& r) {
  return {{"name", r.name},   {"ks", r.ks},         {"values", r.values}, {"slope", r.slope},
          {"threshold", r.threshold}, {"pass", r.pass}, {"details", r.details}};
}

struct RegistrationScanReport {
  std::vector<ScanRow> rows;
  bool pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const ScanRow& r) { return r.pass; });
  }
};

inline nlohmann::json to_json(const RegistrationScanReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) rows.push_back(to_json(row));
  return {{"rows", rows}, {"pass", r.pass()}};
}

inline double loglog_slope(const std::vector<int>& ks, const std::vector<double>& values) {
  std::vector<std::pair<double, double>> data;
  for (std::size_t i = 0; i < ks.size(); ++i) data.emplace_back(1.0 / ks[i], values[i]);
  return fit_scaling_exponent(data).slope;
}

inline SensorNet octahedron_net() {
  return SensorNet({SpherePoint(1, 0, 0), SpherePoint(-1, 0, 0), SpherePoint(0, 1, 0), SpherePoint(0, -1, 0),
                    SpherePoint(0, 0, 1), SpherePoint(0, 0, -1)});
}

/// |p^Q - p^C| of the overlapping pair with the largest classical probability.
inline ScanRow overlap_pair_scan(const RegistrationScanConfig& g) {
  ScanRow row;
  row.name = "overlapping pair |p^Q - p^C|";
  row.threshold = g.overlap_min_slope;
  row.ks = g.overlap_ks;
  const auto pou = build_partition(fibonacci_net(g.overlap_sensors), g.overlap_epsilon, g.overlap_lambda);
  const auto ct = classical_table(pou, make_context(g.overlap_reference_k, 1.0));
  Eigen::Index bz = 0, bw = 1;
  for (Eigen::Index i = 0; i < ct.pairs.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < ct.pairs.cols(); ++j) {
      if (ct.pairs(i, j) > ct.pairs(bz, bw)) {
        bz = i;
        bw = j;
      }
    }
  }
  for (int k : g.overlap_ks) {
    const auto qt = quantum_table(make_context(k), pou, Route::kMatrix);
    row.values.push_back(std::abs(qt.pairs(bz, bw) - ct.pairs(bz, bw)));
  }
  row.slope = loglog_slope(row.ks, row.values);
  row.pass = row.slope >= row.threshold;
  row.details = {{"pair", {bz, bw}}, {"classical", ct.pairs(bz, bw)}};
  return row;
}

/// p^Q of two sensors with disjoint supports: log p against k should be a
/// line of negative slope, and the local power-law exponent keeps growing.
inline ScanRow disjoint_pair_scan(const RegistrationScanConfig& g) {
  ScanRow row;
  row.name = "disjoint pair p^Q";
  row.ks = g.disjoint_ks;
  const auto pou = build_partition(octahedron_net(), g.disjoint_epsilon, g.disjoint_lambda);
  if (pou.supports_overlap(4, 5)) throw ConfigError("disjoint scan: supports of the antipodal pair overlap");
  std::vector<double> logs;
  for (int k : g.disjoint_ks) {
    const auto ctx = make_context(k);
    const auto s = sample_partition(ctx, pou);
    row.values.push_back(kernel_pair(ctx, s.per_sensor[4], s.per_sensor[5]));
    logs.push_back(std::log(std::max(row.values.back(), 1e-300)));
  }
  const double n = static_cast<double>(logs.size());
  double mk = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    mk += row.ks[i] / n;
    ml += logs[i] / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    sxy += (row.ks[i] - mk) * (logs[i] - ml);
    sxx += (row.ks[i] - mk) * (row.ks[i] - mk);
    syy += (logs[i] - ml) * (logs[i] - ml);
  }
  row.slope = sxy / sxx;  // per unit k
  const double r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 0.0;
  std::vector<double> local;
  bool steepening = true;
  for (std::size_t i = 1; i < logs.size(); ++i) {
    local.push_back((logs[i] - logs[i - 1]) / std::log(static_cast<double>(row.ks[i]) / row.ks[i - 1]));
    if (local.size() > 1) steepening = steepening && local.back() < local[local.size() - 2];
  }
  row.threshold = g.disjoint_max_at_last;
  row.pass = row.values.back() < g.disjoint_max_at_last && row.slope < 0.0 && r2 >= g.disjoint_min_r2 && steepening;
  row.details = {{"pair", {4, 5}}, {"log_p_vs_k_r2", r2}, {"local_exponents", local}, {"steepening", steepening}};
  return row;
}

inline std::vector<Region> equatorial_caps(double radius) {
  std::vector<Region> caps;
  for (int i = 0; i < 3; ++i) caps.push_back(Region::cap(SpherePoint::from_angles(kPi / 2, 0.1 + 2 * kPi * i / 3), radius));
  return caps;
}

/// |p^Q_I - p^C_I| for I = (1, 2, 3) on three overlapping equatorial caps.
inline ScanRow triple_registration_scan(const RegistrationScanConfig& g) {
  ScanRow row;
  row.name = "triple registration |p^Q_I - p^C_I|";
  row.threshold = g.triple_min_slope;
  row.ks = g.triple_ks;
  const CoverModel cover(equatorial_caps(g.triple_radius));
  const std::vector<std::size_t> index = {0, 1, 2};
  const double pc = classical_kfold(cover, index);
  for (int k : g.triple_ks) {
    const auto ops = cover.operators(make_context(k));
    row.values.push_back(std::abs(quantum_kfold(ops) - pc));
  }
  row.slope = loglog_slope(row.ks, row.values);
  row.pass = row.slope >= row.threshold;
  row.details = {{"index", index}, {"classical", pc}};
  return row;
}

inline RegistrationScanReport run_registration_scan(const ExperimentConfig& c) {
  RegistrationScanReport r;
  r.rows.push_back(overlap_pair_scan(c.registration));
  r.rows.push_back(disjoint_pair_scan(c.registration));
  r.rows.push_back(triple_registration_scan(c.registration));
  return r;
}

// ---------------------------------------------------------------------------
// Appendix suite.

struct KernelCheck {
  int k = 0;
  double operator_value = 0.0;  ///< tr(T_A - T_A^2)
  double kernel_value = 0.0;    ///< int_{A x A^c} |K|^2
  double relative = 0.0;
};

struct AppendixReport {
  std::vector<SchattenReport> reports;
  std::vector<KernelCheck> kernel_checks;
  double kernel_rel_tol = 0.0;
  std::vector<int> spectrum_ks;
  std::vector<double> spectrum_gaps;
  bool gaps_decreasing = false;
  int idempotency_k = 0;
  double idempotency_defect = 0.0;
  std::vector<double> k1_spectrum;

  bool kernel_ok() const {
    return std::all_of(kernel_checks.begin(), kernel_checks.end(),
                       [&](const KernelCheck& c) { return c.relative <= kernel_rel_tol; });
  }
  bool spectrum_ok() const {
    return gaps_decreasing && std::abs(idempotency_defect - 0.25) <= 0.02 && k1_spectrum.size() == 2 &&
           std::abs(k1_spectrum[0] - 0.25) < 1e-14 && std::abs(k1_spectrum[1] - 0.75) < 1e-14;
  }
  bool pass() const {
    return kernel_ok() && spectrum_ok() &&
           std::all_of(reports.begin(), reports.end(), [](const SchattenReport& r) { return r.pass; });
  }
};

inline nlohmann::json to_json(const AppendixReport& r) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& s : r.reports) reports.push_back(to_json(s));
  nlohmann::json kernel = nlohmann::json::array();
  for (const auto& k : r.kernel_checks) {
    kernel.push_back({{"k", k.k}, {"operator", k.operator_value}, {"kernel", k.kernel_value}, {"relative", k.relative}});
  }
  return {{"reports", reports},
          {"kernel_checks", kernel},
          {"kernel_rel_tol", r.kernel_rel_tol},
          {"spectrum", {{"ks", r.spectrum_ks}, {"min_gap_to_half", r.spectrum_gaps}, {"decreasing", r.gaps_decreasing}}},
          {"idempotency", {{"k", r.idempotency_k}, {"norm", r.idempotency_defect}}},
          {"k1_spectrum", r.k1_spectrum},
          {"pass", r.pass()}};
}

inline Region appendix_cap_a() { return Region::cap(SpherePoint::from_angles(0.4, 0.0), 1.0); }
inline Region appendix_cap_b() { return Region::cap(SpherePoint::from_angles(1.0, 0.8), 0.9); }
inline Region appendix_cap_c() { return Region::cap(SpherePoint::from_angles(0.9, -0.6), 1.1); }

inline AppendixReport run_appendix_suite(const ExperimentConfig& c) {
  const auto& ks = c.appendix.ks;
  const auto a = SimpleFunction::indicator(appendix_cap_a());
  const auto b = SimpleFunction::indicator(appendix_cap_b());
  const auto cc = SimpleFunction::indicator(appendix_cap_c());
  AppendixReport out;
  out.reports.push_back(scaling_scan(
      ks, [](const QuantizationContext& x) { return good_set_defect(x, Region::hemisphere()); },
      "hemisphere good-set defect ||T_A^2 - T_A||_1", 0.5, 0.45));
  out.reports.push_back(scaling_scan(
      ks, [](const QuantizationContext& x) { return good_set_integral(x, Region::hemisphere()) / x.dim(); },
      "hemisphere kernel integral / d", 0.5, 0.45));
  out.reports.push_back(scaling_scan(
      ks,
      [&](const QuantizationContext& x) {
        return product_defect(x, a, SimpleFunction::indicator(appendix_cap_a().complement()));
      },
      "product defect ||T_A T_{A^c}||_2", 0.25, 0.2));
  out.reports.push_back(scaling_scan(
      ks, [&](const QuantizationContext& x) { return product_defect(x, a, b); },
      "cap-pair product defect ||T_A T_B - T_{A cap B}||_2", 0.25, 0.2));
  out.reports.push_back(scaling_scan(
      ks, [&](const QuantizationContext& x) { return sqrt_defect(x, a); }, "square-root defect ||T_A^{1/2} - T_A||_4",
      0.125, 0.1));
  out.reports.push_back(scaling_scan(
      ks, [&](const QuantizationContext& x) { return sqrt_defect(x, SimpleFunction::indicator(appendix_cap_a(), 4.0)); },
      "square-root defect ||T(4 chi_A)^{1/2} - T(2 chi_A)||_4", 0.125, 0.1));
  out.reports.push_back(scaling_scan(
      ks, [&](const QuantizationContext& x) { return multi_time_check(x, {a, b, cc}).gap; },
      "multi-time gap |tr(P*P)/d - int f1 f2 f3|", 0.125, 0.1));

  out.kernel_rel_tol = c.appendix.kernel_rel_tol;
  for (int k : c.appendix.kernel_ks) {
    const auto ctx = make_context(k);
    KernelCheck kc;
    kc.k = k;
    kc.operator_value = good_set_defect(ctx, Region::hemisphere()) * ctx.dim();
    kc.kernel_value = good_set_integral(ctx, Region::hemisphere());
    kc.relative = std::abs(kc.operator_value - kc.kernel_value) / std::abs(kc.operator_value);
    out.kernel_checks.push_back(kc);
  }

  out.spectrum_ks = c.appendix.spectrum_ks;
  out.gaps_decreasing = true;
  for (int k : c.appendix.spectrum_ks) {
    out.spectrum_gaps.push_back(cap_spectrum(make_context(k), kPi / 2).min_gap_to_half);
    const std::size_t n = out.spectrum_gaps.size();
    if (n > 1) out.gaps_decreasing = out.gaps_decreasing && out.spectrum_gaps[n - 1] < out.spectrum_gaps[n - 2];
  }
  out.idempotency_k = c.appendix.idempotency_k;
  out.idempotency_defect = cap_spectrum(make_context(out.idempotency_k), kPi / 2).idempotency_defect;
  out.k1_spectrum = cap_spectrum(make_context(1), kPi / 2).eigenvalues;
  return out;
}

// ---------------------------------------------------------------------------
// Nerve inference.

inline std::vector<Region> tetrahedral_cover(double radius) {
  const double s = 1.0 / std::sqrt(3.0);
  const std::vector<Eigen::Vector3d> faces = {{-s, -s, -s}, {-s, s, s}, {s, -s, s}, {s, s, -s}};
  std::vector<Region> caps;
  for (const auto& f : faces) caps.push_back(Region::cap(SpherePoint::normalized(f), radius));
  return caps;
}

struct QuantumNerveRun {
  int k = 0;
  double threshold = 0.0;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> rejected_vertices;
  double max_vertex_probability = 0.0;
  double max_edge_probability = 0.0;
  bool equals_classical = false;
};

struct NerveReport {
  double cap_radius = 0.0;
  double m = 0.0;
  std::vector<std::size_t> classical_counts;
  std::vector<std::size_t> classical_betti;
  nlohmann::json classical_complex;
  std::vector<QuantumNerveRun> quantum;
  bool classical_ok() const { return classical_betti == std::vector<std::size_t>{1, 0, 1}; }
  bool pass() const {
    return classical_ok() && std::all_of(quantum.begin(), quantum.end(),
                                         [](const QuantumNerveRun& q) { return q.equals_classical; });
  }
};

inline nlohmann::json to_json(const NerveReport& r) {
  nlohmann::json q = nlohmann::json::array();
  for (const auto& x : r.quantum) {
    q.push_back({{"k", x.k},
                 {"threshold", x.threshold},
                 {"counts", x.counts},
                 {"rejected_vertices", x.rejected_vertices},
                 {"max_vertex_probability", x.max_vertex_probability},
                 {"max_edge_probability", x.max_edge_probability},
                 {"equals_classical", x.equals_classical}});
  }
  return {{"cap_radius", r.cap_radius},
          {"m", r.m},
          {"classical", {{"counts", r.classical_counts}, {"betti", r.classical_betti}, {"complex", r.classical_complex}}},
          {"quantum", q},
          {"pass", r.pass()}};
}

inline NerveReport run_nerve(const ExperimentConfig& c) {
  NerveReport r;
  r.cap_radius = c.nerve.cap_radius;
  r.m = c.nerve.m;
  const auto caps = tetrahedral_cover(c.nerve.cap_radius);
  const auto nerve = nerve_complex(caps);
  r.classical_counts = simplex_counts(nerve);
  r.classical_betti = betti_numbers_bruteforce(nerve, 2);
  r.classical_complex = to_json(nerve);
  const CoverModel cover(caps);
  for (int k : c.nerve.ks) {
    const auto ctx = make_context(k);
    const auto q = quantum_nerve(ctx, cover, c.nerve.m);
    QuantumNerveRun run;
    run.k = k;
    run.threshold = std::pow(ctx.hbar(), c.nerve.m);
    run.counts = simplex_counts(q.complex);
    run.rejected_vertices = q.rejected_vertices;
    for (const auto& [s, p] : q.probabilities) {
      if (s.size() == 1) run.max_vertex_probability = std::max(run.max_vertex_probability, p);
      if (s.size() == 2) run.max_edge_probability = std::max(run.max_edge_probability, p);
    }
    run.equals_classical = q.complex == nerve;
    r.quantum.push_back(run);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Hypergraph toy model.

struct HypergraphReport {
  std::string p1;
  std::string p12;
  std::vector<std::vector<std::string>> transition;
  std::string transition_21;  ///< P(2|1) in one-based labels
  std::vector<std::size_t> witness;  ///< a length-3 index vector where registration and walk differ
  std::string witness_registration;
  std::string witness_walk;
  bool pass = false;
};

inline nlohmann::json to_json(const HypergraphReport& r) {
  return {{"p1", r.p1},
          {"p12", r.p12},
          {"transition", r.transition},
          {"P(2|1)", r.transition_21},
          {"three_step_witness", r.witness},
          {"three_step_registration", r.witness_registration},
          {"three_step_walk", r.witness_walk},
          {"pass", r.pass}};
}

inline HypergraphReport run_hypergraph(const ExperimentConfig& c) {
  const auto& g = c.hypergraph;
  const Hypergraph h(g.vertices, g.edges);
  HypergraphReport r;
  r.p1 = to_string(h.registration({0}));
  if (h.edge_count() > 1) r.p12 = to_string(h.registration({0, 1}));
  const auto p = h.transition();
  for (const auto& row : p) {
    std::vector<std::string> s;
    for (const auto& x : row) s.push_back(to_string(x));
    r.transition.push_back(s);
  }
  if (h.edge_count() > 1) r.transition_21 = to_string(p[0][1]);
  auto edges = g.edges;
  if (!g.extra_edge.empty()) edges.push_back(g.extra_edge);
  const Hypergraph ext(g.vertices, edges);
  const std::size_t m = ext.edge_count();
  for (std::size_t i = 0; i < m && r.witness.empty(); ++i) {
    for (std::size_t j = 0; j < m && r.witness.empty(); ++j) {
      for (std::size_t l = 0; l < m && r.witness.empty(); ++l) {
        if (ext.registration({i, j, l}) != ext.walk({i, j, l})) {
          r.witness = {i, j, l};
          r.witness_registration = to_string(ext.registration({i, j, l}));
          r.witness_walk = to_string(ext.walk({i, j, l}));
        }
      }
    }
  }
  r.pass = !r.witness.empty();
  return r;
}

// ---------------------------------------------------------------------------
// Export.

/// Static SVG rendering of a barcode, one group per homology degree.
inline std::string barcode_svg(const Barcode& b, double max_value) {
  const double width = 600.0, left = 60.0, row = 10.0;
  std::size_t total = 0;
  for (int q = 0; q <= b.max_degree(); ++q) total += b.degree(q).size() + 2;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width + left + 20 << "\" height=\""
      << (total + 2) * row << "\">\n";
  double y = row;
  auto xpos = [&](double v) { return left + width * std::min(v, max_value) / (max_value > 0.0 ? max_value : 1.0); };
  for (int q = 0; q <= b.max_degree(); ++q) {
    svg << "  <g class=\"degree\" id=\"degree-" << q << "\">\n";
    svg << "    <text x=\"4\" y=\"" << y + row << "\" font-size=\"10\">H" << q << "</text>\n";
    y += row;
    for (const auto& bar : b.degree(q)) {
      const double x1 = xpos(bar.birth);
      const double x2 = bar.infinite() ? left + width + 10 : xpos(bar.death);
      svg << "    <line x1=\"" << x1 << "\" y1=\"" << y << "\" x2=\"" << x2 << "\" y2=\"" << y
          << "\" stroke=\"black\" stroke-width=\"3\"/>\n";
      y += row;
    }
    svg << "  </g>\n";
    y += row;
  }
  svg << "</svg>\n";
  return svg.str();
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

/// Writes report.json, per-k quantum tables (CSV), barcodes (JSON, SVG) into an existing directory.
inline std::vector<std::string> export_artifacts(const PipelineReport& report, const std::string& dir) {
  const std::filesystem::path root(dir);
  if (!std::filesystem::is_directory(root)) throw IoError("output directory does not exist: " + dir);
  std::vector<std::string> written;
  const auto put = [&](const std::string& name, const std::string& text) {
    detail::write_text(root / name, text);
    written.push_back((root / name).string());
  };
  put("report.json", to_json(report).dump(2) + "\n");
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    const auto& run = report.runs[i];
    const std::string tag = "k" + std::to_string(run.k);
    put("barcode_" + tag + ".json", to_json(run.barcode).dump(2) + "\n");
    put("barcode_" + tag + ".svg", barcode_svg(run.barcode, 2.0));
    if (i < report.tables.size()) {
      write_table_csv(report.tables[i].first, (root / ("table_a_" + tag + ".csv")).string());
      write_table_csv(report.tables[i].second, (root / ("table_b_" + tag + ".csv")).string());
      written.push_back((root / ("table_a_" + tag + ".csv")).string());
      written.push_back((root / ("table_b_" + tag + ".csv")).string());
    }
  }
  return written;
}

inline PipelineReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path);
  nlohmann::json j;
  in >> j;
  return pipeline_report_from_json(j);
}

}  // namespace qtopo
