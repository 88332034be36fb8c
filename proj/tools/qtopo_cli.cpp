#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>

#include "qtopo/pipeline.hpp"

using namespace qtopo;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

struct Options {
  std::string config;
  std::vector<int> ks;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  std::string out;
};

ExperimentConfig effective_config(const Options& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (!o.ks.empty()) {
    c.ks = o.ks;
    c.registration.overlap_ks = o.ks;
    c.registration.triple_ks = o.ks;
    c.appendix.ks = o.ks;
    c.nerve.ks = o.ks;
  }
  if (o.seed) c.seed = *o.seed;
  if (o.strict) c.strict_constants = true;
  if (!o.out.empty()) c.output_dir = o.out;
  validate_config(c);
  return c;
}

void write_json(const nlohmann::json& j, const std::string& out_dir, const std::string& name) {
  std::cout << j.dump(2) << "\n";
  if (out_dir.empty()) return;
  const std::filesystem::path dir(out_dir);
  if (!std::filesystem::is_directory(dir)) throw IoError("output directory does not exist: " + out_dir);
  std::ofstream f(dir / name);
  if (!f) throw IoError("cannot write " + (dir / name).string());
  f << j.dump(2) << "\n";
}

void summarize(const PipelineReport& r) {
  for (const auto& run : r.runs) {
    const auto total = [](const std::vector<std::size_t>& c) { return std::accumulate(c.begin(), c.end(), std::size_t{0}); };
    std::cerr << "k=" << run.k << " threshold=" << run.threshold << " |Q_a|=" << total(run.qa_counts)
              << " |Q_b|=" << total(run.qb_counts) << " ranks=(";
    for (std::size_t q = 0; q < run.ranks.size(); ++q) std::cerr << (q ? "," : "") << run.ranks[q];
    std::cerr << ") " << (run.matches_expected ? "matches" : "differs from") << " H(S^2)\n";
    for (const auto& w : run.warnings) std::cerr << "  warning: " << w << "\n";
  }
  std::cerr << "plateau span " << r.plateau.span << (r.pass ? " PASS" : " FAIL") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homology of the quantized sphere from measurement statistics"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment config");
    sub->add_option("--k", o.ks, "quantization levels k (overrides the config)");
    sub->add_option("--seed", o.seed, "seed for random nets and tie-breaking");
    sub->add_flag("--strict", o.strict, "enforce every admissibility inequality");
    sub->add_option("--out", o.out, "existing output directory");
  };
  auto* pipeline = app.add_subcommand("pipeline", "run the inference pipeline and print the report");
  auto* scan = app.add_subcommand("scan-registration", "registration convergence scans");
  auto* appendix = app.add_subcommand("appendix", "Schatten-norm scaling suite");
  auto* nerve = app.add_subcommand("nerve", "classical and quantum nerve of a four-cap cover");
  auto* hyper = app.add_subcommand("hypergraph", "exact hypergraph registration model");
  auto* exporter = app.add_subcommand("export", "run the pipeline and write report, tables and barcodes");
  for (auto* sub : {pipeline, scan, appendix, nerve, hyper, exporter}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    const auto c = effective_config(o);
    bool pass = false;
    if (pipeline->parsed()) {
      const auto r = run_inference_pipeline(c);
      summarize(r);
      write_json(to_json(r), o.out, "report.json");
      pass = r.pass;
    } else if (exporter->parsed()) {
      const auto r = run_inference_pipeline(c);
      summarize(r);
      for (const auto& f : export_artifacts(r, c.output_dir)) std::cout << f << "\n";
      pass = r.pass;
    } else if (scan->parsed()) {
      const auto r = run_registration_scan(c);
      write_json(to_json(r), o.out, "registration_scan.json");
      pass = r.pass();
    } else if (appendix->parsed()) {
      const auto r = run_appendix_suite(c);
      write_json(to_json(r), o.out, "appendix.json");
      pass = r.pass();
    } else if (nerve->parsed()) {
      const auto r = run_nerve(c);
      write_json(to_json(r), o.out, "nerve.json");
      pass = r.pass();
    } else if (hyper->parsed()) {
      const auto r = run_hypergraph(c);
      write_json(to_json(r), o.out, "hypergraph.json");
      pass = r.pass;
    }
    return pass ? kExitPass : kExitFailed;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}
