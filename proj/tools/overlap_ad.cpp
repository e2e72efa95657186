// overlap-ad: experiment harness CLI.
//   run             train/evaluate suites from a JSON config
//   synth           inject synthetic anomalies into a CSV source
//   report          aggregate a JSONL results file
//   dump-embeddings write representation-layer activations of the test rows

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "oad/bench/report.hpp"
#include "oad/bench/runner.hpp"
#include "oad/data/dataset.hpp"
#include "oad/simd/kernels.hpp"
#include "oad/synth/generators.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override) {
  const auto configs = oad::bench::load_config_file(config_path);
  bool any_failed = false;
  for (const auto& cfg : configs) {
    std::string out_path = out_override.empty() ? cfg.out_path : out_override;
    std::ofstream file;
    std::ostream* sink = nullptr;
    if (!out_path.empty()) {
      file.open(out_path, std::ios::app);
      if (!file) {
        std::cerr << "cannot open output file: " << out_path << "\n";
        return 1;
      }
      sink = &file;
    }
    const auto records = oad::bench::run_suite(cfg, sink);
    for (const auto& rec : records) {
      if (sink == nullptr) std::cout << oad::bench::record_to_jsonl(rec) << "\n";
      if (!rec.ok) {
        any_failed = true;
        std::cerr << "run failed (dataset=" << rec.dataset
                  << ", loss=" << rec.loss << ", seed=" << rec.seed
                  << "): " << rec.error << "\n";
      }
    }
  }
  return any_failed ? 1 : 0;
}

int cmd_synth(const std::string& type, const std::string& source,
              const std::string& out, double alpha, double ratio,
              std::uint64_t seed, std::size_t n_normals,
              std::size_t max_components) {
  const oad::data::LabeledDataset src = oad::data::load_csv(source);
  oad::synth::SynthSpec spec;
  spec.type = oad::synth::anomaly_type_from_string(type);
  spec.alpha = alpha > 0.0 ? alpha : oad::synth::default_alpha(spec.type);
  spec.anomaly_ratio = ratio;
  spec.seed = seed;
  spec.n_normals = n_normals;
  spec.max_components = max_components;
  const oad::data::LabeledDataset ds =
      oad::synth::make_synthetic_dataset(src.features, spec);
  oad::data::save_csv(ds, out);
  std::cout << "wrote " << ds.n() << " rows (" << ds.anomaly_count()
            << " anomalies) to " << out << "\n";
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& group,
               const std::string& baseline) {
  oad::bench::ReportOptions opts;
  opts.baseline = baseline;
  opts.group_keys.clear();
  std::stringstream ss(group);
  std::string key;
  while (std::getline(ss, key, ',')) {
    if (!key.empty()) opts.group_keys.push_back(key);
  }
  const auto records = oad::bench::load_records(in_path);
  oad::bench::report(records, opts, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"overlap-ad: weakly-supervised anomaly-detection benchmark"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  auto* run = app.add_subcommand("run", "run experiment suites from a config");
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--out", out_path, "JSONL results file (overrides config)");

  std::string synth_type, synth_source, synth_out;
  double synth_alpha = -1.0, synth_ratio = 0.05;
  std::uint64_t synth_seed = 0;
  std::size_t synth_n_normals = 950, synth_max_components = 5;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--type", synth_type,
                    "local|global|clustered|dependency")->required();
  synth->add_option("--source", synth_source, "source CSV")->required();
  synth->add_option("--out", synth_out, "output CSV")->required();
  synth->add_option("--alpha", synth_alpha, "scaling (default per type)");
  synth->add_option("--ratio", synth_ratio, "anomaly ratio (default 0.05)");
  synth->add_option("--seed", synth_seed, "seed (default 0)");
  synth->add_option("--n-normals", synth_n_normals,
                    "generated normal rows (default 950)");
  synth->add_option("--max-components", synth_max_components,
                    "GMM component search bound (default 5)");

  std::string report_in, report_group = "loss,dataset";
  std::string report_baseline = "overlap";
  auto* rep = app.add_subcommand("report", "aggregate a results file");
  rep->add_option("--in", report_in, "JSONL results file")->required();
  rep->add_option("--group", report_group, "grouping keys (default loss,dataset)");
  rep->add_option("--baseline", report_baseline,
                  "loss to test against the rest (default overlap)");

  std::string dump_config, dump_out;
  auto* dump = app.add_subcommand("dump-embeddings",
                                  "write test-row representation activations");
  dump->add_option("--config", dump_config, "JSON config file")->required();
  dump->add_option("--out", dump_out, "output CSV")->required();

  bool show_simd = false;
  app.add_flag("--simd-level", show_simd, "print the active SIMD level");

  CLI11_PARSE(app, argc, argv);

  if (show_simd) {
    std::cout << "simd: "
              << oad::simd::level_name(oad::simd::active_level()) << "\n";
  }

  try {
    if (*run) return cmd_run(config_path, out_path);
    if (*synth) {
      return cmd_synth(synth_type, synth_source, synth_out, synth_alpha,
                       synth_ratio, synth_seed, synth_n_normals,
                       synth_max_components);
    }
    if (*rep) return cmd_report(report_in, report_group, report_baseline);
    if (*dump) {
      const auto configs = oad::bench::load_config_file(dump_config);
      oad::bench::dump_embeddings(configs.front(), dump_out);
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
