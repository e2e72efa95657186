#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oad/baselines/baselines.hpp"
#include "oad/overlap/overlap.hpp"
#include "oad/synth/generators.hpp"

namespace oad::bench {

extern const std::vector<std::string> kLossNames;
bool is_valid_loss(const std::string& name);

struct SynthDatasetSpec {
  synth::AnomalyType type = synth::AnomalyType::local;
  std::size_t n_normals = 950;
  double ratio = 0.05;
  double alpha = -1.0;  // <= 0 means the per-type default
  std::size_t max_components = 5;
  std::string source_path;              // CSV source, or
  std::string source_builtin = "blobs2";  // built-in generator name
  std::size_t source_n = 2000;
};

struct DatasetConfig {
  std::string name;  // reporting label
  std::string path;  // CSV path, exclusive with synth
  std::optional<SynthDatasetSpec> synth;
};

struct NetworkConfig {
  std::size_t hidden_dim = 20;
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  double learning_rate = 0.001;
  double momentum = 0.7;
  double weight_decay = 0.01;
  double anomaly_fraction = 0.5;  // labeled share of each mini-batch
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::string loss = "overlap";
  NetworkConfig network;
  overlap::OverlapConfig overlap_cfg;
  baselines::BaselineConfig baseline_cfg;
  double gamma_l = 0.1;
  double train_fraction = 0.7;
  std::size_t repeats = 1;
  std::uint64_t base_seed = 0;
  std::string out_path;
  std::size_t ordinal_eval_pairs = 30;
};

// One config object or an array of them.
std::vector<ExperimentConfig> load_config_file(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

// FNV-1a over the canonical JSON form.
std::string config_hash(const ExperimentConfig& cfg);

struct ResultRecord {
  std::string config_hash;
  std::string dataset;
  std::string loss;
  std::uint64_t seed = 0;
  double gamma_l = 0.0;
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  double train_seconds = 0.0;
  double final_loss = 0.0;
  double param_change_norm = 0.0;
  bool ok = true;
  std::string error;
};

std::string record_to_jsonl(const ResultRecord& rec);
ResultRecord record_from_jsonl(const std::string& line);

}  // namespace oad::bench
