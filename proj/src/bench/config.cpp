#include "oad/bench/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace oad::bench {

using nlohmann::json;

const std::vector<std::string> kLossNames = {
    "overlap", "overlap_arbitrary", "overlap_ranking", "overlap_combined",
    "overlap_gaussian", "minus", "inverse", "hinge", "deviation", "ordinal"};

bool is_valid_loss(const std::string& name) {
  for (const auto& l : kLossNames) {
    if (l == name) return true;
  }
  return false;
}

namespace {

overlap::Strategy strategy_from_string(const std::string& s) {
  if (s == "random") return overlap::Strategy::random_pick;
  if (s == "ensemble") return overlap::Strategy::ensemble;
  throw std::invalid_argument("unknown intersection strategy: " + s);
}

const char* strategy_name(overlap::Strategy s) {
  return s == overlap::Strategy::ensemble ? "ensemble" : "random";
}

SynthDatasetSpec parse_synth(const json& j) {
  SynthDatasetSpec spec;
  spec.type = synth::anomaly_type_from_string(j.at("type").get<std::string>());
  spec.n_normals = j.value("n_normals", spec.n_normals);
  spec.ratio = j.value("ratio", spec.ratio);
  spec.alpha = j.value("alpha", -1.0);
  spec.max_components = j.value("max_components", spec.max_components);
  if (j.contains("source")) {
    const json& s = j.at("source");
    if (s.contains("path")) {
      spec.source_path = s.at("path").get<std::string>();
    }
    spec.source_builtin = s.value("builtin", spec.source_builtin);
    spec.source_n = s.value("n", spec.source_n);
  }
  return spec;
}

json synth_to_json(const SynthDatasetSpec& spec) {
  json j;
  j["type"] = synth::anomaly_type_name(spec.type);
  j["n_normals"] = spec.n_normals;
  j["ratio"] = spec.ratio;
  j["alpha"] = spec.alpha;
  j["max_components"] = spec.max_components;
  json src;
  if (!spec.source_path.empty()) src["path"] = spec.source_path;
  src["builtin"] = spec.source_builtin;
  src["n"] = spec.source_n;
  j["source"] = src;
  return j;
}

ExperimentConfig parse_one(const json& j) {
  ExperimentConfig cfg;
  const json& ds = j.at("dataset");
  cfg.dataset.name = ds.value("name", std::string());
  cfg.dataset.path = ds.value("path", std::string());
  if (ds.contains("synth")) {
    cfg.dataset.synth = parse_synth(ds.at("synth"));
    if (cfg.dataset.name.empty()) {
      cfg.dataset.name = synth::anomaly_type_name(cfg.dataset.synth->type);
    }
  }
  if (cfg.dataset.path.empty() && !cfg.dataset.synth.has_value()) {
    throw std::invalid_argument("dataset needs either a path or a synth spec");
  }
  if (cfg.dataset.name.empty()) cfg.dataset.name = cfg.dataset.path;

  cfg.loss = j.value("loss", cfg.loss);
  if (!is_valid_loss(cfg.loss)) {
    throw std::invalid_argument("unknown loss: " + cfg.loss);
  }

  if (j.contains("network")) {
    const json& n = j.at("network");
    cfg.network.hidden_dim = n.value("hidden_dim", cfg.network.hidden_dim);
    cfg.network.epochs = n.value("epochs", cfg.network.epochs);
    cfg.network.batch_size = n.value("batch_size", cfg.network.batch_size);
    cfg.network.learning_rate = n.value("lr", cfg.network.learning_rate);
    cfg.network.momentum = n.value("momentum", cfg.network.momentum);
    cfg.network.weight_decay =
        n.value("weight_decay", cfg.network.weight_decay);
    cfg.network.anomaly_fraction =
        n.value("anomaly_fraction", cfg.network.anomaly_fraction);
  }
  if (j.contains("overlap")) {
    const json& o = j.at("overlap");
    cfg.overlap_cfg.grid_n = o.value("grid_n", cfg.overlap_cfg.grid_n);
    cfg.overlap_cfg.bandwidth = o.value("bandwidth", cfg.overlap_cfg.bandwidth);
    if (o.contains("strategy")) {
      cfg.overlap_cfg.strategy =
          strategy_from_string(o.at("strategy").get<std::string>());
    }
    cfg.overlap_cfg.extension_width =
        o.value("extension_width", cfg.overlap_cfg.extension_width);
  }
  if (j.contains("baseline")) {
    const json& b = j.at("baseline");
    cfg.baseline_cfg.bnd = b.value("bnd", cfg.baseline_cfg.bnd);
    cfg.baseline_cfg.margin = b.value("margin", cfg.baseline_cfg.margin);
    cfg.baseline_cfg.mu_nn = b.value("mu_nn", cfg.baseline_cfg.mu_nn);
    cfg.baseline_cfg.mu_an = b.value("mu_an", cfg.baseline_cfg.mu_an);
    cfg.baseline_cfg.mu_aa = b.value("mu_aa", cfg.baseline_cfg.mu_aa);
    cfg.baseline_cfg.deviation_prior_draws =
        b.value("deviation_draws", cfg.baseline_cfg.deviation_prior_draws);
    cfg.baseline_cfg.deviation_batch_stats =
        b.value("deviation_batch_stats", cfg.baseline_cfg.deviation_batch_stats);
  }
  cfg.gamma_l = j.value("gamma_l", cfg.gamma_l);
  cfg.train_fraction = j.value("train_fraction", cfg.train_fraction);
  cfg.repeats = j.value("repeats", cfg.repeats);
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  cfg.base_seed = j.value("seed", cfg.base_seed);
  cfg.out_path = j.value("out", cfg.out_path);
  cfg.ordinal_eval_pairs =
      j.value("ordinal_eval_pairs", cfg.ordinal_eval_pairs);
  return cfg;
}

json config_to_json_obj(const ExperimentConfig& cfg) {
  json j;
  json ds;
  ds["name"] = cfg.dataset.name;
  if (!cfg.dataset.path.empty()) ds["path"] = cfg.dataset.path;
  if (cfg.dataset.synth.has_value()) {
    ds["synth"] = synth_to_json(*cfg.dataset.synth);
  }
  j["dataset"] = ds;
  j["loss"] = cfg.loss;
  j["network"] = {{"hidden_dim", cfg.network.hidden_dim},
                  {"epochs", cfg.network.epochs},
                  {"batch_size", cfg.network.batch_size},
                  {"lr", cfg.network.learning_rate},
                  {"momentum", cfg.network.momentum},
                  {"weight_decay", cfg.network.weight_decay},
                  {"anomaly_fraction", cfg.network.anomaly_fraction}};
  j["overlap"] = {{"grid_n", cfg.overlap_cfg.grid_n},
                  {"bandwidth", cfg.overlap_cfg.bandwidth},
                  {"strategy", strategy_name(cfg.overlap_cfg.strategy)},
                  {"extension_width", cfg.overlap_cfg.extension_width}};
  j["baseline"] = {{"bnd", cfg.baseline_cfg.bnd},
                   {"margin", cfg.baseline_cfg.margin},
                   {"mu_nn", cfg.baseline_cfg.mu_nn},
                   {"mu_an", cfg.baseline_cfg.mu_an},
                   {"mu_aa", cfg.baseline_cfg.mu_aa},
                   {"deviation_draws", cfg.baseline_cfg.deviation_prior_draws},
                   {"deviation_batch_stats",
                    cfg.baseline_cfg.deviation_batch_stats}};
  j["gamma_l"] = cfg.gamma_l;
  j["train_fraction"] = cfg.train_fraction;
  j["repeats"] = cfg.repeats;
  j["seed"] = cfg.base_seed;
  j["ordinal_eval_pairs"] = cfg.ordinal_eval_pairs;
  return j;
}

}  // namespace

std::vector<ExperimentConfig> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  const json j = json::parse(ss.str());
  std::vector<ExperimentConfig> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(parse_one(item));
  } else {
    out.push_back(parse_one(j));
  }
  return out;
}

ExperimentConfig parse_config_json(const std::string& text) {
  return parse_one(json::parse(text));
}

std::string config_to_json(const ExperimentConfig& cfg) {
  return config_to_json_obj(cfg).dump();
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = config_to_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string record_to_jsonl(const ResultRecord& rec) {
  json j;
  j["config_hash"] = rec.config_hash;
  j["dataset"] = rec.dataset;
  j["loss"] = rec.loss;
  j["seed"] = rec.seed;
  j["gamma_l"] = rec.gamma_l;
  if (rec.ok) {
    j["auc_roc"] = rec.auc_roc;
    j["auc_pr"] = rec.auc_pr;
    j["train_seconds"] = rec.train_seconds;
    j["final_loss"] = rec.final_loss;
    j["param_change_norm"] = rec.param_change_norm;
  } else {
    j["error"] = rec.error;
  }
  return j.dump();
}

ResultRecord record_from_jsonl(const std::string& line) {
  const json j = json::parse(line);
  ResultRecord rec;
  rec.config_hash = j.value("config_hash", std::string());
  rec.dataset = j.value("dataset", std::string());
  rec.loss = j.value("loss", std::string());
  rec.seed = j.value("seed", std::uint64_t{0});
  rec.gamma_l = j.value("gamma_l", 0.0);
  if (j.contains("error")) {
    rec.ok = false;
    rec.error = j.at("error").get<std::string>();
  } else {
    rec.auc_roc = j.value("auc_roc", 0.0);
    rec.auc_pr = j.value("auc_pr", 0.0);
    rec.train_seconds = j.value("train_seconds", 0.0);
    rec.final_loss = j.value("final_loss", 0.0);
    rec.param_change_norm = j.value("param_change_norm", 0.0);
  }
  return rec;
}

}  // namespace oad::bench
