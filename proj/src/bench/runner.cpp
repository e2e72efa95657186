#include "oad/bench/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>

#include "oad/error.hpp"
#include "oad/metrics/metrics.hpp"
#include "oad/rng.hpp"

namespace oad::bench {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
  return r.next_u64();
}

Matrix blobs2(std::size_t n, std::uint64_t seed) {
  struct Blob {
    double w, mx, my, cxx, cxy, cyy;
  };
  const Blob blobs[2] = {{0.55, 2.0, 1.0, 0.5, 0.15, 0.35},
                         {0.45, -1.0, -2.0, 0.4, -0.1, 0.6}};
  Matrix out(n, 2);
  Rng rng(seed);
  for (std::size_t r = 0; r < n; ++r) {
    const Blob& b = rng.uniform() < blobs[0].w ? blobs[0] : blobs[1];
    const double l11 = std::sqrt(b.cxx);
    const double l21 = b.cxy / l11;
    const double l22 = std::sqrt(b.cyy - l21 * l21);
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    out(r, 0) = b.mx + l11 * z1;
    out(r, 1) = b.my + l21 * z1 + l22 * z2;
  }
  return out;
}

// Single off-origin component; scaled-mean anomalies form one coherent
// cluster, so a handful of revealed labels covers the anomaly support.
Matrix gauss2(std::size_t n, std::uint64_t seed) {
  Matrix out(n, 2);
  Rng rng(seed);
  for (std::size_t r = 0; r < n; ++r) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    out(r, 0) = 1.5 + 0.7 * z1;
    out(r, 1) = -1.2 + 0.8 * (0.1 * z1 + std::sqrt(1.0 - 0.01) * z2);
  }
  return out;
}

// Tighter, well-separated blobs: the alpha-scaled halo of each blob falls
// into empty space, which keeps the local-anomaly boundary crisp.
Matrix blobs2_tight(std::size_t n, std::uint64_t seed) {
  Matrix out(n, 2);
  Rng rng(seed);
  for (std::size_t r = 0; r < n; ++r) {
    const bool first = rng.uniform() < 0.5;
    const double sd = first ? 0.35 : 0.4;
    out(r, 0) = (first ? 2.5 : -2.5) + sd * rng.normal();
    out(r, 1) = (first ? 2.0 : -2.5) + sd * rng.normal();
  }
  return out;
}

Matrix corr2(std::size_t n, std::uint64_t seed) {
  Matrix out(n, 2);
  Rng rng(seed);
  const double rho = 0.9;
  const double resid = std::sqrt(1.0 - rho * rho);
  for (std::size_t r = 0; r < n; ++r) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    out(r, 0) = z1;
    out(r, 1) = std::exp(0.6 * (rho * z1 + resid * z2));
  }
  return out;
}

// Plain bivariate Gaussian with strong correlation; independence-broken
// samples leave the diagonal band visibly.
Matrix corr2_strong(std::size_t n, std::uint64_t seed) {
  Matrix out(n, 2);
  Rng rng(seed);
  const double rho = 0.95;
  const double resid = std::sqrt(1.0 - rho * rho);
  for (std::size_t r = 0; r < n; ++r) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    out(r, 0) = z1;
    out(r, 1) = rho * z1 + resid * z2;
  }
  return out;
}

overlap::ScoreBatch split_scores(const std::vector<double>& scores,
                                 std::size_t n_unlabeled) {
  overlap::ScoreBatch batch;
  batch.s_n.assign(scores.begin(), scores.begin() + n_unlabeled);
  batch.s_a.assign(scores.begin() + n_unlabeled, scores.end());
  return batch;
}

struct Pools {
  Matrix unlabeled;
  Matrix labeled;
};

Pools make_pools(const data::LabeledDataset& train_ds) {
  std::vector<std::size_t> u_idx;
  std::vector<std::size_t> a_idx;
  for (std::size_t i = 0; i < train_ds.n(); ++i) {
    (train_ds.visibility[i] == 1 ? a_idx : u_idx).push_back(i);
  }
  if (a_idx.empty()) {
    throw std::invalid_argument("train: no revealed anomalies (gamma_l == 0?)");
  }
  return {train_ds.features.take_rows(u_idx),
          train_ds.features.take_rows(a_idx)};
}

}  // namespace

Matrix builtin_source(const std::string& name, std::size_t n,
                      std::uint64_t seed) {
  if (name == "blobs2") return blobs2(n, seed);
  if (name == "gauss2") return gauss2(n, seed);
  if (name == "blobs2_tight") return blobs2_tight(n, seed);
  if (name == "corr2") return corr2(n, seed);
  if (name == "corr2_strong") return corr2_strong(n, seed);
  throw std::invalid_argument("unknown builtin source: " + name);
}

data::LabeledDataset build_dataset(const ExperimentConfig& cfg,
                                   std::uint64_t seed) {
  if (!cfg.dataset.synth.has_value()) {
    return data::load_csv(cfg.dataset.path);
  }
  const SynthDatasetSpec& s = *cfg.dataset.synth;
  Matrix source;
  if (!s.source_path.empty()) {
    source = data::load_csv(s.source_path).features;
  } else {
    source = builtin_source(s.source_builtin, s.source_n,
                            derive_seed(seed, 9));
  }
  synth::SynthSpec spec;
  spec.type = s.type;
  spec.alpha = s.alpha > 0.0 ? s.alpha : synth::default_alpha(s.type);
  spec.n_normals = s.n_normals;
  spec.anomaly_ratio = s.ratio;
  spec.seed = derive_seed(seed, 8);
  spec.max_components = s.max_components;
  return synth::make_synthetic_dataset(source, spec);
}

TrainResult train(const ExperimentConfig& cfg,
                  const data::LabeledDataset& train_ds, std::uint64_t seed) {
  const bool ordinal = cfg.loss == "ordinal";
  const std::size_t d = train_ds.dim();
  const std::size_t input_dim = ordinal ? 2 * d : d;

  TrainResult res;
  res.net = nn::init_network(input_dim, cfg.network.hidden_dim,
                             derive_seed(seed, 1));
  res.initial = res.net;
  nn::OptimizerState opt =
      nn::init_optimizer(res.net, cfg.network.learning_rate,
                         cfg.network.momentum, cfg.network.weight_decay);

  Rng loss_rng(derive_seed(seed, 3));
  Rng pair_rng(derive_seed(seed, 6));

  const auto t0 = std::chrono::steady_clock::now();

  if (ordinal) {
    const Pools pools = make_pools(train_ds);
    const std::size_t pairs_per_type = std::max<std::size_t>(
        1, cfg.network.batch_size / 2);
    const std::size_t batches = std::max<std::size_t>(
        1, pools.unlabeled.rows() / (cfg.network.batch_size / 2));
    for (std::size_t epoch = 0; epoch < cfg.network.epochs; ++epoch) {
      double epoch_loss = 0.0;
      for (std::size_t b = 0; b < batches; ++b) {
        const baselines::PairBatch pairs =
            baselines::build_pairs(pools.unlabeled, pools.labeled,
                                   pairs_per_type, cfg.baseline_cfg, pair_rng);
        nn::ForwardCache cache;
        const std::vector<double> scores =
            nn::forward(res.net, pairs.features, nn::Mode::train, &cache);
        const overlap::LossResult lr =
            baselines::ordinal_loss(scores, pairs.targets);
        const nn::GradientSet grads =
            nn::backward(res.net, cache, lr.score_grads);
        nn::sgd_step(res.net, grads, opt);
        epoch_loss += lr.loss;
      }
      res.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
    }
  } else {
    data::BatchSampler sampler(train_ds, cfg.network.batch_size,
                               derive_seed(seed, 2),
                               cfg.network.anomaly_fraction);
    const std::size_t batches = sampler.batches_per_epoch();
    for (std::size_t epoch = 0; epoch < cfg.network.epochs; ++epoch) {
      double epoch_loss = 0.0;
      std::size_t executed = 0;
      std::size_t skipped = 0;
      for (std::size_t b = 0; b < batches; ++b) {
        auto [xu, xa] = sampler.next();
        Matrix x = xu;
        x.append_rows(xa);
        nn::ForwardCache cache;
        const std::vector<double> scores =
            nn::forward(res.net, x, nn::Mode::train, &cache);
        const overlap::ScoreBatch batch = split_scores(scores, xu.rows());
        overlap::LossResult lr;
        try {
          if (cfg.loss == "overlap") {
            lr = overlap::overlap_loss(batch, cfg.overlap_cfg, loss_rng);
          } else if (cfg.loss == "overlap_arbitrary") {
            lr = overlap::overlap_arbitrary(batch, cfg.overlap_cfg);
          } else if (cfg.loss == "overlap_ranking") {
            lr = overlap::ranking_term(batch);
          } else if (cfg.loss == "overlap_combined") {
            lr = overlap::overlap_combined(batch, cfg.overlap_cfg);
          } else if (cfg.loss == "overlap_gaussian") {
            lr = overlap::overlap_gaussian(batch);
          } else if (cfg.loss == "minus") {
            lr = baselines::minus_loss(batch, cfg.baseline_cfg);
          } else if (cfg.loss == "inverse") {
            lr = baselines::inverse_loss(batch);
          } else if (cfg.loss == "hinge") {
            lr = baselines::hinge_loss(batch, cfg.baseline_cfg);
          } else if (cfg.loss == "deviation") {
            lr = baselines::deviation_loss(batch, cfg.baseline_cfg, loss_rng);
          } else {
            throw std::invalid_argument("unknown loss: " + cfg.loss);
          }
        } catch (const degenerate_batch_error&) {
          ++skipped;
          ++res.skipped_batches;
          continue;
        }
        const nn::GradientSet grads =
            nn::backward(res.net, cache, lr.score_grads);
        nn::sgd_step(res.net, grads, opt);
        epoch_loss += lr.loss;
        ++executed;
      }
      if (skipped * 2 > batches) {
        throw std::runtime_error(
            "train: more than half the batches in an epoch were degenerate");
      }
      res.epoch_losses.push_back(
          executed > 0 ? epoch_loss / static_cast<double>(executed) : 0.0);
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  res.train_seconds =
      std::chrono::duration<double>(t1 - t0).count();
  return res;
}

EvalResult evaluate(nn::ScorerNetwork& net, const data::LabeledDataset& test,
                    bool rank_by_magnitude) {
  EvalResult res;
  res.scores = nn::forward(net, test.features, nn::Mode::eval);
  if (rank_by_magnitude) {
    for (auto& s : res.scores) s = std::abs(s);
  }
  res.auc_roc = metrics::auc_roc(res.scores, test.labels);
  res.auc_pr = metrics::auc_pr(res.scores, test.labels);
  return res;
}

EvalResult evaluate_ordinal(nn::ScorerNetwork& net,
                            const data::LabeledDataset& test,
                            const data::LabeledDataset& train_ds,
                            std::size_t eval_pairs, std::uint64_t seed) {
  const Pools pools = make_pools(train_ds);
  const std::size_t d = test.dim();
  const std::size_t nt = test.n();
  Rng rng(derive_seed(seed, 7));

  // Row layout per test row: eval_pairs (anomaly, x) pairs then eval_pairs
  // (x, unlabeled) pairs.
  Matrix pairs(2 * eval_pairs * nt, 2 * d);
  std::size_t row = 0;
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t e = 0; e < eval_pairs; ++e, ++row) {
      const std::size_t a = rng.uniform_below(pools.labeled.rows());
      double* dst = pairs.data() + row * 2 * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] = pools.labeled(a, j);
      for (std::size_t j = 0; j < d; ++j) dst[d + j] = test.features(t, j);
    }
    for (std::size_t e = 0; e < eval_pairs; ++e, ++row) {
      const std::size_t u = rng.uniform_below(pools.unlabeled.rows());
      double* dst = pairs.data() + row * 2 * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] = test.features(t, j);
      for (std::size_t j = 0; j < d; ++j) dst[d + j] = pools.unlabeled(u, j);
    }
  }
  const std::vector<double> pair_scores =
      nn::forward(net, pairs, nn::Mode::eval);

  EvalResult res;
  res.scores.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    double acc = 0.0;
    const std::size_t base = t * 2 * eval_pairs;
    for (std::size_t e = 0; e < 2 * eval_pairs; ++e) {
      acc += pair_scores[base + e];
    }
    res.scores[t] = acc / static_cast<double>(eval_pairs);
  }
  res.auc_roc = metrics::auc_roc(res.scores, test.labels);
  res.auc_pr = metrics::auc_pr(res.scores, test.labels);
  return res;
}

namespace {

ResultRecord run_on(const data::LabeledDataset& ds,
                    const ExperimentConfig& cfg, std::uint64_t seed) {
  ResultRecord rec;
  rec.config_hash = config_hash(cfg);
  rec.dataset = cfg.dataset.name;
  rec.loss = cfg.loss;
  rec.seed = seed;
  rec.gamma_l = cfg.gamma_l;

  data::SplitSpec split_spec;
  split_spec.train_fraction = cfg.train_fraction;
  split_spec.gamma_l = cfg.gamma_l;
  split_spec.seed = derive_seed(seed, 5);
  auto [train_ds, test_ds] = data::stratified_split(ds, split_spec);
  train_ds = data::reveal_labels(train_ds, cfg.gamma_l, derive_seed(seed, 4));
  data::zscore_fit_apply(train_ds, test_ds);

  TrainResult tr = train(cfg, train_ds, seed);
  const bool by_magnitude = cfg.loss == "minus" || cfg.loss == "inverse";
  const EvalResult ev =
      cfg.loss == "ordinal"
          ? evaluate_ordinal(tr.net, test_ds, train_ds,
                             cfg.ordinal_eval_pairs, seed)
          : evaluate(tr.net, test_ds, by_magnitude);

  rec.auc_roc = ev.auc_roc;
  rec.auc_pr = ev.auc_pr;
  rec.train_seconds = tr.train_seconds;
  rec.final_loss = tr.epoch_losses.empty() ? 0.0 : tr.epoch_losses.back();
  rec.param_change_norm = nn::param_change_norm(tr.net, tr.initial);
  return rec;
}

}  // namespace

ResultRecord run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  // The dataset belongs to the suite: repeats re-split one realization.
  const data::LabeledDataset ds = build_dataset(cfg, cfg.base_seed);
  return run_on(ds, cfg, seed);
}

std::vector<ResultRecord> run_suite(const ExperimentConfig& cfg,
                                    std::ostream* sink) {
  std::vector<ResultRecord> records;
  std::optional<data::LabeledDataset> ds;
  std::string build_error;
  try {
    ds = build_dataset(cfg, cfg.base_seed);
  } catch (const std::exception& ex) {
    build_error = ex.what();
  }
  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed = cfg.base_seed + r;
    ResultRecord rec;
    try {
      if (!ds.has_value()) {
        throw std::runtime_error("dataset: " + build_error);
      }
      rec = run_on(*ds, cfg, seed);
    } catch (const std::exception& ex) {
      rec.config_hash = config_hash(cfg);
      rec.dataset = cfg.dataset.name;
      rec.loss = cfg.loss;
      rec.seed = seed;
      rec.gamma_l = cfg.gamma_l;
      rec.ok = false;
      rec.error = ex.what();
    }
    records.push_back(rec);
    if (sink != nullptr) {
      (*sink) << record_to_jsonl(rec) << '\n';
      sink->flush();
    }
  }
  return records;
}

void dump_embeddings(const ExperimentConfig& cfg,
                     const std::string& out_path) {
  const std::uint64_t seed = cfg.base_seed;
  const data::LabeledDataset ds = build_dataset(cfg, cfg.base_seed);
  data::SplitSpec split_spec;
  split_spec.train_fraction = cfg.train_fraction;
  split_spec.gamma_l = cfg.gamma_l;
  split_spec.seed = derive_seed(seed, 5);
  auto [train_ds, test_ds] = data::stratified_split(ds, split_spec);
  train_ds = data::reveal_labels(train_ds, cfg.gamma_l, derive_seed(seed, 4));
  data::zscore_fit_apply(train_ds, test_ds);

  TrainResult tr = train(cfg, train_ds, seed);
  if (cfg.loss == "ordinal") {
    throw std::invalid_argument(
        "dump-embeddings: ordinal pairs have no per-row embedding");
  }
  nn::ForwardCache cache;
  const std::vector<double> scores =
      nn::forward(tr.net, test_ds.features, nn::Mode::eval, &cache);

  std::ofstream out(out_path);
  if (!out) {
    throw std::runtime_error("dump-embeddings: cannot open " + out_path);
  }
  const std::size_t h = tr.net.hidden_dim;
  for (std::size_t j = 0; j < h; ++j) out << 'h' << (j + 1) << ',';
  out << "score,label\n";
  char buf[40];
  for (std::size_t r = 0; r < test_ds.n(); ++r) {
    for (std::size_t j = 0; j < h; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", cache.hidden[r * h + j]);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", scores[r]);
    out << buf << ',' << static_cast<int>(test_ds.labels[r]) << '\n';
  }
}

}  // namespace oad::bench
