#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "oad/bench/config.hpp"
#include "oad/data/dataset.hpp"
#include "oad/nn/scorer.hpp"

namespace oad::bench {

// Fixed 2-D sources for synthetic-dataset experiments: "blobs2" is a
// two-component Gaussian mixture, "corr2" a strongly rank-correlated pair
// with a log-scaled second marginal.
Matrix builtin_source(const std::string& name, std::size_t n,
                      std::uint64_t seed);

// Materializes the configured dataset; synthetic datasets are regenerated
// from `seed` so each repeat sees an independent realization.
data::LabeledDataset build_dataset(const ExperimentConfig& cfg,
                                   std::uint64_t seed);

struct TrainResult {
  nn::ScorerNetwork net;
  nn::ScorerNetwork initial;
  std::vector<double> epoch_losses;
  double train_seconds = 0.0;
  std::size_t skipped_batches = 0;
};

// Algorithm-1 loop: balanced batch -> one concatenated forward in train mode
// -> loss/score gradients -> backward -> SGD step. Degenerate batches are
// skipped; an epoch with more than half of its batches skipped aborts.
TrainResult train(const ExperimentConfig& cfg,
                  const data::LabeledDataset& train_ds, std::uint64_t seed);

struct EvalResult {
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  std::vector<double> scores;
};

// rank_by_magnitude reflects losses whose formulas consume the absolute
// anomaly score (Minus, Inverse): their ranking statistic is |phi(x)|.
EvalResult evaluate(nn::ScorerNetwork& net, const data::LabeledDataset& test,
                    bool rank_by_magnitude = false);

// PReNet-style scoring for the pairwise ordinal model: each test row is
// paired with sampled labeled anomalies and unlabeled rows and the pair
// scores averaged.
EvalResult evaluate_ordinal(nn::ScorerNetwork& net,
                            const data::LabeledDataset& test,
                            const data::LabeledDataset& train_ds,
                            std::size_t eval_pairs, std::uint64_t seed);

// One full repeat: dataset, split, reveal, scale, train, evaluate.
ResultRecord run_single(const ExperimentConfig& cfg, std::uint64_t seed);

// All repeats; records flushed to `sink` as they complete when non-null.
std::vector<ResultRecord> run_suite(const ExperimentConfig& cfg,
                                    std::ostream* sink = nullptr);

// Representation-layer activations of the test rows after training repeat 0:
// CSV columns h1..hH, score, label.
void dump_embeddings(const ExperimentConfig& cfg, const std::string& out_path);

}  // namespace oad::bench
