#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "oad/matrix.hpp"
#include "oad/rng.hpp"

namespace oad::data {

// Tabular dataset with binary anomaly labels. visibility[i] == 1 means the
// label has been revealed to training; only anomalies are ever revealed.
struct LabeledDataset {
  Matrix features;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> visibility;

  std::size_t n() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  std::size_t anomaly_count() const;
  LabeledDataset take(std::span<const std::size_t> indices) const;
};

// CSV: optional header (detected by a non-numeric first line), d numeric
// feature columns, final label column in {0,1}. NaN/inf features rejected.
LabeledDataset load_csv(const std::string& path);
void save_csv(const LabeledDataset& ds, const std::string& path);

struct SplitSpec {
  double train_fraction = 0.7;
  double gamma_l = 0.1;
  std::uint64_t seed = 0;
};

// Per-class shuffled split; class counts preserved exactly.
std::pair<LabeledDataset, LabeledDataset> stratified_split(
    const LabeledDataset& ds, const SplitSpec& spec);

// Marks round(gamma_l * anomaly count) randomly chosen anomalies visible
// (at least one when gamma_l > 0); everything else stays unlabeled.
LabeledDataset reveal_labels(LabeledDataset train, double gamma_l,
                             std::uint64_t seed);

struct FeatureScaler {
  std::vector<double> mean;
  std::vector<double> std_dev;
  void apply(Matrix& m) const;
};

// Standardizes both sets with the training statistics; zero-variance
// features map to 0.
FeatureScaler zscore_fit_apply(LabeledDataset& train, LabeledDataset& test);

// Balanced mini-batches by default: unlabeled rows consumed without
// replacement per epoch pass, revealed anomalies drawn with replacement.
// anomaly_fraction controls the labeled share of each batch (0.5 = the
// conventional half/half composition).
class BatchSampler {
 public:
  BatchSampler(const LabeledDataset& train, std::size_t batch_size,
               std::uint64_t seed, double anomaly_fraction = 0.5);

  // (unlabeled rows, labeled-anomaly rows)
  std::pair<Matrix, Matrix> next();

  std::size_t batches_per_epoch() const;
  std::size_t unlabeled_count() const { return unlabeled_.size(); }
  std::size_t labeled_count() const { return labeled_.size(); }
  std::size_t unlabeled_per_batch() const { return n_unlabeled_; }
  std::size_t labeled_per_batch() const { return n_labeled_; }

 private:
  const LabeledDataset& train_;
  std::size_t n_unlabeled_;
  std::size_t n_labeled_;
  std::vector<std::size_t> unlabeled_;
  std::vector<std::size_t> labeled_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  Rng rng_;
};

}  // namespace oad::data
