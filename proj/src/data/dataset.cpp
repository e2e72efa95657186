#include "oad/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace oad::data {

std::size_t LabeledDataset::anomaly_count() const {
  std::size_t c = 0;
  for (auto l : labels) c += l;
  return c;
}

LabeledDataset LabeledDataset::take(
    std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.features = features.take_rows(indices);
  out.labels.reserve(indices.size());
  out.visibility.reserve(indices.size());
  for (std::size_t idx : indices) {
    out.labels.push_back(labels[idx]);
    out.visibility.push_back(visibility[idx]);
  }
  return out;
}

namespace {

bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> toks;
  std::string tok;
  std::stringstream ss(line);
  while (std::getline(ss, tok, ',')) toks.push_back(tok);
  return toks;
}

}  // namespace

LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_csv: cannot open " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> toks = split_line(line);
    std::vector<double> vals(toks.size());
    bool numeric = true;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (!parse_double(toks[i], vals[i])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;  // header line
      throw std::runtime_error("load_csv: malformed row at line " +
                               std::to_string(lineno));
    }
    if (vals.size() < 2) {
      throw std::runtime_error("load_csv: need at least one feature column");
    }
    if (width == 0) {
      width = vals.size();
    } else if (vals.size() != width) {
      throw std::runtime_error("load_csv: ragged row at line " +
                               std::to_string(lineno));
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) {
    throw std::runtime_error("load_csv: no data rows in " + path);
  }

  const std::size_t d = width - 1;
  LabeledDataset ds;
  ds.features = Matrix(rows.size(), d);
  ds.labels.resize(rows.size());
  ds.visibility.assign(rows.size(), 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = rows[r][j];
      if (!std::isfinite(v)) {
        throw std::runtime_error("load_csv: non-finite feature value");
      }
      ds.features(r, j) = v;
    }
    const double lab = rows[r][d];
    if (lab == 0.0) {
      ds.labels[r] = 0;
    } else if (lab == 1.0) {
      ds.labels[r] = 1;
    } else {
      throw std::runtime_error("load_csv: label must be 0 or 1");
    }
  }
  return ds;
}

void save_csv(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_csv: cannot open " + path);
  }
  char buf[40];
  for (std::size_t r = 0; r < ds.n(); ++r) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.features(r, j));
      out << buf << ',';
    }
    out << static_cast<int>(ds.labels[r]) << '\n';
  }
}

std::pair<LabeledDataset, LabeledDataset> stratified_split(
    const LabeledDataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw std::invalid_argument("stratified_split: bad train fraction");
  }
  std::vector<std::size_t> normals;
  std::vector<std::size_t> anomalies;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    (ds.labels[i] == 1 ? anomalies : normals).push_back(i);
  }
  if (normals.empty() || anomalies.empty()) {
    throw std::invalid_argument("stratified_split: a class is empty");
  }

  Rng rng(spec.seed);
  rng.shuffle(normals);
  rng.shuffle(anomalies);

  const auto cut = [&](const std::vector<std::size_t>& idx) {
    return static_cast<std::size_t>(std::llround(
        spec.train_fraction * static_cast<double>(idx.size())));
  };

  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  const std::size_t cn = cut(normals);
  const std::size_t ca = cut(anomalies);
  train_idx.insert(train_idx.end(), normals.begin(), normals.begin() + cn);
  test_idx.insert(test_idx.end(), normals.begin() + cn, normals.end());
  train_idx.insert(train_idx.end(), anomalies.begin(),
                   anomalies.begin() + ca);
  test_idx.insert(test_idx.end(), anomalies.begin() + ca, anomalies.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.take(train_idx), ds.take(test_idx)};
}

LabeledDataset reveal_labels(LabeledDataset train, double gamma_l,
                             std::uint64_t seed) {
  std::vector<std::size_t> anomalies;
  for (std::size_t i = 0; i < train.n(); ++i) {
    if (train.labels[i] == 1) anomalies.push_back(i);
  }
  if (anomalies.empty()) {
    throw std::invalid_argument("reveal_labels: no anomalies in train");
  }
  std::fill(train.visibility.begin(), train.visibility.end(), 0);
  if (gamma_l <= 0.0) return train;

  // Round half up, with at least one anomaly revealed.
  std::size_t reveal = static_cast<std::size_t>(
      std::floor(gamma_l * static_cast<double>(anomalies.size()) + 0.5));
  reveal = std::max<std::size_t>(reveal, 1);
  reveal = std::min(reveal, anomalies.size());

  Rng rng(seed);
  rng.shuffle(anomalies);
  for (std::size_t i = 0; i < reveal; ++i) train.visibility[anomalies[i]] = 1;
  return train;
}

void FeatureScaler::apply(Matrix& m) const {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      m(r, j) = std_dev[j] > 0.0 ? (m(r, j) - mean[j]) / std_dev[j] : 0.0;
    }
  }
}

FeatureScaler zscore_fit_apply(LabeledDataset& train, LabeledDataset& test) {
  if (train.n() == 0) {
    throw std::invalid_argument("zscore_fit_apply: empty train set");
  }
  const std::size_t d = train.dim();
  const double n = static_cast<double>(train.n());
  FeatureScaler sc;
  sc.mean.assign(d, 0.0);
  sc.std_dev.assign(d, 0.0);
  for (std::size_t r = 0; r < train.n(); ++r) {
    for (std::size_t j = 0; j < d; ++j) sc.mean[j] += train.features(r, j);
  }
  for (auto& v : sc.mean) v /= n;
  for (std::size_t r = 0; r < train.n(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double del = train.features(r, j) - sc.mean[j];
      sc.std_dev[j] += del * del;
    }
  }
  for (auto& v : sc.std_dev) v = std::sqrt(v / n);
  sc.apply(train.features);
  sc.apply(test.features);
  return sc;
}

BatchSampler::BatchSampler(const LabeledDataset& train, std::size_t batch_size,
                           std::uint64_t seed, double anomaly_fraction)
    : train_(train), rng_(seed) {
  if (!(anomaly_fraction > 0.0 && anomaly_fraction < 1.0)) {
    throw std::invalid_argument("BatchSampler: anomaly fraction in (0,1)");
  }
  n_labeled_ = static_cast<std::size_t>(
      std::llround(anomaly_fraction * static_cast<double>(batch_size)));
  n_labeled_ = std::max<std::size_t>(1, n_labeled_);
  if (n_labeled_ >= batch_size) {
    throw std::invalid_argument("BatchSampler: batch size too small");
  }
  n_unlabeled_ = batch_size - n_labeled_;
  for (std::size_t i = 0; i < train.n(); ++i) {
    (train.visibility[i] == 1 ? labeled_ : unlabeled_).push_back(i);
  }
  if (labeled_.empty()) {
    throw std::invalid_argument("BatchSampler: no revealed anomalies");
  }
  if (unlabeled_.empty()) {
    throw std::invalid_argument("BatchSampler: no unlabeled rows");
  }
  order_ = unlabeled_;
  rng_.shuffle(order_);
}

std::size_t BatchSampler::batches_per_epoch() const {
  return std::max<std::size_t>(1, unlabeled_.size() / n_unlabeled_);
}

std::pair<Matrix, Matrix> BatchSampler::next() {
  std::vector<std::size_t> u_idx;
  u_idx.reserve(n_unlabeled_);
  for (std::size_t i = 0; i < n_unlabeled_; ++i) {
    if (cursor_ >= order_.size()) {
      rng_.shuffle(order_);
      cursor_ = 0;
    }
    u_idx.push_back(order_[cursor_++]);
  }
  std::vector<std::size_t> a_idx;
  a_idx.reserve(n_labeled_);
  for (std::size_t i = 0; i < n_labeled_; ++i) {
    a_idx.push_back(labeled_[rng_.uniform_below(labeled_.size())]);
  }
  return {train_.features.take_rows(u_idx), train_.features.take_rows(a_idx)};
}

}  // namespace oad::data
