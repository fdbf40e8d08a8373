#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlmem/text.hpp"

namespace mlmem {

enum class DatasetKind { Image, Text, Tabular };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

struct ImageMeta {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;  // 1 = gray, 3 = interleaved RGB
  std::size_t pixels() const { return height * width; }
};

// Raw token sequences are kept next to the BOW features because the text
// attacks encode the documents themselves, not their feature vectors.
struct TextMeta {
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<std::vector<std::string>> documents;  // parallel to examples
};

// Row-major n x d feature matrix plus integer labels in [0, c).
class LabeledDataset {
 public:
  LabeledDataset() = default;
  LabeledDataset(DatasetKind kind, std::size_t dim, int classes);

  void reserve(std::size_t n);
  void add(std::span<const double> x, int label);

  DatasetKind kind() const { return kind_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t dim() const { return dim_; }
  int classes() const { return classes_; }

  std::span<const double> features(std::size_t i) const {
    return {features_.data() + i * dim_, dim_};
  }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& feature_matrix() const { return features_; }

  std::optional<ImageMeta> image;
  std::optional<TextMeta> text;

  // Throws ContractError unless n > 0, every label < c, every feature finite,
  // and the metadata is consistent with d.
  void validate() const;

  LabeledDataset subset(std::span<const std::size_t> indices) const;
  LabeledDataset prefix(std::size_t count) const;

  bool operator==(const LabeledDataset& other) const;

 private:
  DatasetKind kind_ = DatasetKind::Tabular;
  std::size_t dim_ = 0;
  int classes_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
};

// Examples of `a` followed by examples of `b`. Both must agree on d and c.
LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
};

// Seeded shuffle, then the first round(train_fraction * n) go to train.
TrainTestSplit split_dataset(const LabeledDataset& data, double train_fraction, std::uint64_t seed);

}  // namespace mlmem
