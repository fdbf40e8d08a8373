#include "mlmem/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlmem/error.hpp"
#include "mlmem/rng.hpp"

namespace mlmem {

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Image: return "image";
    case DatasetKind::Text: return "text";
    case DatasetKind::Tabular: return "tabular";
  }
  return "tabular";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "image") return DatasetKind::Image;
  if (name == "text") return DatasetKind::Text;
  if (name == "tabular") return DatasetKind::Tabular;
  throw ContractError("unknown dataset kind '" + name + "'");
}

LabeledDataset::LabeledDataset(DatasetKind kind, std::size_t dim, int classes)
    : kind_(kind), dim_(dim), classes_(classes) {
  if (dim == 0) throw ContractError("dataset dimension must be positive");
  if (classes < 1) throw ContractError("dataset needs at least one class");
}

void LabeledDataset::reserve(std::size_t n) {
  features_.reserve(n * dim_);
  labels_.reserve(n);
}

void LabeledDataset::add(std::span<const double> x, int label) {
  if (x.size() != dim_) {
    throw ContractError("feature vector has length " + std::to_string(x.size()) + ", expected d = " +
                        std::to_string(dim_));
  }
  if (label < 0 || label >= classes_) {
    throw ContractError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(classes_) + ")");
  }
  features_.insert(features_.end(), x.begin(), x.end());
  labels_.push_back(label);
}

void LabeledDataset::validate() const {
  if (labels_.empty()) throw ContractError("dataset is empty");
  if (features_.size() != labels_.size() * dim_) throw ContractError("feature matrix size mismatch");
  for (int y : labels_) {
    if (y < 0 || y >= classes_) throw ContractError("label out of range");
  }
  for (double v : features_) {
    if (!std::isfinite(v)) throw ContractError("non-finite feature value");
  }
  if (image && image->pixels() * image->channels != dim_) {
    throw ContractError("image metadata does not match feature dimension");
  }
  if (text) {
    if (text->vocab && text->vocab->size() != dim_) {
      throw ContractError("vocabulary size does not match feature dimension");
    }
    if (text->documents.size() != labels_.size()) {
      throw ContractError("document count does not match example count");
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out(kind_, dim_, classes_);
  out.image = image;
  if (text) out.text = TextMeta{text->vocab, {}};
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw ContractError("subset index out of range");
    out.add(features(i), labels_[i]);
    if (text) out.text->documents.push_back(text->documents[i]);
  }
  return out;
}

LabeledDataset LabeledDataset::prefix(std::size_t count) const {
  std::vector<std::size_t> idx(std::min(count, size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return subset(idx);
}

bool LabeledDataset::operator==(const LabeledDataset& other) const {
  if (kind_ != other.kind_ || dim_ != other.dim_ || classes_ != other.classes_) return false;
  if (features_ != other.features_ || labels_ != other.labels_) return false;
  if (image.has_value() != other.image.has_value()) return false;
  if (image && (image->height != other.image->height || image->width != other.image->width ||
                image->channels != other.image->channels)) {
    return false;
  }
  if (text.has_value() != other.text.has_value()) return false;
  if (text && text->documents != other.text->documents) return false;
  return true;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.dim() != b.dim() || a.classes() != b.classes()) {
    throw ContractError("cannot concatenate datasets with different d or c");
  }
  LabeledDataset out(a.kind(), a.dim(), a.classes());
  out.image = a.image ? a.image : b.image;
  const bool with_docs = a.text.has_value() || b.text.has_value();
  if (with_docs) out.text = TextMeta{a.text ? a.text->vocab : b.text->vocab, {}};
  out.reserve(a.size() + b.size());
  for (const LabeledDataset* part : {&a, &b}) {
    for (std::size_t i = 0; i < part->size(); ++i) {
      out.add(part->features(i), part->label(i));
      if (with_docs) {
        out.text->documents.push_back(part->text ? part->text->documents[i]
                                                 : std::vector<std::string>{});
      }
    }
  }
  return out;
}

TrainTestSplit split_dataset(const LabeledDataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ContractError("train fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, "split");
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(data.size())));
  std::span<const std::size_t> all(order);
  return {data.subset(all.first(n_train)), data.subset(all.subspan(n_train))};
}

}  // namespace mlmem
