#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "mlmem/dataset.hpp"
#include "mlmem/text.hpp"

namespace mlmem::desk {

enum class DeskKind { GaussTabular, ProcImages, SynthText };

std::string to_string(DeskKind kind);
DeskKind desk_kind_from_string(const std::string& name);

struct DeskDatasetSpec {
  DeskKind kind = DeskKind::ProcImages;
  std::size_t n = 2000;
  int classes = 2;
  std::size_t dim = 16;        // gauss-tabular
  std::size_t height = 16;     // proc-images
  std::size_t width = 16;
  std::size_t vocab_size = 1000;  // synth-text
  std::size_t doc_length = 120;   // mean tokens per document
  std::uint64_t seed = 1;

  void validate() const;
};

struct DeskData {
  LabeledDataset all;
  LabeledDataset train;
  LabeledDataset test;
  std::shared_ptr<const Vocabulary> vocab;         // text only
  std::shared_ptr<const Vocabulary> public_vocab;  // text only
};

inline constexpr double kTrainFraction = 0.75;

// gauss-tabular: c Gaussian clusters in R^d.
// proc-images: grayscale shapes; the class is the shape type.
// synth-text: documents drawn from class-conditional token distributions
// over a generated vocabulary. A "public" vocabulary sharing most of the
// training vocabulary (plus extra words) is produced alongside.
DeskData synth_data(const DeskDatasetSpec& spec);

// Number of distinct shape types available to proc-images.
inline constexpr int kShapeTypes = 10;

}  // namespace mlmem::desk
