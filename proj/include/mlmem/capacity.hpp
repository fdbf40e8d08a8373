#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mlmem/codec.hpp"
#include "mlmem/dataset.hpp"
#include "mlmem/model.hpp"
#include "mlmem/trainer.hpp"

namespace mlmem::capacity {

enum class GenVariant {
  PseudorandomImage,     // every pixel PRF-derived
  SinglePixelImage,      // one PRF-valued pixel, position cycles over the image
  VocabEnumerationText,  // singletons, then pairs, in lexicographic order
  PublicVocabSampledText // words sampled with replacement from a public vocab
};

std::string to_string(GenVariant v);
GenVariant gen_variant_from_string(const std::string& name);

inline constexpr std::size_t kWordsPerSyntheticDoc = 50;

// Shape of the model's input space; the decoder needs it to regenerate inputs
// without access to the training data.
struct InputShape {
  DatasetKind kind = DatasetKind::Image;
  std::size_t dim = 0;
  int classes = 2;
  std::optional<ImageMeta> image;
  std::shared_ptr<const Vocabulary> vocab;  // model's training vocabulary
};

InputShape shape_of(const LabeledDataset& data);

struct CapacityConfig {
  std::size_t m = 0;
  unsigned bits_per_input = 1;
  GenVariant variant = GenVariant::PseudorandomImage;
  SecretKey key;
  // Attacker's auxiliary vocabulary (public-vocab variant).
  std::shared_ptr<const Vocabulary> aux_vocab;

  void validate(const InputShape& shape) const;
};

// min(floor(log2 c), 4).
unsigned default_bits_per_input(int classes);

struct SyntheticBatch {
  LabeledDataset examples;
  GenVariant variant = GenVariant::PseudorandomImage;
  std::size_t first_index = 0;
  std::size_t count = 0;
};

// Deterministic synthetic inputs [first, first + count) for the variant.
// Labels are left at 0; the documents are attached for text variants.
LabeledDataset generate_inputs(const InputShape& shape, const CapacityConfig& cfg,
                               std::size_t first, std::size_t count);

// Exactly cfg.m points; point j is labelled with payload bits
// [j*w, (j+1)*w) read as a big-endian integer. Payloads shorter than m*w are
// padded with PRF bits. Throws CapacityError when m*w < |payload|.
SyntheticBatch synthesize_malicious_data(const InputShape& shape, const BitString& payload,
                                         const CapacityConfig& cfg);

// Payloads extracted from the training data.
// 4-bit gray levels of the first `images` images, most significant bit first.
BitString image_payload(const LabeledDataset& data, std::size_t images);
// Vocabulary-index bits of the first tokens of the first `docs` documents,
// each padded to tokens_per_doc symbols with index 0.
BitString text_payload(const LabeledDataset& data, std::size_t docs, const Vocabulary& vocab,
                       std::size_t tokens_per_doc = kTokensPerDocument);

struct CapacityTrainResult {
  TrainReport report;
  double mal_accuracy = 0.0;
};

// Benign training on train || synthetic.
CapacityTrainResult capacity_train(const ModelSpec& spec, const LabeledDataset& train,
                                   const SyntheticBatch& synth, const Hyperparameters& hp,
                                   const LabeledDataset* test = nullptr,
                                   const RegularizerSpec& reg = {});

// Label-only black-box access to a model.
using QueryFn = std::function<int(std::span<const double>)>;

QueryFn in_process_query(const ModelSpec& spec, const ParameterVector& params);

// Regenerates the synthetic inputs, queries them in order, and concatenates
// the w-bit encodings of the answers, truncated to payload_bits.
BitString capacity_decode(const QueryFn& query, const InputShape& shape,
                          const CapacityConfig& cfg, std::size_t payload_bits);

struct SizeSweepRow {
  std::size_t width = 0;
  std::size_t params = 0;
  double test_accuracy = 0.0;
  double mal_accuracy = 0.0;
};

// One single-hidden-layer MLP per width, trained on the union.
std::vector<SizeSweepRow> capacity_size_sweep(const std::vector<std::size_t>& widths,
                                              const LabeledDataset& train,
                                              const LabeledDataset& test,
                                              const SyntheticBatch& synth,
                                              const Hyperparameters& hp, int jobs = 1);

std::string size_sweep_to_csv(const std::vector<SizeSweepRow>& rows);

}  // namespace mlmem::capacity
