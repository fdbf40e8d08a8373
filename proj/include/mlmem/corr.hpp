#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mlmem/codec.hpp"
#include "mlmem/dataset.hpp"
#include "mlmem/model.hpp"
#include "mlmem/trainer.hpp"

namespace mlmem::corr {

inline constexpr double kDefaultTau = 0.85;
inline constexpr std::size_t kDocumentBudget = kTokenVectorDim * kTokensPerDocument;

struct CorrTrainResult {
  TrainReport report;
  double abs_correlation = 0.0;  // |pearson(theta[0:|s|), s)| after training
};

// Gray levels in [0, 255] of the first `count` images, concatenated.
SecretPayload image_secret(const LabeledDataset& data, std::size_t count);
// Largest number of images whose pixels fit in `param_count` parameters.
std::size_t image_capacity(const LabeledDataset& data, std::size_t param_count);

// Each document occupies a fixed slot of tokens_per_doc * d' values: the token
// vectors of its first in-vocabulary tokens, zero-filled when shorter.
SecretPayload text_secret(const LabeledDataset& data, std::size_t doc_count,
                          const TokenVectorTable& table,
                          std::size_t tokens_per_doc = kTokensPerDocument);

CorrTrainResult corr_encode_train(const ModelSpec& spec, const LabeledDataset& data,
                                  const Hyperparameters& hp, double lambda_c,
                                  const std::vector<double>& secret,
                                  const LabeledDataset* test = nullptr,
                                  const RegularizerSpec& base = {});

struct DecodedImage {
  Bytes pixels;
  bool inverted = false;  // orientation chosen by the MAPE comparison
  std::optional<double> mape;
};

// Min-max scales consecutive segments of `pixels_per_image` parameters to
// [0, 255]. With ground truth, each segment is also compared inverted and
// the orientation with the smaller MAPE is kept.
std::vector<DecodedImage> corr_decode_image(const ParameterVector& params,
                                            const std::vector<std::size_t>& segment_sizes,
                                            const std::vector<Bytes>* truth = nullptr);

// Unrounded min-max scaling of one segment; throws "constant segment".
std::vector<double> minmax_scale(std::span<const double> segment);

struct DecodedToken {
  std::optional<std::string> token;  // nullopt = rejected (correlation < tau)
  double correlation = 0.0;
};

struct DecodedDocument {
  std::vector<DecodedToken> tokens;
  std::vector<std::string> accepted() const;
};

struct TextDecodeConfig {
  double tau = kDefaultTau;
  std::size_t tokens_per_doc = kTokensPerDocument;
  std::size_t documents = 0;
};

// For each d'-sized slot, the vocabulary token whose vector correlates best
// with the slot. The global sign of the correlation is unknown to the decoder;
// it is picked as the orientation with the larger summed best-match
// correlation over all slots.
std::vector<DecodedDocument> corr_decode_text(const ParameterVector& params,
                                              const TokenVectorTable& table,
                                              const TextDecodeConfig& cfg);

}  // namespace mlmem::corr
