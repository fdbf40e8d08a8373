#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mlmem/codec.hpp"
#include "mlmem/dataset.hpp"
#include "mlmem/model.hpp"
#include "mlmem/trainer.hpp"

namespace mlmem::sign {

enum class SignSource { RawPixels, TokenIndices };

struct SignSecret {
  std::vector<int> signs;  // +1 for bit 1, -1 for bit 0
  SignSource source = SignSource::RawPixels;
  std::size_t items = 0;   // images or documents
  unsigned bits_per_symbol = 8;

  BitString bits() const;
};

SignSecret from_bits(const BitString& bits, SignSource source, std::size_t items,
                     unsigned bits_per_symbol);

// 8 bits per gray pixel, most significant first.
SignSecret sign_secret_from_images(const std::vector<Bytes>& images);
// ceil(log2 |V|) bits per token over the first tokens of each document;
// every document contributes exactly `tokens_per_doc` symbols (short
// documents are padded with index 0).
SignSecret sign_secret_from_text(const std::vector<std::vector<std::string>>& docs,
                                 const Vocabulary& vocab,
                                 std::size_t tokens_per_doc = kTokensPerDocument);

struct SignTrainResult {
  TrainReport report;
  double match_rate = 0.0;
};

SignTrainResult sign_encode_train(const ModelSpec& spec, const LabeledDataset& data,
                                  const Hyperparameters& hp, double lambda_s,
                                  const SignSecret& secret, const LabeledDataset* test = nullptr,
                                  const RegularizerSpec& base = {});

// Bit i = 1 if theta_i >= 0 (zero counts as positive), else 0.
BitString sign_decode(const ParameterVector& params, std::size_t nbits);

// Fraction of i < |s| with theta_i * s_i > 0 (theta_i = 0 matches +1).
double sign_match_rate(const ParameterVector& params, const std::vector<int>& signs);

std::vector<Bytes> bits_to_images(const BitString& bits, std::size_t pixels_per_image);
std::vector<std::vector<std::string>> bits_to_documents(const BitString& bits,
                                                        const Vocabulary& vocab,
                                                        std::size_t tokens_per_doc);

}  // namespace mlmem::sign
