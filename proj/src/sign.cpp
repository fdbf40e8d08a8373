#include "mlmem/sign.hpp"

#include "mlmem/error.hpp"

namespace mlmem::sign {

BitString SignSecret::bits() const {
  BitString out(signs.size());
  for (std::size_t i = 0; i < signs.size(); ++i) out[i] = signs[i] > 0 ? 1 : 0;
  return out;
}

SignSecret from_bits(const BitString& bits, SignSource source, std::size_t items,
                     unsigned bits_per_symbol) {
  SignSecret s;
  s.source = source;
  s.items = items;
  s.bits_per_symbol = bits_per_symbol;
  s.signs.reserve(bits.size());
  for (auto b : bits) s.signs.push_back(b ? 1 : -1);
  return s;
}

SignSecret sign_secret_from_images(const std::vector<Bytes>& images) {
  if (images.empty()) throw ContractError("no images to encode");
  BitString bits;
  for (const auto& img : images) {
    if (img.empty()) throw ContractError("empty image");
    for (auto px : img) append_bits(bits, px, 8);
  }
  return from_bits(bits, SignSource::RawPixels, images.size(), 8);
}

SignSecret sign_secret_from_text(const std::vector<std::vector<std::string>>& docs,
                                 const Vocabulary& vocab, std::size_t tokens_per_doc) {
  if (docs.empty()) throw ContractError("no documents to encode");
  const unsigned width = vocab.bit_width();
  BitString bits;
  for (const auto& doc : docs) {
    const auto tokens = secret_tokens(doc, vocab, tokens_per_doc);
    for (std::size_t j = 0; j < tokens_per_doc; ++j) {
      const std::size_t idx = j < tokens.size() ? *vocab.index_of(tokens[j]) : 0;
      append_bits(bits, idx, width);
    }
  }
  return from_bits(bits, SignSource::TokenIndices, docs.size(), width);
}

SignTrainResult sign_encode_train(const ModelSpec& spec, const LabeledDataset& data,
                                  const Hyperparameters& hp, double lambda_s,
                                  const SignSecret& secret, const LabeledDataset* test,
                                  const RegularizerSpec& base) {
  RegularizerSpec reg = base;
  reg.add(SignPenalty{lambda_s, secret.signs});
  SignTrainResult out{sgd_train(spec, data, hp, reg, test), 0.0};
  out.match_rate = sign_match_rate(out.report.params, secret.signs);
  return out;
}

BitString sign_decode(const ParameterVector& params, std::size_t nbits) {
  if (nbits > params.size()) {
    throw ContractError("cannot read " + std::to_string(nbits) + " signs from " +
                        std::to_string(params.size()) + " parameters");
  }
  BitString out(nbits);
  for (std::size_t i = 0; i < nbits; ++i) out[i] = params[i] >= 0.0f ? 1 : 0;
  return out;
}

double sign_match_rate(const ParameterVector& params, const std::vector<int>& signs) {
  if (signs.empty()) return 1.0;
  const BitString decoded = sign_decode(params, signs.size());
  std::size_t match = 0;
  for (std::size_t i = 0; i < signs.size(); ++i) match += (decoded[i] == 1) == (signs[i] > 0);
  return static_cast<double>(match) / static_cast<double>(signs.size());
}

std::vector<Bytes> bits_to_images(const BitString& bits, std::size_t pixels_per_image) {
  const std::size_t per_image = pixels_per_image * 8;
  if (per_image == 0 || bits.size() % per_image != 0) {
    throw ContractError("bit length is not a whole number of 8-bit images");
  }
  std::vector<Bytes> out;
  for (std::size_t off = 0; off < bits.size(); off += per_image) {
    Bytes img(pixels_per_image);
    for (std::size_t p = 0; p < pixels_per_image; ++p) {
      img[p] = static_cast<std::uint8_t>(read_bits(bits, off + 8 * p, 8));
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<std::vector<std::string>> bits_to_documents(const BitString& bits,
                                                        const Vocabulary& vocab,
                                                        std::size_t tokens_per_doc) {
  const std::size_t per_doc = tokens_per_doc * vocab.bit_width();
  if (per_doc == 0 || bits.size() % per_doc != 0) {
    throw ContractError("bit length is not a whole number of documents");
  }
  std::vector<std::vector<std::string>> out;
  for (std::size_t off = 0; off < bits.size(); off += per_doc) {
    BitString chunk(bits.begin() + static_cast<std::ptrdiff_t>(off),
                    bits.begin() + static_cast<std::ptrdiff_t>(off + per_doc));
    out.push_back(bits_to_tokens(chunk, vocab));
  }
  return out;
}

}  // namespace mlmem::sign
