#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlmem/dataset.hpp"
#include "mlmem/text.hpp"

namespace mlmem {

// One element per bit, each 0 or 1. Bytes are expanded most significant bit
// first everywhere in this library.
using BitString = std::vector<std::uint8_t>;
using Bytes = std::vector<std::uint8_t>;

BitString bytes_to_bits(std::span<const std::uint8_t> bytes);
// Length must be a multiple of 8.
Bytes bits_to_bytes(const BitString& bits);
std::string bits_to_string(const BitString& bits);
BitString bits_from_string(std::string_view s);
// Big-endian fixed-width encoding of `value`.
void append_bits(BitString& out, std::uint64_t value, unsigned width);
std::uint64_t read_bits(const BitString& bits, std::size_t offset, unsigned width);

class SecretKey {
 public:
  SecretKey() = default;
  explicit SecretKey(const std::array<std::uint8_t, 32>& bytes) : bytes_(bytes) {}
  // Exactly 64 hex characters.
  static SecretKey from_hex(std::string_view hex);
  // Reads MLMEM_KEY from the environment.
  static SecretKey from_env();
  std::string to_hex() const;
  std::span<const std::uint8_t> bytes() const { return bytes_; }

 private:
  std::array<std::uint8_t, 32> bytes_{};
};

inline constexpr const char* kKeyEnvVar = "MLMEM_KEY";

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
// HMAC-SHA256(key, domain || u64le(index)).
Digest prf(const SecretKey& key, std::string_view domain, std::uint64_t index);

// Deterministic pseudorandom byte stream: block j = PRF(key, domain, j).
class PrfStream {
 public:
  PrfStream(const SecretKey& key, std::string domain);
  std::uint8_t next_byte();
  std::uint32_t next_u32();
  // [0, 1) with 32 random bits.
  double next_unit();
  std::uint64_t below(std::uint64_t n);

 private:
  const SecretKey* key_;
  std::string domain_;
  std::uint64_t block_ = 0;
  Digest buffer_{};
  std::size_t pos_ = 32;
};

// Keystream block j = SHA-256(key || nonce || u64le(j)).
Bytes keystream(const SecretKey& key, std::span<const std::uint8_t> nonce, std::size_t length);

inline constexpr std::size_t kNonceBytes = 16;

// Output layout: nonce (16 bytes) || plaintext XOR keystream. The nonce is a
// truncated HMAC of the plaintext, so any plaintext change re-keys the whole
// ciphertext while encryption stays deterministic.
Bytes encrypt(const SecretKey& key, std::span<const std::uint8_t> plaintext);
Bytes decrypt(const SecretKey& key, std::span<const std::uint8_t> ciphertext);

Bytes compress(std::span<const std::uint8_t> data);
Bytes decompress(std::span<const std::uint8_t> data);
std::uint32_t crc32(std::span<const std::uint8_t> data);

// Binary container for a prefix of a dataset:
//   "MLDS" u8 version=1 u8 kind u32 count u32 dim u32 classes
//   image: u32 height u32 width u32 channels
//   per example: u32 label, then
//     image   -> dim bytes (round(255 * feature))
//     tabular -> dim little-endian float32
//     text    -> u32 byte length + space-joined UTF-8 tokens
// All integers little-endian.
Bytes serialize_examples(const LabeledDataset& data, std::size_t count);

struct DecodedExamples {
  DatasetKind kind = DatasetKind::Tabular;
  std::size_t dim = 0;
  int classes = 0;
  std::optional<ImageMeta> image;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  std::vector<std::vector<std::string>> documents;  // text only
};

DecodedExamples deserialize_examples(std::span<const std::uint8_t> bytes);

enum class SecretEncoding { CompressedEncrypted, RawPixelBits, TokenIndexBits, TokenVectorReals, PixelValues };

std::string to_string(SecretEncoding e);

struct SecretPayload {
  BitString bits;
  std::vector<double> values;  // value-encoded secrets only
  SecretEncoding encoding = SecretEncoding::CompressedEncrypted;
  std::size_t example_count = 0;  // training examples covered, in dataset order
  std::size_t raw_bytes = 0;      // container size before compression
  std::string to_json() const;
};

// Serialize the longest dataset prefix whose compressed+encrypted form fits
// in max_bits. The prefix length is found by bisection over the example
// count. Throws CapacityError("capacity too small") when not even one fits.
SecretPayload extract_secret_bitstring(const LabeledDataset& data, std::size_t max_bits,
                                       const SecretKey& key);
DecodedExamples recover_secret_examples(const BitString& bits, const SecretKey& key);

// Gray level per pixel, round(0.299 R + 0.587 G + 0.114 B) on the 0..255 scale.
Bytes pixel_to_gray(std::span<const double> x, const ImageMeta& meta);
Bytes pixel_to_gray(const LabeledDataset& data, std::size_t index);

std::uint8_t quantize4(std::uint8_t pixel);
std::uint8_t dequantize4(std::uint8_t level);

// Fixed-width big-endian vocabulary indices. Out-of-vocabulary tokens are
// skipped.
BitString tokens_to_bits(const std::vector<std::string>& tokens, const Vocabulary& vocab);
// Indices beyond |V| (possible after bit errors) decode to the token at
// index mod |V|.
std::vector<std::string> bits_to_tokens(const BitString& bits, const Vocabulary& vocab);

// At most this many leading tokens of each document form its secret.
inline constexpr std::size_t kTokensPerDocument = 100;

std::vector<std::string> secret_tokens(const std::vector<std::string>& document,
                                       const Vocabulary& vocab,
                                       std::size_t limit = kTokensPerDocument);

// floor(log2 c).
unsigned max_bits_per_label(int classes);
int bits_to_label(const BitString& bits, int classes);
BitString label_to_bits(int label, unsigned width);

inline constexpr std::size_t kTokenVectorDim = 20;

// Pseudorandom token vectors: token t maps to PRF(key, "token-vector:" + t)
// expanded to `dim` uniform values in [-1, 1), then shifted/scaled to zero
// mean and unit (population) variance.
class TokenVectorTable {
 public:
  TokenVectorTable(const SecretKey& key, std::shared_ptr<const Vocabulary> vocab,
                   std::size_t dim = kTokenVectorDim);

  std::size_t dim() const { return dim_; }
  const Vocabulary& vocab() const { return *vocab_; }
  std::span<const double> vector(std::size_t token_index) const {
    return {table_.data() + token_index * dim_, dim_};
  }
  // Row-major |V| x dim matrix.
  std::span<const double> matrix() const { return table_; }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  std::size_t dim_;
  std::vector<double> table_;
};

std::vector<double> token_vector(const TokenVectorTable& table, std::string_view token);
std::vector<double> make_token_vector(const SecretKey& key, std::string_view token, std::size_t dim);

}  // namespace mlmem
