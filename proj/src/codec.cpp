#include "mlmem/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>
#include <zlib.h>

#include "mlmem/error.hpp"

namespace mlmem {

BitString bytes_to_bits(std::span<const std::uint8_t> bytes) {
  BitString bits;
  bits.reserve(bytes.size() * 8);
  for (std::uint8_t b : bytes) {
    for (int k = 7; k >= 0; --k) bits.push_back(static_cast<std::uint8_t>((b >> k) & 1u));
  }
  return bits;
}

Bytes bits_to_bytes(const BitString& bits) {
  if (bits.size() % 8 != 0) throw ContractError("bit length is not a multiple of 8");
  Bytes out(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return out;
}

std::string bits_to_string(const BitString& bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

BitString bits_from_string(std::string_view s) {
  BitString bits;
  bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw ContractError("bit string may only contain '0' and '1'");
    bits.push_back(c == '1' ? 1 : 0);
  }
  return bits;
}

void append_bits(BitString& out, std::uint64_t value, unsigned width) {
  for (unsigned k = width; k-- > 0;) out.push_back(static_cast<std::uint8_t>((value >> k) & 1u));
}

std::uint64_t read_bits(const BitString& bits, std::size_t offset, unsigned width) {
  if (offset + width > bits.size()) throw ContractError("bit read past end of string");
  std::uint64_t v = 0;
  for (unsigned k = 0; k < width; ++k) v = (v << 1) | bits[offset + k];
  return v;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(data_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw FormatError("<secret container>", pos_, "truncated container");
    }
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

SecretKey SecretKey::from_hex(std::string_view hex) {
  if (hex.size() != 64) throw ContractError("secret key must be 64 hex characters");
  std::array<std::uint8_t, 32> bytes{};
  for (std::size_t i = 0; i < 32; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ContractError("secret key contains a non-hex character");
    bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return SecretKey(bytes);
}

SecretKey SecretKey::from_env() {
  const char* v = std::getenv(kKeyEnvVar);
  if (v == nullptr) throw ContractError(std::string("environment variable ") + kKeyEnvVar + " is not set");
  return from_hex(v);
}

std::string SecretKey::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto b : bytes_) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

Digest sha256(std::span<const std::uint8_t> data) {
  Digest d{};
  SHA256(data.data(), data.size(), d.data());
  return d;
}

Digest prf(const SecretKey& key, std::string_view domain, std::uint64_t index) {
  Bytes msg(domain.begin(), domain.end());
  put_u64(msg, index);
  Digest d{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.bytes().data(), static_cast<int>(key.bytes().size()), msg.data(),
       msg.size(), d.data(), &len);
  return d;
}

PrfStream::PrfStream(const SecretKey& key, std::string domain)
    : key_(&key), domain_(std::move(domain)) {}

std::uint8_t PrfStream::next_byte() {
  if (pos_ == buffer_.size()) {
    buffer_ = prf(*key_, domain_, block_++);
    pos_ = 0;
  }
  return buffer_[pos_++];
}

std::uint32_t PrfStream::next_u32() {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v = (v << 8) | next_byte();
  return v;
}

double PrfStream::next_unit() { return static_cast<double>(next_u32()) * 0x1.0p-32; }

std::uint64_t PrfStream::below(std::uint64_t n) {
  if (n == 0) throw ContractError("PrfStream::below(0)");
  const std::uint64_t range = std::uint64_t{1} << 32;
  if (n > range) throw ContractError("PrfStream::below range too large");
  const std::uint64_t limit = range - range % n;
  std::uint64_t r;
  do {
    r = next_u32();
  } while (r >= limit);
  return r % n;
}

Bytes keystream(const SecretKey& key, std::span<const std::uint8_t> nonce, std::size_t length) {
  Bytes out;
  out.reserve(length + 32);
  Bytes block_input(key.bytes().begin(), key.bytes().end());
  block_input.insert(block_input.end(), nonce.begin(), nonce.end());
  const std::size_t prefix = block_input.size();
  for (std::uint64_t j = 0; out.size() < length; ++j) {
    block_input.resize(prefix);
    put_u64(block_input, j);
    const Digest d = sha256(block_input);
    out.insert(out.end(), d.begin(), d.end());
  }
  out.resize(length);
  return out;
}

Bytes encrypt(const SecretKey& key, std::span<const std::uint8_t> plaintext) {
  Bytes msg = {'n', 'o', 'n', 'c', 'e'};
  msg.insert(msg.end(), plaintext.begin(), plaintext.end());
  Digest tag{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.bytes().data(), static_cast<int>(key.bytes().size()), msg.data(),
       msg.size(), tag.data(), &len);
  Bytes out(tag.begin(), tag.begin() + kNonceBytes);
  const Bytes ks = keystream(key, std::span(out).first(kNonceBytes), plaintext.size());
  for (std::size_t i = 0; i < plaintext.size(); ++i) out.push_back(plaintext[i] ^ ks[i]);
  return out;
}

Bytes decrypt(const SecretKey& key, std::span<const std::uint8_t> ciphertext) {
  if (ciphertext.size() < kNonceBytes) throw ContractError("ciphertext shorter than its nonce");
  const auto nonce = ciphertext.first(kNonceBytes);
  const auto body = ciphertext.subspan(kNonceBytes);
  const Bytes ks = keystream(key, nonce, body.size());
  Bytes out(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) out[i] = body[i] ^ ks[i];
  return out;
}

Bytes compress(std::span<const std::uint8_t> data) {
  uLongf bound = compressBound(static_cast<uLong>(data.size()));
  Bytes out;
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  out.resize(4 + bound);
  if (compress2(out.data() + 4, &bound, data.data(), static_cast<uLong>(data.size()), 9) != Z_OK) {
    throw Error("zlib compression failed");
  }
  out.resize(4 + bound);
  return out;
}

Bytes decompress(std::span<const std::uint8_t> data) {
  Reader r(data);
  const std::uint32_t n = r.u32();
  Bytes out(n);
  uLongf len = n;
  if (uncompress(out.data(), &len, data.data() + 4, static_cast<uLong>(data.size() - 4)) != Z_OK ||
      len != n) {
    throw FormatError("<compressed payload>", 4, "zlib stream is corrupt");
  }
  return out;
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), data.data(), static_cast<uInt>(data.size())));
}

Bytes serialize_examples(const LabeledDataset& data, std::size_t count) {
  if (count > data.size()) throw ContractError("cannot serialize more examples than exist");
  Bytes out = {'M', 'L', 'D', 'S', 1, static_cast<std::uint8_t>(data.kind())};
  put_u32(out, static_cast<std::uint32_t>(count));
  put_u32(out, static_cast<std::uint32_t>(data.dim()));
  put_u32(out, static_cast<std::uint32_t>(data.classes()));
  if (data.kind() == DatasetKind::Image) {
    if (!data.image) throw ContractError("image dataset without image metadata");
    put_u32(out, static_cast<std::uint32_t>(data.image->height));
    put_u32(out, static_cast<std::uint32_t>(data.image->width));
    put_u32(out, static_cast<std::uint32_t>(data.image->channels));
  }
  for (std::size_t i = 0; i < count; ++i) {
    put_u32(out, static_cast<std::uint32_t>(data.label(i)));
    const auto x = data.features(i);
    switch (data.kind()) {
      case DatasetKind::Image:
        for (double v : x) {
          out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)));
        }
        break;
      case DatasetKind::Tabular:
        for (double v : x) {
          const float f = static_cast<float>(v);
          std::uint32_t u;
          std::memcpy(&u, &f, 4);
          put_u32(out, u);
        }
        break;
      case DatasetKind::Text: {
        if (!data.text) throw ContractError("text dataset without documents");
        std::string joined;
        for (const auto& t : data.text->documents[i]) {
          if (!joined.empty()) joined.push_back(' ');
          joined += t;
        }
        put_u32(out, static_cast<std::uint32_t>(joined.size()));
        out.insert(out.end(), joined.begin(), joined.end());
        break;
      }
    }
  }
  return out;
}

DecodedExamples deserialize_examples(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), "MLDS", 4) != 0) {
    throw FormatError("<secret container>", 0, "bad magic");
  }
  if (r.u8() != 1) throw FormatError("<secret container>", 4, "unsupported container version");
  DecodedExamples out;
  const std::uint8_t kind = r.u8();
  if (kind > 2) throw FormatError("<secret container>", 5, "unknown dataset kind");
  out.kind = static_cast<DatasetKind>(kind);
  const std::uint32_t count = r.u32();
  out.dim = r.u32();
  out.classes = static_cast<int>(r.u32());
  if (out.kind == DatasetKind::Image) {
    ImageMeta meta;
    meta.height = r.u32();
    meta.width = r.u32();
    meta.channels = r.u32();
    out.image = meta;
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    out.labels.push_back(static_cast<int>(r.u32()));
    std::vector<double> x;
    switch (out.kind) {
      case DatasetKind::Image:
        for (auto b : r.take(out.dim)) x.push_back(static_cast<double>(b) / 255.0);
        break;
      case DatasetKind::Tabular:
        for (std::size_t k = 0; k < out.dim; ++k) {
          const std::uint32_t u = r.u32();
          float f;
          std::memcpy(&f, &u, 4);
          x.push_back(static_cast<double>(f));
        }
        break;
      case DatasetKind::Text: {
        const std::uint32_t len = r.u32();
        const auto s = r.take(len);
        std::vector<std::string> doc;
        std::string cur;
        for (auto c : s) {
          if (c == ' ') {
            doc.push_back(std::move(cur));
            cur.clear();
          } else {
            cur.push_back(static_cast<char>(c));
          }
        }
        if (!cur.empty()) doc.push_back(std::move(cur));
        out.documents.push_back(std::move(doc));
        break;
      }
    }
    out.features.push_back(std::move(x));
  }
  return out;
}

std::string to_string(SecretEncoding e) {
  switch (e) {
    case SecretEncoding::CompressedEncrypted: return "compressed-encrypted";
    case SecretEncoding::RawPixelBits: return "raw-pixel-bits";
    case SecretEncoding::TokenIndexBits: return "token-index-bits";
    case SecretEncoding::TokenVectorReals: return "token-vector-reals";
    case SecretEncoding::PixelValues: return "pixel-values";
  }
  return "?";
}

std::string SecretPayload::to_json() const {
  nlohmann::json j;
  j["encoding"] = mlmem::to_string(encoding);
  j["bits"] = bits.size();
  j["values"] = values.size();
  j["example_count"] = example_count;
  j["raw_bytes"] = raw_bytes;
  return j.dump(2);
}

SecretPayload extract_secret_bitstring(const LabeledDataset& data, std::size_t max_bits,
                                       const SecretKey& key) {
  if (max_bits < 8) throw ContractError("maxBits must be at least 8");
  if (data.empty()) throw ContractError("cannot extract a secret from an empty dataset");
  auto encode = [&](std::size_t k) { return encrypt(key, compress(serialize_examples(data, k))); };
  auto fits = [&](std::size_t k) { return encode(k).size() * 8 <= max_bits; };

  if (!fits(1)) throw CapacityError("capacity too small: not even one example fits in " +
                                    std::to_string(max_bits) + " bits");
  std::size_t lo = 1;
  std::size_t hi = data.size();
  if (fits(hi)) {
    lo = hi;
  } else {
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      (fits(mid) ? lo : hi) = mid;
    }
  }
  SecretPayload p;
  p.encoding = SecretEncoding::CompressedEncrypted;
  p.example_count = lo;
  p.raw_bytes = serialize_examples(data, lo).size();
  p.bits = bytes_to_bits(encode(lo));
  return p;
}

DecodedExamples recover_secret_examples(const BitString& bits, const SecretKey& key) {
  const Bytes cipher = bits_to_bytes(bits);
  return deserialize_examples(decompress(decrypt(key, cipher)));
}

Bytes pixel_to_gray(std::span<const double> x, const ImageMeta& meta) {
  if (x.size() != meta.pixels() * meta.channels) {
    throw ContractError("image features do not match image metadata");
  }
  Bytes out(meta.pixels());
  for (std::size_t p = 0; p < meta.pixels(); ++p) {
    double level;
    if (meta.channels == 3) {
      const double r = x[3 * p] * 255.0;
      const double g = x[3 * p + 1] * 255.0;
      const double b = x[3 * p + 2] * 255.0;
      level = 0.299 * r + 0.587 * g + 0.114 * b;
    } else if (meta.channels == 1) {
      level = x[p] * 255.0;
    } else {
      throw ContractError("unsupported channel count " + std::to_string(meta.channels));
    }
    out[p] = static_cast<std::uint8_t>(std::clamp(std::lround(level), 0L, 255L));
  }
  return out;
}

Bytes pixel_to_gray(const LabeledDataset& data, std::size_t index) {
  if (data.kind() != DatasetKind::Image || !data.image) {
    throw ContractError("pixel_to_gray needs an image dataset");
  }
  return pixel_to_gray(data.features(index), *data.image);
}

std::uint8_t quantize4(std::uint8_t pixel) { return static_cast<std::uint8_t>(pixel / 16); }

std::uint8_t dequantize4(std::uint8_t level) {
  return static_cast<std::uint8_t>(16 * std::min<int>(level, 15) + 8);
}

BitString tokens_to_bits(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  const unsigned width = vocab.bit_width();
  BitString bits;
  for (const auto& t : tokens) {
    if (auto idx = vocab.index_of(t)) append_bits(bits, *idx, width);
  }
  return bits;
}

std::vector<std::string> bits_to_tokens(const BitString& bits, const Vocabulary& vocab) {
  const unsigned width = vocab.bit_width();
  if (bits.size() % width != 0) {
    throw ContractError("bit length " + std::to_string(bits.size()) +
                        " is not a multiple of the token width " + std::to_string(width));
  }
  std::vector<std::string> out;
  for (std::size_t off = 0; off < bits.size(); off += width) {
    out.push_back(vocab.token(read_bits(bits, off, width) % vocab.size()));
  }
  return out;
}

std::vector<std::string> secret_tokens(const std::vector<std::string>& document,
                                       const Vocabulary& vocab, std::size_t limit) {
  std::vector<std::string> out;
  for (const auto& t : document) {
    if (out.size() == limit) break;
    if (vocab.contains(t)) out.push_back(t);
  }
  return out;
}

unsigned max_bits_per_label(int classes) {
  if (classes < 2) throw ContractError("need at least two classes to encode bits");
  unsigned w = 0;
  while ((2 << w) <= classes) ++w;
  return w;
}

int bits_to_label(const BitString& bits, int classes) {
  const unsigned w = static_cast<unsigned>(bits.size());
  if (w == 0 || w > max_bits_per_label(classes)) {
    throw ContractError(std::to_string(w) + " bits do not fit a label of " +
                        std::to_string(classes) + " classes");
  }
  return static_cast<int>(read_bits(bits, 0, w));
}

BitString label_to_bits(int label, unsigned width) {
  if (label < 0 || (width < 31 && label >= (1 << width))) {
    throw ContractError("label " + std::to_string(label) + " does not fit in " +
                        std::to_string(width) + " bits");
  }
  BitString bits;
  append_bits(bits, static_cast<std::uint64_t>(label), width);
  return bits;
}

std::vector<double> make_token_vector(const SecretKey& key, std::string_view token, std::size_t dim) {
  PrfStream stream(key, "token-vector:" + std::string(token));
  std::vector<double> v(dim);
  for (auto& x : v) x = 2.0 * stream.next_unit() - 1.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(dim);
  double var = 0.0;
  for (double& x : v) {
    x -= mean;
    var += x * x;
  }
  var /= static_cast<double>(dim);
  const double sd = std::sqrt(var);
  if (sd > 0.0) {
    for (double& x : v) x /= sd;
  }
  return v;
}

TokenVectorTable::TokenVectorTable(const SecretKey& key, std::shared_ptr<const Vocabulary> vocab,
                                   std::size_t dim)
    : vocab_(std::move(vocab)), dim_(dim) {
  if (!vocab_) throw ContractError("token vector table needs a vocabulary");
  if (dim_ < 2) throw ContractError("token vectors need at least two dimensions");
  table_.reserve(vocab_->size() * dim_);
  for (const auto& t : vocab_->tokens()) {
    const auto v = make_token_vector(key, t, dim_);
    table_.insert(table_.end(), v.begin(), v.end());
  }
}

std::vector<double> token_vector(const TokenVectorTable& table, std::string_view token) {
  const auto idx = table.vocab().index_of(token);
  if (!idx) throw ContractError("unknown token '" + std::string(token) + "'");
  const auto v = table.vector(*idx);
  return {v.begin(), v.end()};
}

}  // namespace mlmem
