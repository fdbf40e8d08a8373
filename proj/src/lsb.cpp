#include "mlmem/lsb.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "mlmem/error.hpp"
#include "mlmem/kernels.hpp"
#include "mlmem/rng.hpp"

namespace mlmem::lsb {

void LsbConfig::validate() const {
  if (bits == 0) throw ContractError("bits per parameter must be >= 1");
  if (bits > kMantissaBits && !allow_exponent) {
    throw ContractError("bits per parameter above 23 touch the exponent; pass the override flag");
  }
  if (bits > kMaxBitsOverride) throw ContractError("bits per parameter must be <= 31");
}

EncodeResult lsb_encode(const ParameterVector& params, const BitString& payload,
                        const LsbConfig& cfg) {
  cfg.validate();
  const std::size_t capacity = capacity_bits(params.size(), cfg.bits);
  if (payload.size() > capacity) {
    throw CapacityError("capacity exceeded: need l*b >= " + std::to_string(payload.size()) +
                        ", have " + std::to_string(capacity));
  }
  EncodeResult result{params, {}};
  const unsigned b = cfg.bits;
  constexpr std::uint32_t kExponentMask = 0x7f800000u;
  for (std::size_t i = 0; i * b < payload.size(); ++i) {
    auto pattern = std::bit_cast<std::uint32_t>(params[i]);
    const std::size_t first = i * b;
    const std::size_t take = std::min<std::size_t>(b, payload.size() - first);
    for (std::size_t k = 0; k < take; ++k) {
      const unsigned pos = b - 1 - static_cast<unsigned>(k);
      pattern = (pattern & ~(1u << pos)) | (static_cast<std::uint32_t>(payload[first + k]) << pos);
    }
    float value = std::bit_cast<float>(pattern);
    if (!std::isfinite(value)) {
      // Only reachable when writing into the exponent: clear the exponent
      // bits that were written.
      const std::uint32_t written = b >= 32 ? 0xffffffffu : ((1u << b) - 1u);
      pattern &= ~(kExponentMask & written);
      value = std::bit_cast<float>(pattern);
      result.fixups.push_back(i);
    }
    result.params[i] = value;
  }
  return result;
}

BitString lsb_decode(const ParameterVector& params, const LsbConfig& cfg, std::size_t nbits) {
  cfg.validate();
  const std::size_t capacity = capacity_bits(params.size(), cfg.bits);
  if (nbits > capacity) {
    throw CapacityError("cannot read " + std::to_string(nbits) + " bits from a capacity of " +
                        std::to_string(capacity));
  }
  BitString out;
  out.reserve(nbits);
  const unsigned b = cfg.bits;
  for (std::size_t i = 0; out.size() < nbits; ++i) {
    const auto pattern = std::bit_cast<std::uint32_t>(params[i]);
    for (unsigned k = 0; k < b && out.size() < nbits; ++k) {
      out.push_back(static_cast<std::uint8_t>((pattern >> (b - 1 - k)) & 1u));
    }
  }
  return out;
}

BitString frame_payload(std::span<const std::uint8_t> payload) {
  Bytes framed;
  const auto len = static_cast<std::uint32_t>(payload.size());
  const std::uint32_t crc = mlmem::crc32(payload);
  for (int k = 0; k < 4; ++k) framed.push_back(static_cast<std::uint8_t>(len >> (8 * k)));
  for (int k = 0; k < 4; ++k) framed.push_back(static_cast<std::uint8_t>(crc >> (8 * k)));
  framed.insert(framed.end(), payload.begin(), payload.end());
  return bytes_to_bits(framed);
}

namespace {

std::uint32_t le32(const Bytes& b, std::size_t off) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[off + k]) << (8 * k);
  return v;
}

}  // namespace

std::optional<Bytes> unframe_payload(const BitString& bits) {
  if (bits.size() < kFrameHeaderBits || bits.size() % 8 != 0) return std::nullopt;
  const Bytes bytes = bits_to_bytes(bits);
  const std::uint32_t len = le32(bytes, 0);
  if (static_cast<std::size_t>(len) + 8 > bytes.size()) return std::nullopt;
  Bytes payload(bytes.begin() + 8, bytes.begin() + 8 + len);
  if (mlmem::crc32(payload) != le32(bytes, 4)) return std::nullopt;
  return payload;
}

std::optional<Bytes> decode_framed(const ParameterVector& params, const LsbConfig& cfg) {
  const std::size_t capacity = capacity_bits(params.size(), cfg.bits);
  if (capacity < kFrameHeaderBits) return std::nullopt;
  const Bytes header = bits_to_bytes(lsb_decode(params, cfg, kFrameHeaderBits));
  const std::size_t total = kFrameHeaderBits + 8 * static_cast<std::size_t>(le32(header, 0));
  if (total > capacity) return std::nullopt;
  return unframe_payload(lsb_decode(params, cfg, total));
}

std::vector<SweepRow> lsb_accuracy_sweep(const ModelSpec& spec, const ParameterVector& params,
                                         const LabeledDataset& test,
                                         const std::vector<unsigned>& bit_range,
                                         std::uint64_t seed, int trials) {
  if (trials < 1) throw ContractError("sweep needs at least one trial");
  std::vector<SweepRow> rows;
  for (unsigned b : bit_range) {
    if (b > kMaxBitsOverride) throw ContractError("sweep bit count must be <= 31");
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      ParameterVector noisy = params;
      const std::uint64_t s = derive_seed(seed, "sweep:" + std::to_string(b) + ":" + std::to_string(t));
      kernels::omp::randomize_low_bits(noisy.span(), b, s);
      // Randomizing exponent bits can produce Inf/NaN; such a parameter is
      // clamped to zero so the sweep measures accuracy instead of crashing.
      for (auto& v : noisy.values()) {
        if (!std::isfinite(v)) v = 0.0f;
      }
      sum += accuracy(spec, noisy, test);
    }
    rows.push_back({b, sum / trials});
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "bits,accuracy\n";
  os.precision(10);
  for (const auto& r : rows) os << r.bits << ',' << r.accuracy << '\n';
  return os.str();
}

}  // namespace mlmem::lsb
