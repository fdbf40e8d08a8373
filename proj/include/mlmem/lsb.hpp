#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mlmem/codec.hpp"
#include "mlmem/dataset.hpp"
#include "mlmem/model.hpp"

namespace mlmem::lsb {

inline constexpr unsigned kMantissaBits = 23;
inline constexpr unsigned kMaxBitsOverride = 31;  // never the sign bit

struct LsbConfig {
  unsigned bits = 16;
  // Permit writing into exponent bits (bits > 23).
  bool allow_exponent = false;

  void validate() const;
};

struct EncodeResult {
  ParameterVector params;
  // Parameters whose written pattern was non-finite and had its exponent
  // bits cleared (only possible with allow_exponent).
  std::vector<std::size_t> fixups;
};

// Parameter i carries payload bits [i*b, (i+1)*b); the first of them lands in
// bit position b-1. A trailing partial chunk fills the high end of the window.
EncodeResult lsb_encode(const ParameterVector& params, const BitString& payload,
                        const LsbConfig& cfg);

BitString lsb_decode(const ParameterVector& params, const LsbConfig& cfg, std::size_t nbits);

inline std::size_t capacity_bits(std::size_t param_count, unsigned bits) {
  return param_count * bits;
}

// u32 length || u32 crc32 || payload, little-endian, as a bit string.
BitString frame_payload(std::span<const std::uint8_t> payload);
inline constexpr std::size_t kFrameHeaderBits = 64;

// Validates the length and checksum; nullopt when the frame is corrupt.
std::optional<Bytes> unframe_payload(const BitString& bits);

// Reads the frame header from the parameters, then the framed payload.
std::optional<Bytes> decode_framed(const ParameterVector& params, const LsbConfig& cfg);

struct SweepRow {
  unsigned bits = 0;
  double accuracy = 0.0;
};

// Accuracy after randomizing the low b bits, averaged over `trials` seeded
// draws, for each b in `bit_range`. b = 0 gives the baseline.
std::vector<SweepRow> lsb_accuracy_sweep(const ModelSpec& spec, const ParameterVector& params,
                                         const LabeledDataset& test,
                                         const std::vector<unsigned>& bit_range,
                                         std::uint64_t seed, int trials = 1);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace mlmem::lsb
