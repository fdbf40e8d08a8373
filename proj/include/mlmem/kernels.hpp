#pragma once

// Data-parallel inner loops. Every kernel exists twice: a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`. Both variants
// perform floating-point reductions in the same fixed order, so their results
// are bit-identical regardless of the thread count; the tests hold them to it.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlmem/dataset.hpp"
#include "mlmem/model.hpp"

namespace mlmem::kernels {

// Batch gradients are summed per chunk of this many examples, then the chunk
// partials are added in chunk order.
inline constexpr std::size_t kGradientChunk = 16;

struct SlotMatch {
  std::size_t best = 0;  // argmax Pearson correlation (lowest index on ties)
  double best_corr = 0.0;
  std::size_t worst = 0;  // argmin
  double worst_corr = 0.0;
};

namespace serial {

// Sum over `batch` of per-example gradients written into `grad` (overwritten).
// Returns the summed loss.
double batch_gradient(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                      const LabeledDataset& data, std::span<const std::size_t> batch,
                      std::span<double> grad);

void predict_labels(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                    const LabeledDataset& data, std::span<int> out);

// `segments` holds consecutive slots of `dim` values; `table` holds one row of
// `dim` values per candidate.
void correlation_search(std::span<const double> segments, std::span<const double> table,
                        std::size_t dim, std::span<SlotMatch> out);

// Replace the low `bits` bits of every parameter with counter-based
// pseudorandom bits: bit pattern for index i comes from splitmix64(seed, i).
void randomize_low_bits(std::span<float> params, unsigned bits, std::uint64_t seed);

// Equal-width bins over [lo, hi]; the last bin is closed on the right.
void histogram(std::span<const double> values, double lo, double hi,
               std::span<std::uint64_t> counts);

}  // namespace serial

namespace omp {

double batch_gradient(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                      const LabeledDataset& data, std::span<const std::size_t> batch,
                      std::span<double> grad);
void predict_labels(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                    const LabeledDataset& data, std::span<int> out);
void correlation_search(std::span<const double> segments, std::span<const double> table,
                        std::size_t dim, std::span<SlotMatch> out);
void randomize_low_bits(std::span<float> params, unsigned bits, std::uint64_t seed);
void histogram(std::span<const double> values, double lo, double hi,
               std::span<std::uint64_t> counts);

int max_threads();

}  // namespace omp

// Pseudorandom 32-bit pattern for parameter `index` under `seed`.
std::uint32_t counter_bits(std::uint64_t seed, std::uint64_t index);

}  // namespace mlmem::kernels
