// Serial reference kernels. Kept deliberately plain: the OpenMP versions in
// kernels_omp.cpp must reproduce these results bit for bit.

#include <algorithm>
#include <bit>
#include <cmath>

#include "mlmem/error.hpp"
#include "mlmem/kernels.hpp"
#include "mlmem/rng.hpp"

namespace mlmem::kernels {

std::uint32_t counter_bits(std::uint64_t seed, std::uint64_t index) {
  return static_cast<std::uint32_t>(splitmix64(seed ^ splitmix64(index)) >> 32);
}

namespace serial {

double batch_gradient(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                      const LabeledDataset& data, std::span<const std::size_t> batch,
                      std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> partial(grad.size());
  Workspace ws;
  double total_loss = 0.0;
  for (std::size_t begin = 0; begin < batch.size(); begin += kGradientChunk) {
    const std::size_t end = std::min(batch.size(), begin + kGradientChunk);
    std::fill(partial.begin(), partial.end(), 0.0);
    double chunk_loss = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t i = batch[k];
      chunk_loss += accumulate_example_gradient(spec, layout, params, data.features(i),
                                                data.label(i), partial, ws);
    }
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += partial[j];
    total_loss += chunk_loss;
  }
  return total_loss;
}

void predict_labels(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                    const LabeledDataset& data, std::span<int> out) {
  Workspace ws;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = predict_label(spec, layout, params, data.features(i), ws);
  }
}

namespace {

// Centered, unit-norm copy; all zeros for a constant row.
void normalize_row(std::span<const double> row, std::span<double> out) {
  double mean = 0.0;
  for (double v : row) mean += v;
  mean /= static_cast<double>(row.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    out[i] = row[i] - mean;
    ss += out[i] * out[i];
  }
  const double norm = std::sqrt(ss);
  for (double& v : out) v = norm > 0.0 ? v / norm : 0.0;
}

}  // namespace

void correlation_search(std::span<const double> segments, std::span<const double> table,
                        std::size_t dim, std::span<SlotMatch> out) {
  const std::size_t slots = segments.size() / dim;
  const std::size_t rows = table.size() / dim;
  std::vector<double> tnorm(table.size());
  for (std::size_t r = 0; r < rows; ++r) {
    normalize_row(table.subspan(r * dim, dim), std::span(tnorm).subspan(r * dim, dim));
  }
  std::vector<double> seg(dim);
  for (std::size_t s = 0; s < slots; ++s) {
    normalize_row(segments.subspan(s * dim, dim), seg);
    SlotMatch m;
    for (std::size_t r = 0; r < rows; ++r) {
      double c = 0.0;
      for (std::size_t k = 0; k < dim; ++k) c += seg[k] * tnorm[r * dim + k];
      if (r == 0 || c > m.best_corr) {
        m.best_corr = c;
        m.best = r;
      }
      if (r == 0 || c < m.worst_corr) {
        m.worst_corr = c;
        m.worst = r;
      }
    }
    out[s] = m;
  }
}

void randomize_low_bits(std::span<float> params, unsigned bits, std::uint64_t seed) {
  if (bits == 0) return;
  const std::uint32_t mask = bits >= 32 ? 0xffffffffu : ((1u << bits) - 1u);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto u = std::bit_cast<std::uint32_t>(params[i]);
    params[i] = std::bit_cast<float>((u & ~mask) | (counter_bits(seed, i) & mask));
  }
}

void histogram(std::span<const double> values, double lo, double hi,
               std::span<std::uint64_t> counts) {
  std::fill(counts.begin(), counts.end(), 0);
  const std::size_t bins = counts.size();
  const double width = hi - lo;
  for (double v : values) {
    std::size_t b = 0;
    if (width > 0.0) {
      const double t = (v - lo) / width * static_cast<double>(bins);
      b = t <= 0.0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(t));
    }
    ++counts[b];
  }
}

}  // namespace serial
}  // namespace mlmem::kernels
