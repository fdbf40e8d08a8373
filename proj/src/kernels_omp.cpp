#include <algorithm>
#include <bit>
#include <cmath>

#include <omp.h>

#include "mlmem/kernels.hpp"

namespace mlmem::kernels::omp {

int max_threads() { return omp_get_max_threads(); }

double batch_gradient(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                      const LabeledDataset& data, std::span<const std::size_t> batch,
                      std::span<double> grad) {
  const std::size_t n = grad.size();
  const std::size_t chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
  thread_local std::vector<double> partials;
  thread_local std::vector<double> losses;
  partials.assign(chunks * n, 0.0);
  losses.assign(chunks, 0.0);
  double* base = partials.data();
  double* loss_out = losses.data();

#pragma omp parallel
  {
    Workspace ws;
#pragma omp for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(chunks); ++k) {
      const auto begin = static_cast<std::size_t>(k) * kGradientChunk;
      const std::size_t end = std::min(batch.size(), begin + kGradientChunk);
      std::span<double> partial(base + static_cast<std::size_t>(k) * n, n);
      double chunk_loss = 0.0;
      for (std::size_t j = begin; j < end; ++j) {
        const std::size_t i = batch[j];
        chunk_loss += accumulate_example_gradient(spec, layout, params, data.features(i),
                                                  data.label(i), partial, ws);
      }
      loss_out[k] = chunk_loss;
    }
  }

  // Fixed reduction order: chunk 0, 1, 2, ...
  std::fill(grad.begin(), grad.end(), 0.0);
  double total_loss = 0.0;
  for (std::size_t k = 0; k < chunks; ++k) {
    const double* p = base + k * n;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) grad[static_cast<std::size_t>(j)] += p[j];
    total_loss += loss_out[k];
  }
  return total_loss;
}

void predict_labels(const ModelSpec& spec, const Layout& layout, std::span<const float> params,
                    const LabeledDataset& data, std::span<int> out) {
#pragma omp parallel
  {
    Workspace ws;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(data.size()); ++i) {
      const auto u = static_cast<std::size_t>(i);
      out[u] = predict_label(spec, layout, params, data.features(u), ws);
    }
  }
}

namespace {

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
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    const auto u = static_cast<std::size_t>(r);
    normalize_row(table.subspan(u * dim, dim), std::span(tnorm).subspan(u * dim, dim));
  }
#pragma omp parallel
  {
    std::vector<double> seg(dim);
#pragma omp for schedule(dynamic, 16)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(slots); ++s) {
      const auto su = static_cast<std::size_t>(s);
      normalize_row(segments.subspan(su * dim, dim), seg);
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
      out[su] = m;
    }
  }
}

void randomize_low_bits(std::span<float> params, unsigned bits, std::uint64_t seed) {
  if (bits == 0) return;
  const std::uint32_t mask = bits >= 32 ? 0xffffffffu : ((1u << bits) - 1u);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(params.size()); ++i) {
    const auto u = static_cast<std::size_t>(i);
    const auto pattern = std::bit_cast<std::uint32_t>(params[u]);
    params[u] = std::bit_cast<float>((pattern & ~mask) | (counter_bits(seed, u) & mask));
  }
}

void histogram(std::span<const double> values, double lo, double hi,
               std::span<std::uint64_t> counts) {
  std::fill(counts.begin(), counts.end(), 0);
  const std::size_t bins = counts.size();
  const double width = hi - lo;
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(bins, 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(values.size()); ++i) {
      const double v = values[static_cast<std::size_t>(i)];
      std::size_t b = 0;
      if (width > 0.0) {
        const double t = (v - lo) / width * static_cast<double>(bins);
        b = t <= 0.0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(t));
      }
      ++local[b];
    }
#pragma omp critical
    for (std::size_t b = 0; b < bins; ++b) counts[b] += local[b];
  }
}

}  // namespace mlmem::kernels::omp
