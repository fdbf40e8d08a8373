#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlmem/codec.hpp"
#include "mlmem/model.hpp"
#include "mlmem/text.hpp"

namespace mlmem {

// Mean absolute pixel error on the 0..255 scale.
double mape(std::span<const std::uint8_t> decoded, std::span<const std::uint8_t> truth);
double mape(std::span<const double> decoded, std::span<const double> truth);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// Set semantics over unique tokens. Empty decoded -> precision 0.
PrecisionRecall precision_recall(const std::vector<std::string>& decoded,
                                 const std::vector<std::string>& truth);

// Cosine of BOW count vectors over `vocab`.
double cosine_similarity_bow(const std::vector<std::string>& a, const std::vector<std::string>& b,
                             const Vocabulary& vocab);

double bit_match_rate(const BitString& a, const BitString& b);

struct ItemMetrics {
  std::optional<double> mape;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> cosine;
};

struct DecodeReport {
  std::string attack;
  std::vector<ItemMetrics> items;
  std::optional<double> mean_mape;
  std::optional<double> mean_precision;
  std::optional<double> mean_recall;
  std::optional<double> mean_cosine;
  std::optional<double> bit_error_rate;
  std::optional<bool> checksum_ok;

  void finalize();  // fills the means from the items
  std::string to_json() const;
};

// Replace the low `bits` bits of every parameter with seeded random bits.
ParameterVector lsb_scrub(const ParameterVector& params, unsigned bits, std::uint64_t seed);

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::uint64_t> counts;
  bool degenerate = false;    // min == max: everything in one bin
};

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

struct LayerStats {
  std::size_t layer = 0;
  std::size_t count = 0;
  Moments moments;
};

struct ParamStats {
  std::size_t count = 0;
  Moments moments;
  Histogram histogram;
  std::vector<LayerStats> layers;

  std::string histogram_csv() const;
  std::string to_json() const;
};

Moments moments(std::span<const double> values);
Histogram histogram(std::span<const double> values, std::size_t bins);
ParamStats param_stats(const ParameterVector& params, std::size_t bins,
                       const Layout* layout = nullptr);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);
double ks_statistic(const ParameterVector& a, const ParameterVector& b);

}  // namespace mlmem
