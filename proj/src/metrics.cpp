#include "mlmem/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlmem/error.hpp"
#include "mlmem/kernels.hpp"

namespace mlmem {

double mape(std::span<const std::uint8_t> decoded, std::span<const std::uint8_t> truth) {
  if (decoded.size() != truth.size() || truth.empty()) {
    throw ContractError("MAPE needs two non-empty images of equal size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    sum += std::abs(static_cast<double>(decoded[i]) - static_cast<double>(truth[i]));
  }
  return sum / static_cast<double>(truth.size());
}

double mape(std::span<const double> decoded, std::span<const double> truth) {
  if (decoded.size() != truth.size() || truth.empty()) {
    throw ContractError("MAPE needs two non-empty images of equal size");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += std::abs(decoded[i] - truth[i]);
  return sum / static_cast<double>(truth.size());
}

PrecisionRecall precision_recall(const std::vector<std::string>& decoded,
                                 const std::vector<std::string>& truth) {
  const std::set<std::string> d(decoded.begin(), decoded.end());
  const std::set<std::string> t(truth.begin(), truth.end());
  if (t.empty()) throw ContractError("precision/recall needs a non-empty ground truth");
  std::size_t hit = 0;
  for (const auto& tok : d) hit += t.count(tok);
  PrecisionRecall pr;
  pr.precision = d.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(d.size());
  pr.recall = static_cast<double>(hit) / static_cast<double>(t.size());
  return pr;
}

double cosine_similarity_bow(const std::vector<std::string>& a, const std::vector<std::string>& b,
                             const Vocabulary& vocab) {
  const auto va = bag_of_words(a, vocab);
  const auto vb = bag_of_words(b, vocab);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    dot += va[i] * vb[i];
    na += va[i] * va[i];
    nb += vb[i] * vb[i];
  }
  if (na == 0.0 || nb == 0.0) throw ContractError("cosine similarity of an empty bag of words");
  return dot / std::sqrt(na * nb);
}

double bit_match_rate(const BitString& a, const BitString& b) {
  if (a.size() != b.size()) throw ContractError("bit strings differ in length");
  if (a.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

namespace {

std::optional<double> mean_of(const std::vector<ItemMetrics>& items,
                              std::optional<double> ItemMetrics::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& it : items) {
    if (it.*field) {
      sum += *(it.*field);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

void put(nlohmann::json& j, const char* name, const std::optional<double>& v) {
  if (v) j[name] = *v;
}

}  // namespace

void DecodeReport::finalize() {
  mean_mape = mean_of(items, &ItemMetrics::mape);
  mean_precision = mean_of(items, &ItemMetrics::precision);
  mean_recall = mean_of(items, &ItemMetrics::recall);
  mean_cosine = mean_of(items, &ItemMetrics::cosine);
}

std::string DecodeReport::to_json() const {
  nlohmann::json j;
  j["attack"] = attack;
  put(j, "mean_mape", mean_mape);
  put(j, "mean_precision", mean_precision);
  put(j, "mean_recall", mean_recall);
  put(j, "mean_cosine", mean_cosine);
  put(j, "bit_error_rate", bit_error_rate);
  if (checksum_ok) j["checksum_ok"] = *checksum_ok;
  j["items"] = nlohmann::json::array();
  for (const auto& it : items) {
    nlohmann::json e = nlohmann::json::object();
    put(e, "mape", it.mape);
    put(e, "precision", it.precision);
    put(e, "recall", it.recall);
    put(e, "cosine", it.cosine);
    j["items"].push_back(e);
  }
  return j.dump(2);
}

ParameterVector lsb_scrub(const ParameterVector& params, unsigned bits, std::uint64_t seed) {
  if (bits > 23) throw ContractError("scrub width must be at most 23 bits");
  ParameterVector out = params;
  kernels::omp::randomize_low_bits(out.span(), bits, seed);
  return out;
}

Moments moments(std::span<const double> values) {
  if (values.empty()) throw ContractError("moments of an empty sequence");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  Moments m;
  m.mean = mean;
  m.stddev = std::sqrt(m2);
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw ContractError("histogram needs at least one bin");
  if (values.empty()) throw ContractError("histogram of an empty sequence");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  Histogram h;
  double lo = *mn;
  double hi = *mx;
  if (lo == hi) {
    h.degenerate = true;
    h.edges = {lo, hi};
    h.counts = {values.size()};
    return h;
  }
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  }
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  kernels::omp::histogram(values, lo, hi, h.counts);
  return h;
}

ParamStats param_stats(const ParameterVector& params, std::size_t bins, const Layout* layout) {
  const std::vector<double> all(params.values().begin(), params.values().end());
  ParamStats s;
  s.count = all.size();
  s.moments = moments(all);
  s.histogram = histogram(all, bins);
  if (layout) {
    for (std::size_t l = 0; l < layout->layers.size(); ++l) {
      const auto& layer = layout->layers[l];
      const std::span<const double> vals(all.data() + layer.weight_offset,
                                         layer.end() - layer.weight_offset);
      s.layers.push_back({l, vals.size(), moments(vals)});
    }
  }
  return s;
}

std::string ParamStats::histogram_csv() const {
  std::ostringstream os;
  os.precision(9);
  os << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
    os << histogram.edges[b] << ',' << histogram.edges[b + 1] << ',' << histogram.counts[b]
       << '\n';
  }
  return os.str();
}

std::string ParamStats::to_json() const {
  auto mj = [](const Moments& m) {
    return nlohmann::json{{"mean", m.mean},
                          {"stddev", m.stddev},
                          {"skewness", m.skewness},
                          {"excess_kurtosis", m.excess_kurtosis}};
  };
  nlohmann::json j;
  j["count"] = count;
  j["moments"] = mj(moments);
  j["histogram"] = {{"edges", histogram.edges},
                    {"counts", histogram.counts},
                    {"degenerate", histogram.degenerate}};
  j["layers"] = nlohmann::json::array();
  for (const auto& l : layers) {
    j["layers"].push_back({{"layer", l.layer}, {"count", l.count}, {"moments", mj(l.moments)}});
  }
  return j.dump(2);
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ContractError("KS statistic of an empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double ks_statistic(const ParameterVector& a, const ParameterVector& b) {
  const std::vector<double> x(a.values().begin(), a.values().end());
  const std::vector<double> y(b.values().begin(), b.values().end());
  return ks_statistic(x, y);
}

}  // namespace mlmem
