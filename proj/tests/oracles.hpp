#pragma once

// Independent reference implementations used as test oracles. They are kept
// deliberately naive (no shared code with the library) so that a bug in the
// library cannot hide behind an identical bug here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Exact MAPE as a rational: (sum |a-b|, n).
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline Ratio mape_exact(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  Ratio r{0, static_cast<std::int64_t>(a.size())};
  for (std::size_t i = 0; i < a.size(); ++i) r.num += std::abs(int(a[i]) - int(b[i]));
  return r;
}

// Precision/recall over unique tokens as exact ratios.
inline std::pair<Ratio, Ratio> precision_recall_exact(const std::vector<std::string>& decoded,
                                                      const std::vector<std::string>& truth) {
  std::set<std::string> d(decoded.begin(), decoded.end());
  std::set<std::string> t(truth.begin(), truth.end());
  std::int64_t hit = 0;
  for (const auto& w : d) hit += t.count(w);
  Ratio p{hit, static_cast<std::int64_t>(d.size())};
  Ratio r{hit, static_cast<std::int64_t>(t.size())};
  if (p.den == 0) p = {0, 1};
  if (r.den == 0) r = {0, 1};
  return {p, r};
}

// Cosine over sparse count maps, restricted to an allow-list of words.
inline double cosine_bow(const std::vector<std::string>& a, const std::vector<std::string>& b,
                         const std::set<std::string>& vocab) {
  std::map<std::string, long> ca, cb;
  for (const auto& w : a)
    if (vocab.count(w)) ++ca[w];
  for (const auto& w : b)
    if (vocab.count(w)) ++cb[w];
  long dot = 0, na = 0, nb = 0;
  for (const auto& [w, n] : ca) {
    na += n * n;
    auto it = cb.find(w);
    if (it != cb.end()) dot += n * it->second;
  }
  for (const auto& [w, n] : cb) nb += n * n;
  return static_cast<double>(dot) / (std::sqrt(static_cast<double>(na)) * std::sqrt(static_cast<double>(nb)));
}

// Two-pass Pearson with long double accumulation.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

// Central finite differences of f at x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(|a|_inf, |b|_inf, floor).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             double floor = 1e-12) {
  double diff = 0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

}  // namespace oracle
