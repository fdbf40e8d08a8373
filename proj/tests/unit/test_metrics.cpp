#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "mlmem/error.hpp"
#include "mlmem/metrics.hpp"
#include "oracles.hpp"

using namespace mlmem;

TEST_CASE("mape examples") {
  Bytes a(16, 0), b(16, 255), c(16, 100), d(16, 104);
  CHECK(mape(a, a) == 0.0);
  CHECK(mape(a, b) == 255.0);
  CHECK(mape(d, c) == 4.0);
  CHECK_THROWS_AS(mape(Bytes(3), Bytes(4)), ContractError);
}

TEST_CASE("precision/recall examples") {
  std::vector<std::string> truth{"a", "b", "c", "d"};
  auto same = precision_recall(truth, truth);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  auto half = precision_recall({"a", "b"}, truth);
  CHECK(half.precision == 1.0);
  CHECK(half.recall == 0.5);
  auto none = precision_recall({"x", "y"}, truth);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
}

TEST_CASE("cosine examples") {
  Vocabulary v(std::vector<std::string>{"a", "b", "c", "d"});
  std::vector<std::string> x{"a", "b", "b"};
  std::vector<std::string> xx{"a", "b", "b", "a", "b", "b"};
  CHECK(cosine_similarity_bow(x, x, v) == doctest::Approx(1.0));
  CHECK(cosine_similarity_bow(x, {"c", "d"}, v) == 0.0);
  CHECK(cosine_similarity_bow(x, xx, v) == doctest::Approx(1.0));
  CHECK_THROWS(cosine_similarity_bow(x, {"zz"}, v));
}

TEST_CASE("metrics agree with brute force on random instances") {
  Rng rng(2024);
  std::vector<std::string> words;
  for (int i = 0; i < 30; ++i) words.push_back("w" + std::to_string(i));
  Vocabulary vocab(words);
  std::set<std::string> allow(words.begin(), words.end());
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(300);
    Bytes a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<std::uint8_t>(rng.below(256));
      b[i] = static_cast<std::uint8_t>(rng.below(256));
    }
    CHECK(mape(a, b) == oracle::mape_exact(a, b).value());

    auto doc = [&](std::size_t len) {
      std::vector<std::string> d;
      for (std::size_t i = 0; i < len; ++i) d.push_back(words[rng.below(words.size())]);
      return d;
    };
    auto da = doc(1 + rng.below(40));
    auto db = doc(1 + rng.below(40));
    auto pr = precision_recall(da, db);
    auto [p, r] = oracle::precision_recall_exact(da, db);
    CHECK(pr.precision == p.value());
    CHECK(pr.recall == r.value());
    CHECK(std::abs(cosine_similarity_bow(da, db, vocab) - oracle::cosine_bow(da, db, allow)) <=
          1e-9);
  }
}

TEST_CASE("moments and histograms") {
  std::vector<double> flat(100, 0.25);
  auto m = moments(flat);
  CHECK(m.stddev == 0.0);
  CHECK(histogram(flat, 10).degenerate);

  Rng rng(77);
  std::vector<double> normal(100000);
  for (auto& v : normal) v = rng.normal();
  auto nm = moments(normal);
  CHECK(std::abs(nm.skewness) <= 0.05);
  CHECK(std::abs(nm.excess_kurtosis) <= 0.1);
  auto h = histogram(normal, 201);
  CHECK(h.edges.size() == 202);
  std::uint64_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total == normal.size());
}

TEST_CASE("ks statistic") {
  std::vector<double> a{1, 2, 3, 4}, b{5, 6, 7, 8}, c{1, 2, 3, 4};
  CHECK(ks_statistic(a, b) == 1.0);
  CHECK(ks_statistic(a, c) == 0.0);
  std::vector<double> d{1, 2, 5, 6};
  CHECK(ks_statistic(a, d) == doctest::Approx(0.5));
}

TEST_CASE("decode report json omits absent fields") {
  DecodeReport r;
  r.attack = "lsb";
  r.items.push_back({4.0, std::nullopt, std::nullopt, std::nullopt});
  r.items.push_back({6.0, std::nullopt, std::nullopt, std::nullopt});
  r.bit_error_rate = 0.0;
  r.finalize();
  CHECK(*r.mean_mape == 5.0);
  auto j = r.to_json();
  CHECK(j.find("mean_mape") != std::string::npos);
  CHECK(j.find("mean_cosine") == std::string::npos);
}
