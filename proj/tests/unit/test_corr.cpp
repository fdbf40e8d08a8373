#include <cmath>
#include <memory>

#include "doctest.h"
#include "helpers.hpp"
#include "mlmem/corr.hpp"
#include "mlmem/deskdata.hpp"
#include "mlmem/metrics.hpp"

using namespace mlmem;

namespace {

Bytes random_image(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Bytes img(n);
  for (auto& p : img) p = static_cast<std::uint8_t>(rng.below(256));
  img[0] = 0;
  img[1] = 255;
  return img;
}

}  // namespace

TEST_CASE("image decode inverts affine maps and inversion") {
  auto img = random_image(64, 1);
  std::vector<float> theta(64), neg(64);
  for (std::size_t i = 0; i < 64; ++i) {
    theta[i] = 0.01f * img[i] - 0.3f;
    neg[i] = -0.002f * img[i];
  }
  std::vector<Bytes> truth{img};
  auto a = corr::corr_decode_image(ParameterVector(theta), {64}, &truth);
  CHECK(a[0].pixels == img);
  CHECK(*a[0].mape < 1e-4);
  CHECK_FALSE(a[0].inverted);
  auto b = corr::corr_decode_image(ParameterVector(neg), {64}, &truth);
  CHECK(b[0].pixels == img);
  CHECK(*b[0].mape < 1e-4);
  CHECK(b[0].inverted);
  CHECK_THROWS(corr::minmax_scale(std::vector<double>(5, 1.0)));
}

TEST_CASE("image decode under uniform noise") {
  // Noise uniform in [-16, 16] on the pixel scale. The noise alone costs 8 on
  // average; min-max rescaling of a full-range image adds an affine error that
  // brings the simulated mean to about 9.0.
  double total = 0.0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    auto img = random_image(1024, 100 + t);
    Rng rng(200 + t);
    std::vector<float> theta(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
      theta[i] = static_cast<float>(img[i] + rng.uniform(-16, 16));
    std::vector<Bytes> truth{img};
    total += *corr::corr_decode_image(ParameterVector(theta), {img.size()}, &truth)[0].mape;
  }
  CHECK(total / trials <= 9.2);
}

TEST_CASE("text decode with exact token vectors") {
  std::vector<std::string> words;
  for (int i = 0; i < 200; ++i) words.push_back("v" + std::to_string(i));
  auto vocab = std::make_shared<const Vocabulary>(words);
  TokenVectorTable table(testing::test_key(), vocab);
  std::vector<std::string> doc{"v3", "v17", "v150", "v3", "v99"};
  std::vector<float> theta;
  for (const auto& w : doc)
    for (double v : token_vector(table, w)) theta.push_back(static_cast<float>(v));
  theta.resize(theta.size() + 40, 0.5f);

  corr::TextDecodeConfig cfg;
  cfg.tokens_per_doc = doc.size();
  cfg.documents = 1;
  auto out = corr::corr_decode_text(ParameterVector(theta), table, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0].accepted() == doc);
  auto pr = precision_recall(out[0].accepted(), doc);
  CHECK(pr.precision == 1.0);
  CHECK(pr.recall == 1.0);

  // Negated parameters decode the same way.
  for (auto& v : theta) v = -v;
  CHECK(corr::corr_decode_text(ParameterVector(theta), table, cfg)[0].accepted() == doc);
}

TEST_CASE("text decode precision rises with tau") {
  std::vector<std::string> words;
  for (int i = 0; i < 300; ++i) words.push_back("t" + std::to_string(i));
  auto vocab = std::make_shared<const Vocabulary>(words);
  TokenVectorTable table(testing::test_key(3), vocab);
  Rng rng(5);
  std::vector<std::string> doc;
  std::vector<float> theta;
  for (int i = 0; i < 100; ++i) {
    doc.push_back(words[rng.below(words.size())]);
    for (double v : token_vector(table, doc.back()))
      theta.push_back(static_cast<float>(v + 1.1 * rng.normal()));
  }
  corr::TextDecodeConfig cfg;
  cfg.tokens_per_doc = 100;
  cfg.documents = 1;
  double last = -1.0;
  for (double tau : {0.0, 0.3, 0.5, 0.7, 0.85}) {
    cfg.tau = tau;
    auto acc = corr::corr_decode_text(ParameterVector(theta), table, cfg)[0];
    std::size_t right = 0, kept = 0;
    for (std::size_t i = 0; i < acc.tokens.size(); ++i) {
      if (!acc.tokens[i].token) continue;
      ++kept;
      right += *acc.tokens[i].token == doc[i];
    }
    if (kept == 0) break;
    const double precision = static_cast<double>(right) / kept;
    CHECK(precision >= last);
    last = precision;
  }
}

TEST_CASE("corr training with zero lambda is benign") {
  desk::DeskDatasetSpec spec;
  spec.n = 200;
  auto data = desk::synth_data(spec);
  ModelSpec model{Architecture::Mlp, data.train.dim(), 2, {8}};
  Hyperparameters hp;
  hp.epochs = 2;
  auto secret = corr::image_secret(data.train, 2);
  CHECK(secret.values.size() == 512);
  auto benign = sgd_train(model, data.train, hp, {});
  auto zero = corr::corr_encode_train(model, data.train, hp, 0.0, secret.values);
  CHECK(zero.report.params.bit_identical(benign.params));
  CHECK(corr::image_capacity(data.train, parameter_count(model)) ==
        parameter_count(model) / 256);
}
