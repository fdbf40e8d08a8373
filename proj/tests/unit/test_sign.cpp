#include "doctest.h"
#include "helpers.hpp"
#include "mlmem/deskdata.hpp"
#include "mlmem/sign.hpp"

using namespace mlmem;

TEST_CASE("sign decode") {
  ParameterVector p(std::vector<float>{0.3f, -0.2f, 0.5f});
  CHECK(bits_to_string(sign::sign_decode(p, 3)) == "101");
  ParameterVector z(std::vector<float>{0.0f, -1.0f});
  CHECK(bits_to_string(sign::sign_decode(z, 2)) == "10");
  CHECK(sign::sign_match_rate(z, {1, -1}) == 1.0);
}

TEST_CASE("sign secrets") {
  Bytes img(16, 0);
  img[0] = 255;
  auto s = sign::sign_secret_from_images({img});
  CHECK(s.signs.size() == 128);
  for (int i = 0; i < 8; ++i) CHECK(s.signs[i] == 1);
  for (int i = 8; i < 128; ++i) CHECK(s.signs[i] == -1);
  auto back = sign::bits_to_images(s.bits(), 16);
  REQUIRE(back.size() == 1);
  CHECK(back[0] == img);

  std::vector<std::string> words;
  for (int i = 0; i < 70000; ++i) words.push_back("x" + std::to_string(i));
  Vocabulary vocab(words);
  CHECK(vocab.bit_width() == 17);
  std::vector<std::string> doc(100, "x12345");
  auto t = sign::sign_secret_from_text({doc}, vocab);
  CHECK(t.signs.size() == 1700);
  CHECK(sign::bits_to_documents(t.bits(), vocab, 100)[0] == doc);

  // Short documents are padded to the slot with index 0.
  auto padded = sign::sign_secret_from_text({{"x5"}}, vocab, 3);
  auto docs = sign::bits_to_documents(padded.bits(), vocab, 3);
  CHECK(docs[0] == std::vector<std::string>{"x5", "x0", "x0"});
}

TEST_CASE("sign training") {
  desk::DeskDatasetSpec spec;
  spec.n = 400;
  auto data = desk::synth_data(spec);
  ModelSpec model{Architecture::Mlp, data.train.dim(), 2, {32}};
  Hyperparameters hp;
  hp.epochs = 20;
  std::vector<Bytes> imgs{pixel_to_gray(data.train, 0)};
  auto secret = sign::sign_secret_from_images(imgs);

  auto benign = sign::sign_encode_train(model, data.train, hp, 0.0, secret);
  CHECK(benign.match_rate > 0.45);
  CHECK(benign.match_rate < 0.55);

  auto attacked = sign::sign_encode_train(model, data.train, hp, 50.0, secret);
  CHECK(attacked.match_rate >= 0.95);
  auto bits = sign::sign_decode(attacked.report.params, secret.signs.size());
  std::size_t wrong = 0;
  auto truth = secret.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) wrong += bits[i] != truth[i];
  CHECK(static_cast<double>(wrong) / bits.size() <= 0.05);
}
