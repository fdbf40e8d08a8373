#include <memory>

#include "doctest.h"
#include "helpers.hpp"
#include "mlmem/capacity.hpp"
#include "mlmem/deskdata.hpp"
#include "mlmem/error.hpp"

using namespace mlmem;
using namespace mlmem::capacity;

namespace {

InputShape image_shape(int classes) {
  InputShape s;
  s.kind = DatasetKind::Image;
  s.dim = 16;
  s.classes = classes;
  s.image = ImageMeta{4, 4, 1};
  return s;
}

}  // namespace

TEST_CASE("labels follow the payload") {
  CapacityConfig cfg;
  cfg.m = 3;
  cfg.bits_per_input = 1;
  cfg.key = testing::test_key();
  auto batch = synthesize_malicious_data(image_shape(2), bits_from_string("101"), cfg);
  REQUIRE(batch.examples.size() == 3);
  CHECK(batch.examples.labels() == std::vector<int>{1, 0, 1});

  auto again = synthesize_malicious_data(image_shape(2), bits_from_string("101"), cfg);
  CHECK(again.examples == batch.examples);

  // Ten classes at two bits per input: two points carry four bits.
  CapacityConfig two = cfg;
  two.m = 2;
  two.bits_per_input = 2;
  auto b2 = synthesize_malicious_data(image_shape(10), bits_from_string("1101"), two);
  CHECK(b2.examples.labels() == std::vector<int>{3, 1});

  cfg.m = 2;
  CHECK_THROWS_AS(synthesize_malicious_data(image_shape(2), bits_from_string("101"), cfg),
                  CapacityError);
}

TEST_CASE("points per image") {
  // 4 bits per pixel over binary labels.
  CHECK(256 * 4 / 1 == 1024);
  CHECK(170'000 / (50 * 50 * 4) == 17);
  desk::DeskDatasetSpec spec;
  spec.n = 40;
  auto data = desk::synth_data(spec);
  CHECK(image_payload(data.train, 1).size() == 1024);
  CHECK(default_bits_per_input(2) == 1);
  CHECK(default_bits_per_input(20) == 4);
  CHECK(default_bits_per_input(1000) == 4);
}

TEST_CASE("decode with oracle and constant queries") {
  CapacityConfig cfg;
  cfg.m = 64;
  cfg.bits_per_input = 2;
  cfg.key = testing::test_key();
  auto shape = image_shape(4);
  auto payload = testing::random_bits(128, 3);
  auto batch = synthesize_malicious_data(shape, payload, cfg);

  std::size_t next = 0;
  QueryFn oracle_query = [&](std::span<const double>) { return batch.examples.label(next++); };
  CHECK(capacity_decode(oracle_query, shape, cfg, payload.size()) == payload);

  QueryFn zero = [](std::span<const double>) { return 0; };
  auto bits = capacity_decode(zero, shape, cfg, payload.size());
  std::size_t ones = 0, errors = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    CHECK(bits[i] == 0);
    ones += payload[i];
    errors += bits[i] != payload[i];
  }
  CHECK(errors == ones);
}

TEST_CASE("variant validation") {
  CapacityConfig cfg;
  cfg.m = 10;
  cfg.variant = GenVariant::VocabEnumerationText;
  CHECK_THROWS(cfg.validate(image_shape(2)));

  InputShape text;
  text.kind = DatasetKind::Text;
  text.classes = 2;
  text.vocab = std::make_shared<const Vocabulary>(std::vector<std::string>{"a", "b", "c"});
  text.dim = 3;
  // 3 singletons + 3 pairs.
  cfg.m = 6;
  CHECK_NOTHROW(cfg.validate(text));
  cfg.m = 7;
  CHECK_THROWS_AS(cfg.validate(text), CapacityError);

  cfg.m = 4;
  auto inputs = generate_inputs(text, cfg, 0, 4);
  CHECK(inputs.text->documents[0] == std::vector<std::string>{"a"});
  CHECK(inputs.text->documents[3] == std::vector<std::string>{"a", "b"});
  cfg.variant = GenVariant::PublicVocabSampledText;
  CHECK_THROWS(cfg.validate(text));
}

TEST_CASE("m = 0 equals benign training") {
  desk::DeskDatasetSpec spec;
  spec.n = 200;
  auto data = desk::synth_data(spec);
  ModelSpec model{Architecture::Mlp, data.train.dim(), 2, {8}};
  Hyperparameters hp;
  hp.epochs = 2;
  CapacityConfig cfg;
  cfg.m = 0;
  cfg.key = testing::test_key();
  auto batch = synthesize_malicious_data(shape_of(data.train), {}, cfg);
  auto a = capacity_train(model, data.train, batch, hp);
  auto b = sgd_train(model, data.train, hp, {});
  CHECK(a.report.params.bit_identical(b.params));
}

TEST_CASE("size sweep determinism") {
  desk::DeskDatasetSpec spec;
  spec.n = 200;
  auto data = desk::synth_data(spec);
  CapacityConfig cfg;
  cfg.m = 64;
  cfg.key = testing::test_key();
  auto batch = synthesize_malicious_data(shape_of(data.train), testing::random_bits(64, 1), cfg);
  Hyperparameters hp;
  hp.epochs = 2;
  auto rows = capacity_size_sweep({8, 8}, data.train, data.test, batch, hp, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].test_accuracy == rows[1].test_accuracy);
  CHECK(rows[0].mal_accuracy == rows[1].mal_accuracy);
  CHECK(size_sweep_to_csv(rows).rfind("width,", 0) == 0);
}
