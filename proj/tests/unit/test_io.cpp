#include <filesystem>
#include <fstream>
#include <memory>

#include "doctest.h"
#include "helpers.hpp"
#include "mlmem/deskdata.hpp"
#include "mlmem/error.hpp"
#include "mlmem/io.hpp"
#include "mlmem/text.hpp"

using namespace mlmem;
namespace fs = std::filesystem;

TEST_CASE("tokenizer and bag of words") {
  auto toks = tokenize("The cat. THE CAT!");
  CHECK(toks == std::vector<std::string>{"the", "cat", "the", "cat"});
  Vocabulary v(std::vector<std::string>{"cat", "dog", "the"});
  CHECK(bag_of_words(toks, v) == std::vector<double>{2, 0, 2});
  CHECK(tokenize("caf\xc3\xa9-bar") == std::vector<std::string>{"caf\xc3\xa9", "bar"});
  CHECK(bit_width_for(1000) == 10);
  CHECK(bit_width_for(1) == 1);
}

TEST_CASE("csv ingest") {
  testing::TempDir dir("csv");
  io::write_text(dir / "two.csv", "1.0,2.0,0\n3.0,4.0,1\n");
  auto d = io::load_csv(dir / "two.csv");
  CHECK(d.size() == 2);
  CHECK(d.dim() == 2);
  CHECK(d.classes() == 2);

  io::write_text(dir / "bad.csv", "1.0,2.0,0\n3.0,x,1\n");
  try {
    io::load_csv(dir / "bad.csv");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(e.path() == dir / "bad.csv");
    CHECK(e.offset() == 14);
  }

  desk::DeskDatasetSpec spec;
  spec.kind = desk::DeskKind::GaussTabular;
  spec.n = 50;
  spec.classes = 3;
  auto g = desk::synth_data(spec);
  io::save_csv(dir / "g.csv", g.all);
  CHECK(io::load_csv(dir / "g.csv") == g.all);
}

TEST_CASE("pgm roundtrip and directories") {
  testing::TempDir dir("pgm");
  Bytes px(256);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i);
  io::save_pgm(dir / "a.pgm", px, 16, 16);
  auto img = io::load_pgm(dir / "a.pgm");
  CHECK(img.height == 16);
  CHECK(img.pixels == px);

  desk::DeskDatasetSpec spec;
  spec.n = 40;
  auto data = desk::synth_data(spec);
  io::save_pgm_dir(dir / "imgs", data.all);
  auto back = io::ingest(dir / "imgs", io::DataFormat::PgmDir);
  CHECK(back.size() == 40);
  CHECK(back.dim() == 256);
  CHECK(back == data.all);
  for (double v : back.features(0)) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  fs::create_directories(dir / "imgs/cats");
  CHECK_THROWS_AS(io::ingest(dir / "imgs", io::DataFormat::PgmDir), FormatError);
}

TEST_CASE("text directories") {
  testing::TempDir dir("txt");
  fs::create_directories(dir / "docs/0");
  fs::create_directories(dir / "docs/1");
  io::write_text(dir / "docs/0/a.txt", "The cat. THE CAT!");
  io::write_text(dir / "docs/1/b.txt", "a dog");
  auto vocab = std::make_shared<const Vocabulary>(std::vector<std::string>{"cat", "dog", "the"});
  auto d = io::ingest(dir / "docs", io::DataFormat::TextDir, vocab);
  REQUIRE(d.size() == 2);
  CHECK(std::vector<double>(d.features(0).begin(), d.features(0).end()) ==
        std::vector<double>{2, 0, 2});
  CHECK(d.label(1) == 1);
}

TEST_CASE("model file roundtrip and corruption") {
  io::ModelFile m;
  m.spec = {Architecture::Mlp, 4, 3, {5}};
  m.params = ParameterVector(parameter_count(m.spec), 0.25f);
  m.params[3] = -0.0f;
  m.provenance = {{"seed", 3}};
  auto bytes = io::encode_model(m);
  auto back = io::decode_model(bytes);
  CHECK(back.spec == m.spec);
  CHECK(back.params.bit_identical(m.params));
  CHECK(io::encode_model(back) == bytes);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(io::decode_model(bad), FormatError);
  auto truncated = Bytes(bytes.begin(), bytes.end() - 3);
  CHECK_THROWS_AS(io::decode_model(truncated), FormatError);
}

TEST_CASE("desk data is a deterministic function of its spec") {
  for (auto kind : {desk::DeskKind::GaussTabular, desk::DeskKind::ProcImages,
                    desk::DeskKind::SynthText}) {
    desk::DeskDatasetSpec spec;
    spec.kind = kind;
    spec.n = 120;
    spec.classes = 4;
    auto a = desk::synth_data(spec);
    auto b = desk::synth_data(spec);
    CHECK(a.all == b.all);
    CHECK(a.train.size() == 90);
    CHECK(a.test.size() == 30);
  }
  desk::DeskDatasetSpec text;
  text.kind = desk::DeskKind::SynthText;
  text.n = 20;
  auto t = desk::synth_data(text);
  CHECK(t.vocab->size() == 1000);
  CHECK(t.vocab->bit_width() == 10);

  testing::TempDir d1("dd1"), d2("dd2");
  io::save_data_dir(d1.str(), t.train, t.test, t.public_vocab.get());
  io::save_data_dir(d2.str(), t.train, t.test, t.public_vocab.get());
  auto back = io::load_data_dir(d1.str());
  CHECK(back.train == t.train);
  CHECK(back.test == t.test);
  CHECK(back.public_vocab->tokens() == t.public_vocab->tokens());

  desk::DeskDatasetSpec bad;
  bad.n = 0;
  CHECK_THROWS(desk::synth_data(bad));
  bad.n = 10;
  bad.kind = desk::DeskKind::ProcImages;
  bad.classes = 11;
  CHECK_THROWS(desk::synth_data(bad));
}
