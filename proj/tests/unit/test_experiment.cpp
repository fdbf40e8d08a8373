#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "mlmem/endpoint.hpp"
#include "mlmem/error.hpp"
#include "mlmem/experiment.hpp"

using namespace mlmem;
namespace ex = mlmem::experiment;

TEST_CASE("endpoint protocol") {
  ModelSpec spec{Architecture::BinaryLinearSvm, 2, 2, {}};
  ParameterVector p(std::vector<float>{1.0f, 0.0f});
  std::istringstream in(endpoint::encode_request(std::vector<double>{-3.0, 7.0}) + "\n" +
                        "{\"features\":[2.0, 0.0]}\nnot json\n{\"features\":[1.0]}\n");
  std::ostringstream out;
  CHECK(endpoint::serve(spec, p, in, out) == 2);
  std::istringstream lines(out.str());
  std::string l;
  std::getline(lines, l);
  CHECK(l == "{\"label\":0}");
  std::getline(lines, l);
  CHECK(l == "{\"label\":1}");
  std::getline(lines, l);
  CHECK(l.find("\"error\"") != std::string::npos);
  std::getline(lines, l);
  CHECK(l.find("\"error\"") != std::string::npos);
}

TEST_CASE("subprocess client") {
  endpoint::SubprocessClient client(
      {"sh", "-c", "while read l; do echo '{\"label\":3}'; done"});
  std::vector<double> x{1.0, 2.0};
  CHECK(client.query(x) == 3);
  CHECK(client.query(x) == 3);
  CHECK(client.queries() == 2);
  endpoint::SubprocessClient failing({"sh", "-c", "read l; echo '{\"error\":\"nope\"}'"});
  CHECK_THROWS(failing.query(x));
  CHECK(endpoint::split_command("  a  b\tc ") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("key-value config") {
  auto kv = ex::parse_key_values("# comment\nsynth.kind = proc-images\nsynth.n=100\nepochs = 3\n"
                                 "attack = lsb\nbits = 8\nepochs = 4\n");
  auto cfg = ex::config_from_key_values(kv);
  CHECK(cfg.synth.has_value());
  CHECK(cfg.synth->n == 100);
  CHECK(cfg.hp.epochs == 4);
  CHECK(cfg.attack == ex::AttackKind::Lsb);
  CHECK(cfg.lsb_bits == 8);
  CHECK_THROWS_AS(ex::parse_key_values("no equals sign\n"), FormatError);
  CHECK_THROWS(ex::config_from_key_values({{"colour", "blue"}}));
}

namespace {

ex::ExperimentConfig small_config(const std::string& out) {
  ex::ExperimentConfig cfg;
  desk::DeskDatasetSpec synth;
  synth.n = 200;
  cfg.synth = synth;
  cfg.hidden = {8};
  cfg.hp.epochs = 3;
  cfg.key = testing::test_key();
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("run_experiment artifacts") {
  testing::TempDir dir("exp");
  SUBCASE("benign run and the reject path") {
    auto cfg = small_config(dir / "benign");
    auto res = ex::run_experiment(cfg);
    CHECK(res.accepted);
    CHECK(std::filesystem::exists(res.model_path));
    CHECK(res.decode_report_path.empty());
    cfg.min_accuracy = 1.01;
    cfg.out_dir = dir / "rejected";
    auto rej = ex::run_experiment(cfg);
    CHECK_FALSE(rej.accepted);
    CHECK(io::load_model(rej.model_path).rejected);
  }
  SUBCASE("every attack reports its metrics") {
    for (auto attack : {ex::AttackKind::Lsb, ex::AttackKind::Corr, ex::AttackKind::Sign,
                        ex::AttackKind::Capacity}) {
      auto cfg = small_config(dir / ex::to_string(attack));
      cfg.attack = attack;
      cfg.secret_items = 1;
      auto res = ex::run_experiment(cfg);
      auto rep = nlohmann::json::parse(io::read_text(res.decode_report_path));
      CHECK(rep.contains("mean_mape"));
      if (attack != ex::AttackKind::Corr) CHECK(rep.contains("bit_error_rate"));
      CHECK(rep.contains("items"));
    }
  }
  SUBCASE("reruns are bit-identical") {
    auto a = small_config(dir / "a");
    auto b = small_config(dir / "b");
    a.attack = b.attack = ex::AttackKind::Sign;
    a.secret_items = b.secret_items = 1;
    auto ra = ex::run_experiment(a);
    auto rb = ex::run_experiment(b);
    CHECK(io::read_file(ra.model_path) == io::read_file(rb.model_path));
    CHECK(io::read_text(ra.train_report_path) == io::read_text(rb.train_report_path));
    CHECK(io::read_text(ra.decode_report_path) == io::read_text(rb.decode_report_path));
  }
}

TEST_CASE("strip_padding") {
  Vocabulary v(std::vector<std::string>{"pad", "a", "b"});
  CHECK(ex::strip_padding({"a", "pad", "b", "pad", "pad"}, v) ==
        std::vector<std::string>{"a", "pad", "b"});
}
