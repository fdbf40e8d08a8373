// Command-line front end: dataset generation, training, the four attacks,
// their decoders, defenses and sweeps.

#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mlmem/capacity.hpp"
#include "mlmem/deskdata.hpp"
#include "mlmem/endpoint.hpp"
#include "mlmem/error.hpp"
#include "mlmem/experiment.hpp"
#include "mlmem/io.hpp"
#include "mlmem/kernels.hpp"
#include "mlmem/lsb.hpp"
#include "mlmem/metrics.hpp"
#include "mlmem/rng.hpp"

using namespace mlmem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitRejected = 2;

// Flag values collected by name; merged over the --config file afterwards.
struct Flags {
  std::map<std::string, std::string> values;
  std::vector<std::pair<CLI::App*, std::string>> bound;

  void add(CLI::App* app, const std::string& key, const std::string& help) {
    app->add_option("--" + key, values[key], help);
    bound.emplace_back(app, key);
  }
};

struct Globals {
  std::string config;
  std::string seed;
  std::string out;
  std::string key;
};

experiment::KeyValues merged(const Globals& g, const Flags& flags, CLI::App* sub) {
  experiment::KeyValues kv;
  if (!g.config.empty()) kv = experiment::read_key_values(g.config);
  if (!g.seed.empty()) kv["seed"] = g.seed;
  if (!g.out.empty()) kv["out"] = g.out;
  if (!g.key.empty()) kv["key"] = g.key;
  for (const auto& [app, key] : flags.bound) {
    if (app == sub && sub->count("--" + key) > 0) kv[key] = flags.values.at(key);
  }
  return kv;
}

std::string need(const experiment::KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end() || it->second.empty()) throw ContractError("missing required option --" + key);
  return it->second;
}

std::string get(const experiment::KeyValues& kv, const std::string& key, const std::string& fallback) {
  const auto it = kv.find(key);
  return it == kv.end() || it->second.empty() ? fallback : it->second;
}

SecretKey resolve_key(const experiment::KeyValues& kv) {
  if (kv.count("key")) return SecretKey::from_hex(kv.at("key"));
  if (std::getenv(kKeyEnvVar)) return SecretKey::from_env();
  throw ContractError(std::string("a secret key is required: pass --key or set ") + kKeyEnvVar);
}

// Keys understood by the experiment config; everything else in a merged
// map belongs to the subcommand itself.
const std::vector<std::string> kExperimentKeys = {
    "data", "synth.kind", "synth.n", "synth.classes", "synth.height", "synth.width", "synth.dim",
    "synth.vocab", "synth.doc-length", "synth.seed", "arch", "hidden", "lr", "epochs", "batch",
    "seed", "optimizer", "momentum", "decay", "l2", "attack", "bits", "lambda", "items", "tau",
    "m", "variant", "bits-per-input", "key", "min-accuracy", "out"};

experiment::KeyValues experiment_subset(const experiment::KeyValues& kv) {
  experiment::KeyValues out;
  for (const auto& k : kExperimentKeys) {
    if (kv.count(k)) out[k] = kv.at(k);
  }
  return out;
}

void add_training_flags(CLI::App* app, Flags& f) {
  f.add(app, "data", "Data directory written by synth-data (or in the same layout)");
  f.add(app, "arch", "svm | lr | softmax | mlp | ova-svm");
  f.add(app, "hidden", "Comma-separated MLP hidden widths");
  f.add(app, "lr", "Learning rate");
  f.add(app, "epochs", "Training epochs");
  f.add(app, "batch", "Mini-batch size");
  f.add(app, "optimizer", "sgd | nesterov | adagrad");
  f.add(app, "momentum", "Nesterov momentum");
  f.add(app, "decay", "step | none");
  f.add(app, "l2", "L2 regularization strength");
  f.add(app, "min-accuracy", "Reject the model below this test accuracy");
}

int run_experiment_kv(experiment::KeyValues kv, const std::string& attack) {
  kv["attack"] = attack.empty() ? get(kv, "attack", "benign") : attack;
  if (kv["attack"] == "benign") {
    kv.erase("key");
  } else if (!kv.count("key")) {
    kv["key"] = resolve_key(kv).to_hex();
  }
  const auto cfg = experiment::config_from_key_values(experiment_subset(kv));
  const auto res = experiment::run_experiment(cfg);
  nlohmann::json j{{"model", res.model_path},
                   {"train_report", res.train_report_path},
                   {"train_accuracy", res.train_accuracy},
                   {"test_accuracy", res.test_accuracy},
                   {"accepted", res.accepted}};
  if (!res.decode_report_path.empty()) {
    j["decode_report"] = res.decode_report_path;
    j["payload"] = res.payload_path;
  }
  std::cout << j.dump(2) << "\n";
  if (!res.accepted) {
    std::cerr << "validation rejected the model: test accuracy " << res.test_accuracy
              << " below the floor " << cfg.min_accuracy << "\n";
    return kExitRejected;
  }
  return kExitOk;
}

experiment::TaskData load_data(const std::string& dir) {
  auto d = io::load_data_dir(dir);
  return {std::move(d.train), std::move(d.test), d.vocab, d.public_vocab};
}

std::vector<unsigned> parse_bits_list(const std::string& s) {
  std::vector<unsigned> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash != std::string::npos) {
      const unsigned lo = static_cast<unsigned>(std::stoul(item.substr(0, dash)));
      const unsigned hi = static_cast<unsigned>(std::stoul(item.substr(dash + 1)));
      for (unsigned b = lo; b <= hi; ++b) out.push_back(b);
    } else {
      out.push_back(static_cast<unsigned>(std::stoul(item)));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train models that memorize their training data, decode it, and defend."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "key = value configuration file; flags override it");
  app.add_option("--seed", g.seed, "Experiment seed");
  app.add_option("--out", g.out, "Output location");
  app.add_option("--key", g.key, std::string("Secret key, 64 hex chars (default: $") + kKeyEnvVar + ")");
  app.fallthrough();

  Flags f;
  std::map<CLI::App*, std::string> attack_of;

  auto* synth = app.add_subcommand("synth-data", "Generate a desk dataset with a train/test split");
  for (const char* k : {"kind", "n", "classes", "height", "width", "dim", "vocab", "doc-length"}) {
    f.add(synth, k, std::string("Dataset ") + k);
  }

  auto* train = app.add_subcommand("train", "Benign training");
  add_training_flags(train, f);
  attack_of[train] = "benign";

  auto* run = app.add_subcommand("run", "Run the experiment described by --config");
  attack_of[run] = "";

  auto* a_lsb = app.add_subcommand("attack-lsb", "Train, then hide the training data in low-order bits");
  add_training_flags(a_lsb, f);
  f.add(a_lsb, "bits", "Bits per parameter (1..23)");
  attack_of[a_lsb] = "lsb";

  auto* a_corr = app.add_subcommand("attack-corr", "Train with the correlation regularizer");
  add_training_flags(a_corr, f);
  f.add(a_corr, "lambda", "Correlation strength");
  f.add(a_corr, "items", "Images/documents to encode (0 = fill the model)");
  f.add(a_corr, "tau", "Text decoding correlation threshold");
  attack_of[a_corr] = "corr";

  auto* a_sign = app.add_subcommand("attack-sign", "Train with the sign penalty");
  add_training_flags(a_sign, f);
  f.add(a_sign, "lambda", "Sign penalty strength");
  f.add(a_sign, "items", "Images/documents to encode (0 = fill the model)");
  attack_of[a_sign] = "sign";

  auto* a_cap = app.add_subcommand("attack-capacity", "Train on data augmented with label-encoded synthetic inputs");
  add_training_flags(a_cap, f);
  f.add(a_cap, "m", "Synthetic points (0 = as many as the payload needs)");
  f.add(a_cap, "variant", "pseudorandom-image | single-pixel-image | vocab-enumeration-text | public-vocab-sampled-text");
  f.add(a_cap, "bits-per-input", "Payload bits per synthetic label");
  f.add(a_cap, "items", "Images/documents to encode");
  attack_of[a_cap] = "capacity";

  std::map<CLI::App*, std::string> decoder_of;
  for (const char* name : {"lsb", "corr", "sign", "capacity"}) {
    auto* d = app.add_subcommand(std::string("decode-") + name, std::string("Decode a ") + name + "-attack model");
    f.add(d, "model", "Model file");
    f.add(d, "payload", "payload.json written by the attack");
    f.add(d, "data", "Data directory holding the original training set (for scoring)");
    decoder_of[d] = name;
  }
  auto* d_cap = app.get_subcommand("decode-capacity");
  f.add(d_cap, "endpoint", "Command serving the model over line-delimited JSON");
  f.add(d_cap, "len", "Payload bits to read (default: from the payload file)");

  auto* serve = app.add_subcommand("serve", "Answer {\"features\":[...]} lines on stdin with {\"label\":k}");
  f.add(serve, "model", "Model file");

  auto* scrub = app.add_subcommand("defend-scrub", "Replace low-order parameter bits with random bits");
  f.add(scrub, "model", "Input model");
  f.add(scrub, "bits", "Bits to scrub per parameter");

  auto* inspect = app.add_subcommand("inspect-params", "Parameter moments and histogram");
  f.add(inspect, "model", "Model file");
  f.add(inspect, "bins", "Histogram bins");
  f.add(inspect, "reference", "Optional second model for a KS comparison");

  auto* sweep_lsb = app.add_subcommand("sweep-lsb", "Test accuracy vs. randomized low-order bits");
  f.add(sweep_lsb, "model", "Model file");
  f.add(sweep_lsb, "data", "Data directory");
  f.add(sweep_lsb, "bits", "Comma list or ranges, e.g. 0,1-23");
  f.add(sweep_lsb, "trials", "Random draws per width");

  auto* sweep_cap = app.add_subcommand("sweep-capacity-size", "Capacity attack over MLP hidden widths");
  add_training_flags(sweep_cap, f);
  f.add(sweep_cap, "widths", "Ascending comma list of hidden widths");
  f.add(sweep_cap, "m", "Synthetic points");
  f.add(sweep_cap, "items", "Images/documents to encode");
  f.add(sweep_cap, "variant", "Synthesis variant");
  f.add(sweep_cap, "bits-per-input", "Payload bits per synthetic label");
  f.add(sweep_cap, "jobs", "Widths trained in parallel");

  auto* evaluate = app.add_subcommand("evaluate", "Accuracy of a model on a data directory");
  f.add(evaluate, "model", "Model file");
  f.add(evaluate, "data", "Data directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const auto kv = merged(g, f, sub);

    if (sub == synth) {
      desk::DeskDatasetSpec spec;
      spec.kind = desk::desk_kind_from_string(need(kv, "kind"));
      spec.n = std::stoul(get(kv, "n", std::to_string(spec.n)));
      spec.classes = std::stoi(get(kv, "classes", std::to_string(spec.classes)));
      spec.height = std::stoul(get(kv, "height", std::to_string(spec.height)));
      spec.width = std::stoul(get(kv, "width", std::to_string(spec.width)));
      spec.dim = std::stoul(get(kv, "dim", std::to_string(spec.dim)));
      spec.vocab_size = std::stoul(get(kv, "vocab", std::to_string(spec.vocab_size)));
      spec.doc_length = std::stoul(get(kv, "doc-length", std::to_string(spec.doc_length)));
      spec.seed = std::stoull(get(kv, "seed", "1"));
      const auto data = desk::synth_data(spec);
      const std::string out = need(kv, "out");
      io::save_data_dir(out, data.train, data.test, data.public_vocab.get());
      std::cout << nlohmann::json{{"out", out}, {"train", data.train.size()}, {"test", data.test.size()}}.dump()
                << "\n";
      return kExitOk;
    }

    if (attack_of.count(sub)) return run_experiment_kv(kv, attack_of[sub]);

    if (decoder_of.count(sub)) {
      const auto model = io::load_model(need(kv, "model"));
      auto payload = nlohmann::json::parse(io::read_text(need(kv, "payload")));
      if (payload.value("attack", "") != decoder_of[sub]) {
        throw ContractError("payload file describes a '" + payload.value("attack", "?") +
                            "' attack, not '" + decoder_of[sub] + "'");
      }
      const auto task = load_data(need(kv, "data"));
      const SecretKey key = resolve_key(kv);
      DecodeReport rep;
      if (sub == d_cap && kv.count("endpoint")) {
        if (kv.count("len")) payload["payload_bits"] = std::stoul(kv.at("len"));
        endpoint::SubprocessClient client(endpoint::split_command(kv.at("endpoint")));
        rep = experiment::decode_attack(model.spec, model.params, payload, task, key,
                                        [&](std::span<const double> x) { return client.query(x); });
      } else {
        if (kv.count("len")) payload["payload_bits"] = std::stoul(kv.at("len"));
        rep = experiment::decode_attack(model.spec, model.params, payload, task, key);
      }
      const std::string out = get(kv, "out", "out");
      io::write_text(out + "/decode_report.json", rep.to_json() + "\n");
      std::cout << rep.to_json() << "\n";
      return kExitOk;
    }

    if (sub == serve) {
      const auto model = io::load_model(need(kv, "model"));
      std::ios::sync_with_stdio(false);
      endpoint::serve(model.spec, model.params, std::cin, std::cout);
      return kExitOk;
    }

    if (sub == scrub) {
      auto model = io::load_model(need(kv, "model"));
      const unsigned bits = static_cast<unsigned>(std::stoul(need(kv, "bits")));
      const std::uint64_t seed = derive_seed(std::stoull(get(kv, "seed", "1")), "scrub");
      model.params = lsb_scrub(model.params, bits, seed);
      model.provenance["scrubbed_bits"] = bits;
      io::save_model(need(kv, "out"), model);
      return kExitOk;
    }

    if (sub == inspect) {
      const auto model = io::load_model(need(kv, "model"));
      const auto layout = layout_of(model.spec);
      const auto stats = param_stats(model.params, std::stoul(get(kv, "bins", "201")), &layout);
      auto j = nlohmann::json::parse(stats.to_json());
      if (kv.count("reference")) {
        j["ks_vs_reference"] = ks_statistic(model.params, io::load_model(kv.at("reference")).params);
      }
      if (kv.count("out")) io::write_text(kv.at("out"), stats.histogram_csv());
      j.erase("histogram");
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }

    if (sub == sweep_lsb) {
      const auto model = io::load_model(need(kv, "model"));
      const auto task = load_data(need(kv, "data"));
      const auto rows = lsb::lsb_accuracy_sweep(model.spec, model.params, task.test,
                                                parse_bits_list(get(kv, "bits", "0-23")),
                                                derive_seed(std::stoull(get(kv, "seed", "1")), "sweep"),
                                                std::stoi(get(kv, "trials", "1")));
      const std::string csv = lsb::sweep_to_csv(rows);
      if (kv.count("out")) io::write_text(kv.at("out"), csv);
      std::cout << csv;
      return kExitOk;
    }

    if (sub == sweep_cap) {
      auto ekv = experiment_subset(kv);
      ekv.erase("out");
      ekv["attack"] = "capacity";
      ekv["key"] = resolve_key(kv).to_hex();
      const auto cfg = experiment::config_from_key_values(ekv);
      const auto task = experiment::load_task(cfg);
      auto shape = capacity::shape_of(task.train);
      if (task.vocab) shape.vocab = task.vocab;
      const std::size_t items = cfg.secret_items > 0 ? cfg.secret_items : 1;
      const BitString payload = task.train.kind() == DatasetKind::Image
                                    ? capacity::image_payload(task.train, items)
                                    : capacity::text_payload(task.train, items, *task.vocab);
      capacity::CapacityConfig cc;
      cc.bits_per_input = cfg.bits_per_input ? cfg.bits_per_input : capacity::default_bits_per_input(shape.classes);
      cc.m = cfg.capacity_m ? cfg.capacity_m : (payload.size() + cc.bits_per_input - 1) / cc.bits_per_input;
      cc.variant = cfg.variant;
      cc.key = cfg.key;
      cc.aux_vocab = task.public_vocab;
      const auto synth_batch = capacity::synthesize_malicious_data(shape, payload, cc);
      std::vector<std::size_t> widths;
      {
        std::stringstream ss(get(kv, "widths", "16,32,64,128"));
        std::string w;
        while (std::getline(ss, w, ',')) widths.push_back(std::stoul(w));
      }
      const auto rows = capacity::capacity_size_sweep(widths, task.train, task.test, synth_batch, cfg.hp,
                                                      std::stoi(get(kv, "jobs", "1")));
      const std::string csv = capacity::size_sweep_to_csv(rows);
      if (kv.count("out")) io::write_text(kv.at("out"), csv);
      std::cout << csv;
      return kExitOk;
    }

    if (sub == evaluate) {
      const auto model = io::load_model(need(kv, "model"));
      const auto task = load_data(need(kv, "data"));
      nlohmann::json j{{"train_accuracy", accuracy(model.spec, model.params, task.train)},
                       {"test_accuracy", accuracy(model.spec, model.params, task.test)},
                       {"rejected", model.rejected}};
      std::cout << j.dump(2) << "\n";
      return kExitOk;
    }
    throw ContractError("unhandled subcommand");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
