#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "mlmem/capacity.hpp"
#include "mlmem/codec.hpp"
#include "mlmem/deskdata.hpp"
#include "mlmem/io.hpp"
#include "mlmem/metrics.hpp"
#include "mlmem/model.hpp"
#include "mlmem/trainer.hpp"

namespace mlmem::experiment {

using KeyValues = std::map<std::string, std::string>;

// Plain "key = value" lines; '#' starts a comment. Later keys win.
KeyValues read_key_values(const std::string& path);
KeyValues parse_key_values(const std::string& text, const std::string& origin = "<string>");

enum class AttackKind { Benign, Lsb, Corr, Sign, Capacity };
std::string to_string(AttackKind a);
AttackKind attack_from_string(const std::string& name);

struct ExperimentConfig {
  // Exactly one of data_dir / synth.
  std::string data_dir;
  std::optional<desk::DeskDatasetSpec> synth;

  Architecture arch = Architecture::Mlp;
  std::vector<std::size_t> hidden{64};
  Hyperparameters hp;
  double l2 = 0.0;

  AttackKind attack = AttackKind::Benign;
  unsigned lsb_bits = 16;
  double lambda = 1.0;          // lambda_c or lambda_s
  std::size_t secret_items = 0; // images/documents to encode; 0 = fill capacity
  double tau = 0.85;
  std::size_t capacity_m = 0;   // 0 = as many as the payload needs
  capacity::GenVariant variant = capacity::GenVariant::PseudorandomImage;
  unsigned bits_per_input = 0;  // 0 = default for the class count
  SecretKey key;

  double min_accuracy = 0.0;
  std::string out_dir = "out";

  void validate() const;
};

// Recognised keys: data, synth.kind, synth.n, synth.classes, synth.height,
// synth.width, synth.dim, synth.vocab, arch, hidden, lr, epochs, batch, seed,
// optimizer, momentum, decay, l2, attack, bits, lambda, items, tau, m,
// variant, bits-per-input, key, min-accuracy, out.
ExperimentConfig config_from_key_values(const KeyValues& kv);

// Training and test data plus the vocabularies of a text task.
struct TaskData {
  LabeledDataset train;
  LabeledDataset test;
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const Vocabulary> public_vocab;
};

TaskData load_task(const ExperimentConfig& cfg);
ModelSpec model_spec_for(const ExperimentConfig& cfg, const LabeledDataset& train);

struct AttackOutcome {
  TrainReport report;
  // Everything the attacker needs to decode later (the payload.json sidecar).
  nlohmann::json payload = nlohmann::json::object();
  // Attack-specific training diagnostics (correlation, sign match, D_mal accuracy).
  nlohmann::json diagnostics = nlohmann::json::object();
};

AttackOutcome train_with_attack(const ExperimentConfig& cfg, const ModelSpec& spec,
                                const TaskData& task);

// Decodes the secret described by `payload` from a trained model and scores it
// against `truth`, the training set the secret was taken from. Capacity
// decoding goes through `query` (label-only access); when empty, the model is
// queried in process.
DecodeReport decode_attack(const ModelSpec& spec, const ParameterVector& params,
                           const nlohmann::json& payload, const TaskData& task,
                           const SecretKey& key, const capacity::QueryFn& query = {});

// Secret tokens of a decoded document with trailing padding (index 0) removed.
std::vector<std::string> strip_padding(std::vector<std::string> tokens, const Vocabulary& vocab);

nlohmann::json train_report_json(const TrainReport& report);

struct ExperimentResult {
  bool accepted = true;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::string model_path;
  std::string train_report_path;
  std::string decode_report_path;
  std::string payload_path;
};

// split -> attack-specific augmentation/regularizer -> train -> validate ->
// persist model, train_report.json and (for attacks) decode_report.json in
// cfg.out_dir. A model below min_accuracy is still written, marked rejected.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace mlmem::experiment
