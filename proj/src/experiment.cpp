#include "mlmem/experiment.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "mlmem/corr.hpp"
#include "mlmem/error.hpp"
#include "mlmem/lsb.hpp"
#include "mlmem/sign.hpp"

namespace fs = std::filesystem;

namespace mlmem::experiment {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ContractError("config key '" + key + "': '" + value + "' is not a valid number");
  }
  return out;
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<std::size_t>(key, trim(item)));
  return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw FormatError(origin, line_start, "expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw FormatError(origin, line_start, "empty key");
    kv[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) { return parse_key_values(io::read_text(path), path); }

std::string to_string(AttackKind a) {
  switch (a) {
    case AttackKind::Benign: return "benign";
    case AttackKind::Lsb: return "lsb";
    case AttackKind::Corr: return "corr";
    case AttackKind::Sign: return "sign";
    case AttackKind::Capacity: return "capacity";
  }
  return "?";
}

AttackKind attack_from_string(const std::string& name) {
  for (auto a : {AttackKind::Benign, AttackKind::Lsb, AttackKind::Corr, AttackKind::Sign,
                 AttackKind::Capacity}) {
    if (name == to_string(a)) return a;
  }
  throw ContractError("unknown attack '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (data_dir.empty() == !synth.has_value()) {
    throw ContractError("exactly one of 'data' and 'synth.kind' must be given");
  }
  if (synth) synth->validate();
  if (attack == AttackKind::Lsb) lsb::LsbConfig{lsb_bits, false}.validate();
  if ((attack == AttackKind::Corr || attack == AttackKind::Sign) && !(lambda >= 0.0)) {
    throw ContractError("lambda must be non-negative");
  }
  if (out_dir.empty()) throw ContractError("output directory must be set");
}

ExperimentConfig config_from_key_values(const KeyValues& kv) {
  ExperimentConfig cfg;
  desk::DeskDatasetSpec synth;
  bool have_synth = false;
  bool synth_seed = false;
  for (const auto& [key, value] : kv) {
    if (key == "data") cfg.data_dir = value;
    else if (key == "synth.kind") { synth.kind = desk::desk_kind_from_string(value); have_synth = true; }
    else if (key == "synth.n") synth.n = parse_number<std::size_t>(key, value);
    else if (key == "synth.classes") synth.classes = parse_number<int>(key, value);
    else if (key == "synth.height") synth.height = parse_number<std::size_t>(key, value);
    else if (key == "synth.width") synth.width = parse_number<std::size_t>(key, value);
    else if (key == "synth.dim") synth.dim = parse_number<std::size_t>(key, value);
    else if (key == "synth.vocab") synth.vocab_size = parse_number<std::size_t>(key, value);
    else if (key == "synth.doc-length") synth.doc_length = parse_number<std::size_t>(key, value);
    else if (key == "synth.seed") { synth.seed = parse_number<std::uint64_t>(key, value); synth_seed = true; }
    else if (key == "arch") cfg.arch = architecture_from_string(value);
    else if (key == "hidden") cfg.hidden = parse_list(key, value);
    else if (key == "lr") cfg.hp.learning_rate = parse_number<double>(key, value);
    else if (key == "epochs") cfg.hp.epochs = parse_number<int>(key, value);
    else if (key == "batch") cfg.hp.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "seed") cfg.hp.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "optimizer") cfg.hp.optimizer = optimizer_from_string(value);
    else if (key == "momentum") cfg.hp.momentum = parse_number<double>(key, value);
    else if (key == "decay") {
      if (value == "step") cfg.hp.decay = step_decay_schedule();
      else if (value == "none") cfg.hp.decay.clear();
      else throw ContractError("decay must be 'step' or 'none'");
    }
    else if (key == "l2") cfg.l2 = parse_number<double>(key, value);
    else if (key == "attack") cfg.attack = attack_from_string(value);
    else if (key == "bits") cfg.lsb_bits = parse_number<unsigned>(key, value);
    else if (key == "lambda") cfg.lambda = parse_number<double>(key, value);
    else if (key == "items") cfg.secret_items = parse_number<std::size_t>(key, value);
    else if (key == "tau") cfg.tau = parse_number<double>(key, value);
    else if (key == "m") cfg.capacity_m = parse_number<std::size_t>(key, value);
    else if (key == "variant") cfg.variant = capacity::gen_variant_from_string(value);
    else if (key == "bits-per-input") cfg.bits_per_input = parse_number<unsigned>(key, value);
    else if (key == "key") cfg.key = SecretKey::from_hex(value);
    else if (key == "min-accuracy") cfg.min_accuracy = parse_number<double>(key, value);
    else if (key == "out") cfg.out_dir = value;
    else throw ContractError("unknown config key '" + key + "'");
  }
  if (have_synth) {
    if (!synth_seed) synth.seed = cfg.hp.seed;
    cfg.synth = synth;
  }
  if (!kv.count("variant") && have_synth && synth.kind == desk::DeskKind::SynthText) {
    cfg.variant = capacity::GenVariant::VocabEnumerationText;
  }
  return cfg;
}

TaskData load_task(const ExperimentConfig& cfg) {
  TaskData t;
  if (cfg.synth) {
    auto d = desk::synth_data(*cfg.synth);
    t.train = std::move(d.train);
    t.test = std::move(d.test);
    t.vocab = d.vocab;
    t.public_vocab = d.public_vocab;
  } else {
    auto d = io::load_data_dir(cfg.data_dir);
    t.train = std::move(d.train);
    t.test = std::move(d.test);
    t.vocab = d.vocab;
    t.public_vocab = d.public_vocab;
  }
  return t;
}

ModelSpec model_spec_for(const ExperimentConfig& cfg, const LabeledDataset& train) {
  ModelSpec spec{cfg.arch, train.dim(), train.classes(), {}};
  if (cfg.arch == Architecture::Mlp) spec.hidden = cfg.hidden;
  spec.validate();
  return spec;
}

std::vector<std::string> strip_padding(std::vector<std::string> tokens, const Vocabulary& vocab) {
  const std::string& pad = vocab.token(0);
  while (!tokens.empty() && tokens.back() == pad) tokens.pop_back();
  return tokens;
}

nlohmann::json train_report_json(const TrainReport& r) {
  nlohmann::json j;
  j["epoch_loss"] = r.epoch_loss;
  j["epoch_penalty"] = r.epoch_penalty;
  j["train_accuracy"] = r.train_accuracy;
  if (r.test_accuracy) j["test_accuracy"] = *r.test_accuracy;
  if (r.gap) j["gap"] = *r.gap;
  return j;
}

namespace {

std::vector<Bytes> gray_images(const LabeledDataset& data, std::size_t count) {
  std::vector<Bytes> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(pixel_to_gray(data, i));
  return out;
}

RegularizerSpec base_regularizer(const ExperimentConfig& cfg) {
  RegularizerSpec reg;
  if (cfg.l2 > 0.0) reg.add(L2{cfg.l2});
  return reg;
}

void refresh_accuracy(const ModelSpec& spec, TrainReport& r, const TaskData& task) {
  r.train_accuracy = accuracy(spec, r.params, task.train);
  r.test_accuracy = accuracy(spec, r.params, task.test);
  r.gap = r.train_accuracy - *r.test_accuracy;
}

std::size_t pick(std::size_t requested, std::size_t fallback) {
  return requested > 0 ? requested : fallback;
}

const Vocabulary& need_vocab(const TaskData& task) {
  if (!task.vocab) throw ContractError("text attack needs a vocabulary");
  return *task.vocab;
}

capacity::CapacityConfig capacity_config(const nlohmann::json& p, const SecretKey& key,
                                         const TaskData& task) {
  capacity::CapacityConfig c;
  c.m = p.at("m").get<std::size_t>();
  c.bits_per_input = p.at("bits_per_input").get<unsigned>();
  c.variant = capacity::gen_variant_from_string(p.at("variant").get<std::string>());
  c.key = key;
  c.aux_vocab = task.public_vocab;
  return c;
}

// Secret tokens are indexed into the vocabulary the attacker synthesizes from:
// the public one for the public-vocab variant, the training one otherwise.
const Vocabulary& payload_vocab(capacity::GenVariant variant, const TaskData& task) {
  if (variant == capacity::GenVariant::PublicVocabSampledText) {
    if (!task.public_vocab) throw ContractError("public-vocab variant needs a public vocabulary");
    return *task.public_vocab;
  }
  return need_vocab(task);
}

capacity::InputShape task_shape(const TaskData& task) {
  auto shape = capacity::shape_of(task.train);
  if (task.vocab) shape.vocab = task.vocab;
  return shape;
}

void score_document(ItemMetrics& m, const std::vector<std::string>& decoded,
                    const std::vector<std::string>& truth, const Vocabulary& vocab) {
  const auto pr = precision_recall(decoded, truth);
  m.precision = pr.precision;
  m.recall = pr.recall;
  bool any = false;
  for (const auto& t : decoded) any = any || vocab.contains(t);
  m.cosine = any ? cosine_similarity_bow(decoded, truth, vocab) : 0.0;
}

}  // namespace

AttackOutcome train_with_attack(const ExperimentConfig& cfg, const ModelSpec& spec,
                                const TaskData& task) {
  const RegularizerSpec base = base_regularizer(cfg);
  const std::size_t ell = parameter_count(spec);
  const bool image = task.train.kind() == DatasetKind::Image;
  const bool text = task.train.kind() == DatasetKind::Text;
  AttackOutcome out;
  out.payload["attack"] = to_string(cfg.attack);
  out.payload["kind"] = mlmem::to_string(task.train.kind());

  switch (cfg.attack) {
    case AttackKind::Benign:
      out.report = sgd_train(spec, task.train, cfg.hp, base, &task.test);
      break;

    case AttackKind::Lsb: {
      out.report = sgd_train(spec, task.train, cfg.hp, base, &task.test);
      const lsb::LsbConfig lc{cfg.lsb_bits, false};
      const std::size_t cap = lsb::capacity_bits(ell, lc.bits);
      if (cap <= lsb::kFrameHeaderBits + 8) throw CapacityError("capacity too small for a framed payload");
      const std::size_t max_bits = cap - lsb::kFrameHeaderBits;
      const auto secret = extract_secret_bitstring(task.train, max_bits, cfg.key);
      const auto framed = lsb::frame_payload(bits_to_bytes(secret.bits));
      out.report.params = lsb::lsb_encode(out.report.params, framed, lc).params;
      refresh_accuracy(spec, out.report, task);
      out.payload["bits"] = lc.bits;
      out.payload["max_bits"] = max_bits;
      out.payload["payload_bits"] = framed.size();
      out.payload["items"] = secret.example_count;
      out.payload["raw_bytes"] = secret.raw_bytes;
      break;
    }

    case AttackKind::Corr: {
      if (image) {
        const std::size_t k = pick(cfg.secret_items, corr::image_capacity(task.train, ell));
        const auto secret = corr::image_secret(task.train, k);
        const auto r = corr::corr_encode_train(spec, task.train, cfg.hp, cfg.lambda, secret.values,
                                               &task.test, base);
        out.report = r.report;
        out.diagnostics["abs_correlation"] = r.abs_correlation;
        out.payload["items"] = k;
        out.payload["pixels"] = task.train.image->pixels();
      } else if (text) {
        const TokenVectorTable table(cfg.key, task.vocab);
        const std::size_t k = pick(cfg.secret_items, ell / corr::kDocumentBudget);
        const auto secret = corr::text_secret(task.train, k, table);
        const auto r = corr::corr_encode_train(spec, task.train, cfg.hp, cfg.lambda, secret.values,
                                               &task.test, base);
        out.report = r.report;
        out.diagnostics["abs_correlation"] = r.abs_correlation;
        out.payload["items"] = k;
        out.payload["tokens_per_doc"] = kTokensPerDocument;
        out.payload["tau"] = cfg.tau;
      } else {
        throw ContractError("correlation attack needs image or text data");
      }
      out.payload["lambda"] = cfg.lambda;
      break;
    }

    case AttackKind::Sign: {
      sign::SignSecret secret;
      if (image) {
        const std::size_t per = task.train.image->pixels() * 8;
        const std::size_t k = pick(cfg.secret_items, std::min(task.train.size(), ell / per));
        if (k == 0) throw CapacityError("model too small for one image");
        secret = sign::sign_secret_from_images(gray_images(task.train, k));
        out.payload["pixels"] = task.train.image->pixels();
      } else if (text) {
        const auto& vocab = need_vocab(task);
        const std::size_t per = kTokensPerDocument * vocab.bit_width();
        const std::size_t k = pick(cfg.secret_items, std::min(task.train.size(), ell / per));
        if (k == 0) throw CapacityError("model too small for one document");
        std::vector<std::vector<std::string>> docs(task.train.text->documents.begin(),
                                                   task.train.text->documents.begin() + static_cast<std::ptrdiff_t>(k));
        secret = sign::sign_secret_from_text(docs, vocab);
        out.payload["tokens_per_doc"] = kTokensPerDocument;
      } else {
        throw ContractError("sign attack needs image or text data");
      }
      if (secret.signs.size() > ell) throw CapacityError("secret has more signs than the model has parameters");
      const auto r = sign::sign_encode_train(spec, task.train, cfg.hp, cfg.lambda, secret, &task.test, base);
      out.report = r.report;
      out.diagnostics["match_rate"] = r.match_rate;
      out.payload["items"] = secret.items;
      out.payload["nbits"] = secret.signs.size();
      out.payload["lambda"] = cfg.lambda;
      break;
    }

    case AttackKind::Capacity: {
      const auto shape = task_shape(task);
      const std::size_t k = pick(cfg.secret_items, 1);
      BitString payload;
      if (image) payload = capacity::image_payload(task.train, k);
      else if (text) payload = capacity::text_payload(task.train, k, payload_vocab(cfg.variant, task));
      else throw ContractError("capacity attack needs image or text data");
      capacity::CapacityConfig cc;
      cc.bits_per_input = cfg.bits_per_input > 0 ? cfg.bits_per_input
                                                 : capacity::default_bits_per_input(shape.classes);
      cc.m = pick(cfg.capacity_m, (payload.size() + cc.bits_per_input - 1) / cc.bits_per_input);
      cc.variant = cfg.variant;
      cc.key = cfg.key;
      cc.aux_vocab = task.public_vocab;
      const auto synth = capacity::synthesize_malicious_data(shape, payload, cc);
      const auto r = capacity::capacity_train(spec, task.train, synth, cfg.hp, &task.test, base);
      out.report = r.report;
      out.diagnostics["mal_accuracy"] = r.mal_accuracy;
      out.payload["items"] = k;
      out.payload["m"] = cc.m;
      out.payload["bits_per_input"] = cc.bits_per_input;
      out.payload["variant"] = capacity::to_string(cc.variant);
      out.payload["payload_bits"] = payload.size();
      if (image) out.payload["pixels"] = task.train.image->pixels();
      else out.payload["tokens_per_doc"] = kTokensPerDocument;
      break;
    }
  }
  return out;
}

DecodeReport decode_attack(const ModelSpec& spec, const ParameterVector& params,
                           const nlohmann::json& payload, const TaskData& task,
                           const SecretKey& key, const capacity::QueryFn& query) {
  DecodeReport rep;
  rep.attack = payload.at("attack").get<std::string>();
  const AttackKind attack = attack_from_string(rep.attack);
  const LabeledDataset& truth = task.train;
  const bool image = truth.kind() == DatasetKind::Image;

  switch (attack) {
    case AttackKind::Benign:
      throw ContractError("nothing to decode from a benign model");

    case AttackKind::Lsb: {
      const lsb::LsbConfig lc{payload.at("bits").get<unsigned>(), false};
      const auto expected = lsb::frame_payload(
          bits_to_bytes(extract_secret_bitstring(truth, payload.at("max_bits").get<std::size_t>(), key).bits));
      const auto read = lsb::lsb_decode(params, lc, expected.size());
      rep.bit_error_rate = 1.0 - bit_match_rate(read, expected);
      const auto framed = lsb::unframe_payload(read);
      rep.checksum_ok = framed.has_value();
      if (!framed) break;
      const auto examples = recover_secret_examples(bytes_to_bits(*framed), key);
      for (std::size_t i = 0; i < examples.labels.size(); ++i) {
        ItemMetrics m;
        if (image) {
          m.mape = mape(pixel_to_gray(examples.features[i], *examples.image), pixel_to_gray(truth, i));
        } else if (truth.text) {
          score_document(m, examples.documents[i], truth.text->documents[i], *truth.text->vocab);
        } else {
          m.mape = mape(examples.features[i], truth.features(i));
        }
        rep.items.push_back(m);
      }
      break;
    }

    case AttackKind::Corr: {
      const std::size_t k = payload.at("items").get<std::size_t>();
      if (image) {
        const std::size_t px = payload.at("pixels").get<std::size_t>();
        const auto t = gray_images(truth, k);
        const auto imgs = corr::corr_decode_image(params, std::vector<std::size_t>(k, px), &t);
        for (const auto& img : imgs) rep.items.push_back({img.mape, {}, {}, {}});
      } else {
        const auto& vocab = need_vocab(task);
        const TokenVectorTable table(key, task.vocab);
        corr::TextDecodeConfig tc;
        tc.tau = payload.value("tau", corr::kDefaultTau);
        tc.tokens_per_doc = payload.value("tokens_per_doc", kTokensPerDocument);
        tc.documents = k;
        const auto docs = corr::corr_decode_text(params, table, tc);
        for (std::size_t i = 0; i < k; ++i) {
          ItemMetrics m;
          score_document(m, docs[i].accepted(), secret_tokens(truth.text->documents[i], vocab), vocab);
          rep.items.push_back(m);
        }
      }
      break;
    }

    case AttackKind::Sign: {
      const std::size_t k = payload.at("items").get<std::size_t>();
      const std::size_t nbits = payload.at("nbits").get<std::size_t>();
      const auto bits = sign::sign_decode(params, nbits);
      if (image) {
        const auto t = gray_images(truth, k);
        rep.bit_error_rate = 1.0 - bit_match_rate(bits, sign::sign_secret_from_images(t).bits());
        const auto imgs = sign::bits_to_images(bits, payload.at("pixels").get<std::size_t>());
        for (std::size_t i = 0; i < k; ++i) rep.items.push_back({mape(imgs[i], t[i]), {}, {}, {}});
      } else {
        const auto& vocab = need_vocab(task);
        const std::size_t tpd = payload.value("tokens_per_doc", kTokensPerDocument);
        std::vector<std::vector<std::string>> tdocs(truth.text->documents.begin(),
                                                    truth.text->documents.begin() + static_cast<std::ptrdiff_t>(k));
        rep.bit_error_rate = 1.0 - bit_match_rate(bits, sign::sign_secret_from_text(tdocs, vocab, tpd).bits());
        const auto docs = sign::bits_to_documents(bits, vocab, tpd);
        for (std::size_t i = 0; i < k; ++i) {
          ItemMetrics m;
          score_document(m, strip_padding(docs[i], vocab), secret_tokens(tdocs[i], vocab, tpd), vocab);
          rep.items.push_back(m);
        }
      }
      break;
    }

    case AttackKind::Capacity: {
      const auto shape = task_shape(task);
      const auto cc = capacity_config(payload, key, task);
      const std::size_t k = payload.at("items").get<std::size_t>();
      const std::size_t nbits = payload.at("payload_bits").get<std::size_t>();
      const auto q = query ? query : capacity::in_process_query(spec, params);
      const auto bits = capacity::capacity_decode(q, shape, cc, nbits);
      if (image) {
        const std::size_t px = payload.at("pixels").get<std::size_t>();
        rep.bit_error_rate = 1.0 - bit_match_rate(bits, capacity::image_payload(truth, k));
        for (std::size_t i = 0; i < k; ++i) {
          Bytes img(px);
          for (std::size_t p = 0; p < px; ++p) {
            img[p] = dequantize4(static_cast<std::uint8_t>(read_bits(bits, (i * px + p) * 4, 4)));
          }
          rep.items.push_back({mape(img, pixel_to_gray(truth, i)), {}, {}, {}});
        }
      } else {
        const auto& vocab = payload_vocab(cc.variant, task);
        const std::size_t tpd = payload.value("tokens_per_doc", kTokensPerDocument);
        rep.bit_error_rate = 1.0 - bit_match_rate(bits, capacity::text_payload(truth, k, vocab, tpd));
        const auto docs = sign::bits_to_documents(bits, vocab, tpd);
        for (std::size_t i = 0; i < k; ++i) {
          ItemMetrics m;
          score_document(m, strip_padding(docs[i], vocab),
                         secret_tokens(truth.text->documents[i], vocab, tpd), need_vocab(task));
          rep.items.push_back(m);
        }
      }
      break;
    }
  }
  rep.finalize();
  return rep;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const TaskData task = load_task(cfg);
  const ModelSpec spec = model_spec_for(cfg, task.train);
  const AttackOutcome outcome = train_with_attack(cfg, spec, task);

  ExperimentResult res;
  res.train_accuracy = outcome.report.train_accuracy;
  res.test_accuracy = outcome.report.test_accuracy.value_or(0.0);
  res.accepted = res.test_accuracy >= cfg.min_accuracy;

  fs::create_directories(cfg.out_dir);
  io::ModelFile mf;
  mf.spec = spec;
  mf.params = outcome.report.params;
  mf.rejected = !res.accepted;
  mf.provenance = {{"seed", cfg.hp.seed},
                   {"epochs", cfg.hp.epochs},
                   {"learning_rate", cfg.hp.learning_rate},
                   {"batch_size", cfg.hp.batch_size},
                   {"optimizer", to_string(cfg.hp.optimizer)},
                   {"train_examples", task.train.size()}};
  res.model_path = cfg.out_dir + "/model.mlmem";
  io::save_model(res.model_path, mf);

  nlohmann::json tr = train_report_json(outcome.report);
  tr["attack"] = to_string(cfg.attack);
  tr["accepted"] = res.accepted;
  tr["min_accuracy"] = cfg.min_accuracy;
  tr["diagnostics"] = outcome.diagnostics;
  res.train_report_path = cfg.out_dir + "/train_report.json";
  io::write_text(res.train_report_path, tr.dump(2) + "\n");

  if (cfg.attack != AttackKind::Benign) {
    res.payload_path = cfg.out_dir + "/payload.json";
    io::write_text(res.payload_path, outcome.payload.dump(2) + "\n");
    const auto rep = decode_attack(spec, outcome.report.params, outcome.payload, task, cfg.key);
    res.decode_report_path = cfg.out_dir + "/decode_report.json";
    io::write_text(res.decode_report_path, rep.to_json() + "\n");
  }
  return res;
}

}  // namespace mlmem::experiment
