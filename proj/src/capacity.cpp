#include "mlmem/capacity.hpp"

#include <algorithm>
#include <exception>
#include <sstream>

#include "mlmem/error.hpp"

namespace mlmem::capacity {

std::string to_string(GenVariant v) {
  switch (v) {
    case GenVariant::PseudorandomImage: return "pseudorandom-image";
    case GenVariant::SinglePixelImage: return "single-pixel-image";
    case GenVariant::VocabEnumerationText: return "vocab-enumeration-text";
    case GenVariant::PublicVocabSampledText: return "public-vocab-sampled-text";
  }
  return "?";
}

GenVariant gen_variant_from_string(const std::string& name) {
  for (auto v : {GenVariant::PseudorandomImage, GenVariant::SinglePixelImage,
                 GenVariant::VocabEnumerationText, GenVariant::PublicVocabSampledText}) {
    if (name == to_string(v)) return v;
  }
  throw ContractError("unknown generator variant '" + name + "'");
}

InputShape shape_of(const LabeledDataset& data) {
  InputShape s;
  s.kind = data.kind();
  s.dim = data.dim();
  s.classes = data.classes();
  s.image = data.image;
  if (data.text) s.vocab = data.text->vocab;
  return s;
}

namespace {

bool is_image_variant(GenVariant v) {
  return v == GenVariant::PseudorandomImage || v == GenVariant::SinglePixelImage;
}

std::size_t pair_count(std::size_t v) { return v * (v - 1) / 2; }

// Pair number k in lexicographic order over (a, b), a < b.
std::pair<std::size_t, std::size_t> nth_pair(std::size_t v, std::size_t k) {
  std::size_t a = 0;
  while (k >= v - 1 - a) {
    k -= v - 1 - a;
    ++a;
  }
  return {a, a + 1 + k};
}

}  // namespace

void CapacityConfig::validate(const InputShape& shape) const {
  if (bits_per_input == 0 || bits_per_input > max_bits_per_label(shape.classes)) {
    throw ContractError("bits per input must be in [1, " +
                        std::to_string(max_bits_per_label(shape.classes)) + "]");
  }
  if (is_image_variant(variant)) {
    if (shape.kind != DatasetKind::Image || !shape.image) {
      throw ContractError(to_string(variant) + " needs an image model");
    }
    return;
  }
  if (shape.kind != DatasetKind::Text || !shape.vocab) {
    throw ContractError(to_string(variant) + " needs a text model with a vocabulary");
  }
  if (variant == GenVariant::PublicVocabSampledText && (!aux_vocab || aux_vocab->size() == 0)) {
    throw ContractError("public-vocab-sampled-text needs an auxiliary vocabulary");
  }
  if (variant == GenVariant::VocabEnumerationText) {
    const std::size_t v = shape.vocab->size();
    const std::size_t max_m = v + pair_count(v);
    if (m > max_m) {
      throw CapacityError("vocabulary exhausted: enumeration supports at most m = " +
                          std::to_string(max_m));
    }
  }
}

unsigned default_bits_per_input(int classes) { return std::min(max_bits_per_label(classes), 4u); }

LabeledDataset generate_inputs(const InputShape& shape, const CapacityConfig& cfg,
                               std::size_t first, std::size_t count) {
  cfg.validate(shape);
  LabeledDataset out(shape.kind, shape.dim, shape.classes);
  out.image = shape.image;
  if (shape.kind == DatasetKind::Text) out.text = TextMeta{shape.vocab, {}};
  out.reserve(count);
  std::vector<double> x(shape.dim);
  const std::string domain = "capacity:" + to_string(cfg.variant) + ":";
  std::vector<std::size_t> order;
  if (cfg.variant == GenVariant::VocabEnumerationText) order = shape.vocab->lexicographic_order();

  for (std::size_t j = first; j < first + count; ++j) {
    PrfStream prf(cfg.key, domain + std::to_string(j));
    switch (cfg.variant) {
      case GenVariant::PseudorandomImage:
        for (auto& v : x) v = static_cast<double>(prf.next_byte()) / 255.0;
        out.add(x, 0);
        break;
      case GenVariant::SinglePixelImage: {
        std::fill(x.begin(), x.end(), 0.0);
        const std::size_t channels = shape.image->channels;
        const std::size_t pixel = j % shape.image->pixels();
        const double value = static_cast<double>(1 + prf.below(255)) / 255.0;
        for (std::size_t ch = 0; ch < channels; ++ch) x[pixel * channels + ch] = value;
        out.add(x, 0);
        break;
      }
      case GenVariant::VocabEnumerationText: {
        const auto& vocab = *shape.vocab;
        std::vector<std::string> doc;
        if (j < order.size()) {
          doc.push_back(vocab.token(order[j]));
        } else {
          const auto [a, b] = nth_pair(order.size(), j - order.size());
          doc = {vocab.token(order[a]), vocab.token(order[b])};
        }
        out.add(bag_of_words(doc, vocab), 0);
        out.text->documents.push_back(std::move(doc));
        break;
      }
      case GenVariant::PublicVocabSampledText: {
        std::vector<std::string> doc;
        for (std::size_t w = 0; w < kWordsPerSyntheticDoc; ++w) {
          doc.push_back(cfg.aux_vocab->token(prf.below(cfg.aux_vocab->size())));
        }
        out.add(bag_of_words(doc, *shape.vocab), 0);
        out.text->documents.push_back(std::move(doc));
        break;
      }
    }
  }
  return out;
}

SyntheticBatch synthesize_malicious_data(const InputShape& shape, const BitString& payload,
                                         const CapacityConfig& cfg) {
  cfg.validate(shape);
  const unsigned w = cfg.bits_per_input;
  if (cfg.m * w < payload.size()) {
    throw CapacityError("insufficient synthetic capacity: m*w = " + std::to_string(cfg.m * w) +
                        " < " + std::to_string(payload.size()) + " payload bits");
  }
  BitString bits = payload;
  PrfStream pad(cfg.key, "capacity-pad");
  while (bits.size() < cfg.m * w) bits.push_back(pad.next_byte() & 1u);

  SyntheticBatch batch;
  batch.variant = cfg.variant;
  batch.first_index = 0;
  batch.count = cfg.m;
  LabeledDataset inputs = generate_inputs(shape, cfg, 0, cfg.m);
  LabeledDataset labelled(shape.kind, shape.dim, shape.classes);
  labelled.image = inputs.image;
  labelled.text = inputs.text;
  labelled.reserve(cfg.m);
  for (std::size_t j = 0; j < cfg.m; ++j) {
    const BitString chunk(bits.begin() + static_cast<std::ptrdiff_t>(j * w),
                          bits.begin() + static_cast<std::ptrdiff_t>((j + 1) * w));
    labelled.add(inputs.features(j), bits_to_label(chunk, shape.classes));
  }
  batch.examples = std::move(labelled);
  return batch;
}

BitString image_payload(const LabeledDataset& data, std::size_t images) {
  if (images > data.size()) throw ContractError("not enough images for the payload");
  BitString bits;
  for (std::size_t i = 0; i < images; ++i) {
    for (auto g : pixel_to_gray(data, i)) append_bits(bits, quantize4(g), 4);
  }
  return bits;
}

BitString text_payload(const LabeledDataset& data, std::size_t docs, const Vocabulary& vocab,
                       std::size_t tokens_per_doc) {
  if (!data.text) throw ContractError("text payload needs documents");
  if (docs > data.size()) throw ContractError("not enough documents for the payload");
  const unsigned width = vocab.bit_width();
  BitString bits;
  for (std::size_t d = 0; d < docs; ++d) {
    const auto tokens = secret_tokens(data.text->documents[d], vocab, tokens_per_doc);
    for (std::size_t j = 0; j < tokens_per_doc; ++j) {
      append_bits(bits, j < tokens.size() ? *vocab.index_of(tokens[j]) : 0, width);
    }
  }
  return bits;
}

CapacityTrainResult capacity_train(const ModelSpec& spec, const LabeledDataset& train,
                                   const SyntheticBatch& synth, const Hyperparameters& hp,
                                   const LabeledDataset* test, const RegularizerSpec& reg) {
  CapacityTrainResult out;
  if (synth.examples.empty()) {
    out.report = sgd_train(spec, train, hp, reg, test);
    out.mal_accuracy = 1.0;
    return out;
  }
  out.report = sgd_train(spec, concat(train, synth.examples), hp, reg, test);
  out.report.train_accuracy = accuracy(spec, out.report.params, train);
  if (out.report.test_accuracy) out.report.gap = out.report.train_accuracy - *out.report.test_accuracy;
  out.mal_accuracy = accuracy(spec, out.report.params, synth.examples);
  return out;
}

QueryFn in_process_query(const ModelSpec& spec, const ParameterVector& params) {
  auto layout = std::make_shared<Layout>(layout_of(spec));
  auto ws = std::make_shared<Workspace>();
  auto p = std::make_shared<ParameterVector>(params);
  return [spec, layout, ws, p](std::span<const double> x) {
    return predict_label(spec, *layout, p->span(), x, *ws);
  };
}

BitString capacity_decode(const QueryFn& query, const InputShape& shape, const CapacityConfig& cfg,
                          std::size_t payload_bits) {
  const unsigned w = cfg.bits_per_input;
  const std::size_t points = (payload_bits + w - 1) / w;
  constexpr std::size_t kChunk = 256;
  const int mask = (1 << w) - 1;
  BitString bits;
  bits.reserve(points * w);
  for (std::size_t first = 0; first < points; first += kChunk) {
    const std::size_t count = std::min(kChunk, points - first);
    const LabeledDataset inputs = generate_inputs(shape, cfg, first, count);
    for (std::size_t j = 0; j < count; ++j) {
      const int label = query(inputs.features(j));
      append_bits(bits, static_cast<std::uint64_t>(label & mask), w);
    }
  }
  bits.resize(payload_bits);
  return bits;
}

std::vector<SizeSweepRow> capacity_size_sweep(const std::vector<std::size_t>& widths,
                                              const LabeledDataset& train,
                                              const LabeledDataset& test,
                                              const SyntheticBatch& synth,
                                              const Hyperparameters& hp, int jobs) {
  if (!std::is_sorted(widths.begin(), widths.end())) {
    throw ContractError("sweep widths must be ascending");
  }
  std::vector<SizeSweepRow> rows(widths.size());
  std::vector<std::exception_ptr> errors(widths.size());
  const int n = static_cast<int>(widths.size());
#pragma omp parallel for num_threads(std::max(jobs, 1)) schedule(dynamic, 1)
  for (int k = 0; k < n; ++k) {
    try {
      ModelSpec spec{Architecture::Mlp, train.dim(), train.classes(), {widths[k]}};
      const auto r = capacity_train(spec, train, synth, hp, &test);
      rows[k] = {widths[k], parameter_count(spec), *r.report.test_accuracy, r.mal_accuracy};
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

std::string size_sweep_to_csv(const std::vector<SizeSweepRow>& rows) {
  std::ostringstream os;
  os.precision(9);
  os << "width,params,test_accuracy,mal_accuracy\n";
  for (const auto& r : rows) {
    os << r.width << ',' << r.params << ',' << r.test_accuracy << ',' << r.mal_accuracy << '\n';
  }
  return os.str();
}

}  // namespace mlmem::capacity
