#include "mlmem/corr.hpp"

#include <algorithm>
#include <cmath>

#include "mlmem/error.hpp"
#include "mlmem/kernels.hpp"
#include "mlmem/metrics.hpp"

namespace mlmem::corr {

SecretPayload image_secret(const LabeledDataset& data, std::size_t count) {
  if (data.kind() != DatasetKind::Image || !data.image) {
    throw ContractError("image secret needs an image dataset");
  }
  if (count == 0 || count > data.size()) throw ContractError("invalid number of secret images");
  SecretPayload p;
  p.encoding = SecretEncoding::PixelValues;
  p.example_count = count;
  for (std::size_t i = 0; i < count; ++i) {
    for (auto g : pixel_to_gray(data, i)) p.values.push_back(static_cast<double>(g));
  }
  return p;
}

std::size_t image_capacity(const LabeledDataset& data, std::size_t param_count) {
  if (!data.image) throw ContractError("image capacity needs image metadata");
  return std::min(data.size(), param_count / data.image->pixels());
}

SecretPayload text_secret(const LabeledDataset& data, std::size_t doc_count,
                          const TokenVectorTable& table, std::size_t tokens_per_doc) {
  if (!data.text) throw ContractError("text secret needs documents");
  if (doc_count == 0 || doc_count > data.size()) throw ContractError("invalid number of documents");
  SecretPayload p;
  p.encoding = SecretEncoding::TokenVectorReals;
  p.example_count = doc_count;
  p.values.reserve(doc_count * tokens_per_doc * table.dim());
  for (std::size_t d = 0; d < doc_count; ++d) {
    const auto tokens = secret_tokens(data.text->documents[d], table.vocab(), tokens_per_doc);
    for (std::size_t j = 0; j < tokens_per_doc; ++j) {
      if (j < tokens.size()) {
        const auto v = table.vector(*table.vocab().index_of(tokens[j]));
        p.values.insert(p.values.end(), v.begin(), v.end());
      } else {
        p.values.insert(p.values.end(), table.dim(), 0.0);
      }
    }
  }
  return p;
}

CorrTrainResult corr_encode_train(const ModelSpec& spec, const LabeledDataset& data,
                                  const Hyperparameters& hp, double lambda_c,
                                  const std::vector<double>& secret, const LabeledDataset* test,
                                  const RegularizerSpec& base) {
  RegularizerSpec reg = base;
  reg.add(Correlation{lambda_c, secret});
  CorrTrainResult out{sgd_train(spec, data, hp, reg, test), 0.0};
  const auto prefix = out.report.params.span().first(secret.size());
  out.abs_correlation = std::abs(pearson(std::vector<double>(prefix.begin(), prefix.end()), secret));
  return out;
}

std::vector<double> minmax_scale(std::span<const double> segment) {
  if (segment.empty()) throw ContractError("empty segment");
  const auto [mn, mx] = std::minmax_element(segment.begin(), segment.end());
  if (*mx == *mn) throw ContractError("constant segment");
  const double lo = *mn;
  const double range = *mx - *mn;
  std::vector<double> out(segment.size());
  for (std::size_t i = 0; i < segment.size(); ++i) out[i] = 255.0 * (segment[i] - lo) / range;
  return out;
}

namespace {

Bytes round_pixels(std::span<const double> v) {
  Bytes out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v[i]), 0L, 255L));
  }
  return out;
}

}  // namespace

std::vector<DecodedImage> corr_decode_image(const ParameterVector& params,
                                            const std::vector<std::size_t>& segment_sizes,
                                            const std::vector<Bytes>* truth) {
  std::size_t total = 0;
  for (auto s : segment_sizes) total += s;
  if (total > params.size()) throw ContractError("image segments exceed the parameter count");
  if (truth && truth->size() != segment_sizes.size()) {
    throw ContractError("ground truth count does not match segment count");
  }
  std::vector<DecodedImage> out;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < segment_sizes.size(); ++k) {
    const auto raw = params.span().subspan(offset, segment_sizes[k]);
    offset += segment_sizes[k];
    auto scaled = minmax_scale(std::vector<double>(raw.begin(), raw.end()));
    DecodedImage img;
    if (truth) {
      const Bytes& t = (*truth)[k];
      std::vector<double> tv(t.begin(), t.end());
      std::vector<double> inverted(scaled.size());
      for (std::size_t i = 0; i < scaled.size(); ++i) inverted[i] = 255.0 - scaled[i];
      const double direct_err = mape(scaled, tv);
      const double inverted_err = mape(inverted, tv);
      if (inverted_err < direct_err) {
        scaled = std::move(inverted);
        img.inverted = true;
        img.mape = inverted_err;
      } else {
        img.mape = direct_err;
      }
    }
    img.pixels = round_pixels(scaled);
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<std::string> DecodedDocument::accepted() const {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (t.token) out.push_back(*t.token);
  }
  return out;
}

std::vector<DecodedDocument> corr_decode_text(const ParameterVector& params,
                                              const TokenVectorTable& table,
                                              const TextDecodeConfig& cfg) {
  const std::size_t dim = table.dim();
  const std::size_t slots = cfg.documents * cfg.tokens_per_doc;
  if (slots * dim > params.size()) {
    throw ContractError("text decode needs " + std::to_string(slots * dim) +
                        " parameters, model has " + std::to_string(params.size()));
  }
  const auto prefix = params.span().first(slots * dim);
  const std::vector<double> segments(prefix.begin(), prefix.end());
  std::vector<kernels::SlotMatch> matches(slots);
  kernels::omp::correlation_search(segments, table.matrix(), dim, matches);

  double positive = 0.0;
  double negative = 0.0;
  for (const auto& m : matches) {
    positive += m.best_corr;
    negative -= m.worst_corr;
  }
  const bool inverted = negative > positive;

  std::vector<DecodedDocument> docs(cfg.documents);
  for (std::size_t s = 0; s < slots; ++s) {
    const auto& m = matches[s];
    const std::size_t idx = inverted ? m.worst : m.best;
    const double c = inverted ? -m.worst_corr : m.best_corr;
    DecodedToken tok;
    tok.correlation = c;
    if (c >= cfg.tau) tok.token = table.vocab().token(idx);
    docs[s / cfg.tokens_per_doc].tokens.push_back(std::move(tok));
  }
  return docs;
}

}  // namespace mlmem::corr
