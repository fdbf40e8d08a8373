#include "mlmem/deskdata.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mlmem/error.hpp"
#include "mlmem/rng.hpp"

namespace mlmem::desk {

std::string to_string(DeskKind kind) {
  switch (kind) {
    case DeskKind::GaussTabular: return "gauss-tabular";
    case DeskKind::ProcImages: return "proc-images";
    case DeskKind::SynthText: return "synth-text";
  }
  return "?";
}

DeskKind desk_kind_from_string(const std::string& name) {
  for (auto k : {DeskKind::GaussTabular, DeskKind::ProcImages, DeskKind::SynthText}) {
    if (name == to_string(k)) return k;
  }
  throw ContractError("unknown desk dataset kind '" + name + "'");
}

void DeskDatasetSpec::validate() const {
  if (n < 4) throw ContractError("desk dataset needs at least 4 examples");
  if (classes < 2) throw ContractError("desk dataset needs at least 2 classes");
  switch (kind) {
    case DeskKind::GaussTabular:
      if (dim == 0) throw ContractError("gauss-tabular needs d > 0");
      break;
    case DeskKind::ProcImages:
      if (classes > kShapeTypes) {
        throw ContractError("proc-images supports at most " + std::to_string(kShapeTypes) + " classes");
      }
      if (height < 8 || width < 8) throw ContractError("proc-images needs at least 8x8 pixels");
      break;
    case DeskKind::SynthText:
      if (vocab_size < static_cast<std::size_t>(classes) * 4) {
        throw ContractError("synth-text vocabulary too small for the class count");
      }
      if (doc_length == 0) throw ContractError("synth-text needs a positive document length");
      break;
  }
}

namespace {

LabeledDataset gauss_tabular(const DeskDatasetSpec& spec) {
  Rng rng(spec.seed, "data");
  std::vector<std::vector<double>> centers(spec.classes, std::vector<double>(spec.dim));
  for (auto& c : centers) {
    for (auto& v : c) v = 3.0 * rng.normal();
  }
  LabeledDataset data(DatasetKind::Tabular, spec.dim, spec.classes);
  data.reserve(spec.n);
  std::vector<double> x(spec.dim);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(spec.classes));
    for (std::size_t k = 0; k < spec.dim; ++k) x[k] = centers[label][k] + rng.normal();
    data.add(x, label);
  }
  return data;
}

// Coverage in [0, 1] of pixel (r, c) by shape `type` centred at (cy, cx)
// with radius-like size s.
double shape_mask(int type, double r, double c, double cy, double cx, double s) {
  const double dy = r - cy;
  const double dx = c - cx;
  const double t = std::max(1.0, s / 3.0);  // stroke width
  switch (type) {
    case 0: return std::hypot(dy, dx) <= s ? 1.0 : 0.0;                              // disc
    case 1: return std::abs(dy) <= t && std::abs(dx) <= s ? 1.0 : 0.0;                 // horizontal bar
    case 2: return std::abs(dx) <= t && std::abs(dy) <= s ? 1.0 : 0.0;                 // vertical bar
    case 3: return std::abs(std::hypot(dy, dx) - s) <= 0.9 ? 1.0 : 0.0;                // ring
    case 4: {                                                                           // square outline
      const double m = std::max(std::abs(dy), std::abs(dx));
      return std::abs(m - s) <= 0.9 ? 1.0 : 0.0;
    }
    case 5: return (std::abs(dy) <= 0.9 && std::abs(dx) <= s) || (std::abs(dx) <= 0.9 && std::abs(dy) <= s) ? 1.0 : 0.0;
    case 6: return std::abs(dy - dx) <= 1.0 && std::abs(dx) <= s ? 1.0 : 0.0;          // diagonal
    case 7: return std::abs(dy + dx) <= 1.0 && std::abs(dx) <= s ? 1.0 : 0.0;          // anti-diagonal
    case 8: return std::abs(dy) <= s && std::abs(dx) <= s ? 1.0 : 0.0;                 // filled square
    case 9: return dy <= s && dy >= -s && std::abs(dx) <= (dy + s) / 2.0 ? 1.0 : 0.0;  // triangle
    default: return 0.0;
  }
}

LabeledDataset proc_images(const DeskDatasetSpec& spec) {
  Rng rng(spec.seed, "data");
  const std::size_t h = spec.height;
  const std::size_t w = spec.width;
  LabeledDataset data(DatasetKind::Image, h * w, spec.classes);
  data.image = ImageMeta{h, w, 1};
  data.reserve(spec.n);
  std::vector<double> x(h * w);
  const double hs = static_cast<double>(std::min(h, w));
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.classes)));
    const double s = rng.uniform(0.2 * hs, 0.35 * hs);
    const double cy = (static_cast<double>(h) - 1.0) / 2.0 + rng.uniform(-0.12, 0.12) * static_cast<double>(h);
    const double cx = (static_cast<double>(w) - 1.0) / 2.0 + rng.uniform(-0.12, 0.12) * static_cast<double>(w);
    const double bg = rng.uniform(10.0, 80.0);
    const double fg = rng.uniform(150.0, 250.0);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        const double m = shape_mask(label, static_cast<double>(r), static_cast<double>(c), cy, cx, s);
        const double v = bg + m * (fg - bg) + 12.0 * rng.normal();
        x[r * w + c] = static_cast<double>(std::clamp(std::lround(v), 0L, 255L)) / 255.0;
      }
    }
    data.add(x, label);
  }
  return data;
}

std::vector<std::string> make_words(Rng& rng, std::size_t count, const std::set<std::string>& avoid) {
  static const char* consonants = "bcdfghjklmnprstvwz";
  static const char* vowels = "aeiou";
  std::set<std::string> seen(avoid);
  std::vector<std::string> words;
  while (words.size() < count) {
    const std::size_t syllables = 2 + rng.below(2);
    std::string word;
    for (std::size_t k = 0; k < syllables; ++k) {
      word += consonants[rng.below(18)];
      word += vowels[rng.below(5)];
    }
    if (seen.insert(word).second) words.push_back(word);
  }
  return words;
}

// Each token is drawn from the class's topic words with probability
// kTopicShare, otherwise from a Zipf-like background shared by all classes.
constexpr double kTopicShare = 0.4;

DeskData synth_text(const DeskDatasetSpec& spec) {
  Rng rng(spec.seed, "data");
  const auto words = make_words(rng, spec.vocab_size, {});
  auto vocab = std::make_shared<const Vocabulary>(words);

  const std::size_t v = spec.vocab_size;
  std::vector<double> background(v);
  double total = 0.0;
  for (std::size_t k = 0; k < v; ++k) {
    total += 1.0 / (static_cast<double>(k) + 50.0);
    background[k] = total;
  }
  for (auto& q : background) q /= total;

  // Disjoint topic blocks spread over the vocabulary.
  const std::size_t topic_size = v / (2 * static_cast<std::size_t>(spec.classes));
  std::vector<std::size_t> perm(v);
  for (std::size_t k = 0; k < v; ++k) perm[k] = k;
  rng.shuffle(perm);
  auto topic_word = [&](int c, std::size_t k) { return perm[static_cast<std::size_t>(c) * topic_size + k]; };

  LabeledDataset data(DatasetKind::Text, v, spec.classes);
  data.text = TextMeta{vocab, {}};
  data.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.classes)));
    const auto len = static_cast<std::size_t>(
        std::llround(rng.uniform(0.5, 1.5) * static_cast<double>(spec.doc_length)));
    std::vector<std::string> doc;
    doc.reserve(len);
    for (std::size_t t = 0; t < std::max<std::size_t>(len, 1); ++t) {
      if (rng.uniform() < kTopicShare) {
        doc.push_back(words[topic_word(label, rng.below(topic_size))]);
      } else {
        const auto it = std::lower_bound(background.begin(), background.end(), rng.uniform());
        doc.push_back(words[std::min<std::size_t>(static_cast<std::size_t>(it - background.begin()), v - 1)]);
      }
    }
    data.add(bag_of_words(doc, *vocab), label);
    data.text->documents.push_back(std::move(doc));
  }

  // Public vocabulary: 90% of the training words plus as many new ones as
  // were dropped, shuffled.
  Rng prng(spec.seed, "public-vocab");
  std::vector<std::string> pub = words;
  prng.shuffle(pub);
  pub.resize(v - v / 10);
  const auto extra = make_words(prng, v / 10, std::set<std::string>(words.begin(), words.end()));
  pub.insert(pub.end(), extra.begin(), extra.end());
  prng.shuffle(pub);

  DeskData out;
  out.all = std::move(data);
  out.vocab = vocab;
  out.public_vocab = std::make_shared<const Vocabulary>(std::move(pub));
  return out;
}

}  // namespace

DeskData synth_data(const DeskDatasetSpec& spec) {
  spec.validate();
  DeskData out;
  switch (spec.kind) {
    case DeskKind::GaussTabular: out.all = gauss_tabular(spec); break;
    case DeskKind::ProcImages: out.all = proc_images(spec); break;
    case DeskKind::SynthText: out = synth_text(spec); break;
  }
  auto split = split_dataset(out.all, kTrainFraction, spec.seed);
  out.train = std::move(split.train);
  out.test = std::move(split.test);
  return out;
}

}  // namespace mlmem::desk
