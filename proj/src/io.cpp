#include "mlmem/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mlmem/error.hpp"

namespace fs = std::filesystem;

namespace mlmem::io {

nlohmann::json spec_to_json(const ModelSpec& spec) {
  return {{"arch", to_string(spec.arch)},
          {"input_dim", spec.input_dim},
          {"classes", spec.classes},
          {"hidden", spec.hidden}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.arch = architecture_from_string(j.at("arch").get<std::string>());
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.classes = j.at("classes").get<int>();
  if (j.contains("hidden")) s.hidden = j["hidden"].get<std::vector<std::size_t>>();
  s.validate();
  return s;
}

nlohmann::json layout_to_json(const Layout& layout) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : layout.layers) {
    arr.push_back({{"rows", l.rows},
                   {"cols", l.cols},
                   {"weight_offset", l.weight_offset},
                   {"bias_offset", l.bias_offset},
                   {"has_bias", l.has_bias}});
  }
  return arr;
}

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> b, std::size_t off, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(b[off + i]) << (8 * i);
  return v;
}

}  // namespace

Bytes encode_model(const ModelFile& model) {
  nlohmann::json meta;
  meta["spec"] = spec_to_json(model.spec);
  meta["layout"] = layout_to_json(layout_of(model.spec));
  meta["provenance"] = model.provenance;
  meta["rejected"] = model.rejected;
  const std::string text = meta.dump();
  if (model.params.size() != parameter_count(model.spec)) {
    throw ContractError("parameter count does not match the model spec");
  }
  Bytes out(kModelMagic, kModelMagic + sizeof(kModelMagic));
  out.push_back(kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  put_u64(out, model.params.size());
  for (float f : model.params.values()) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    put_u32(out, u);
  }
  return out;
}

ModelFile decode_model(std::span<const std::uint8_t> bytes, const std::string& origin) {
  auto need = [&](std::size_t off, std::size_t n, const char* what) {
    if (bytes.size() < off + n) throw FormatError(origin, bytes.size(), std::string("truncated ") + what);
  };
  need(0, 8, "header");
  if (std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw FormatError(origin, 0, "bad magic");
  }
  if (bytes[7] != kModelVersion) throw FormatError(origin, 7, "unsupported version");
  need(8, 4, "metadata length");
  const auto meta_len = static_cast<std::size_t>(get_le(bytes, 8, 4));
  need(12, meta_len, "metadata");
  ModelFile model;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(meta_len));
    model.spec = spec_from_json(meta.at("spec"));
  } catch (const std::exception& e) {
    throw FormatError(origin, 12, std::string("bad metadata: ") + e.what());
  }
  if (meta.contains("provenance")) model.provenance = meta["provenance"];
  model.rejected = meta.value("rejected", false);
  const std::size_t count_off = 12 + meta_len;
  need(count_off, 8, "parameter count");
  const std::uint64_t count = get_le(bytes, count_off, 8);
  if (count != parameter_count(model.spec)) {
    throw FormatError(origin, count_off, "parameter count does not match the model spec");
  }
  const std::size_t data_off = count_off + 8;
  need(data_off, count * 4, "parameters");
  if (bytes.size() != data_off + count * 4) {
    throw FormatError(origin, data_off + count * 4, "trailing bytes");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto u = static_cast<std::uint32_t>(get_le(bytes, data_off + 4 * i, 4));
    std::memcpy(&values[i], &u, 4);
  }
  model.params = ParameterVector(std::move(values));
  return model;
}

void save_model(const std::string& path, const ModelFile& model) {
  write_file(path, encode_model(model));
}

ModelFile load_model(const std::string& path) { return decode_model(read_file(path), path); }

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::string read_text(const std::string& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_csv(const std::string& path, const LabeledDataset& data) {
  std::string out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features(i)) {
      out += format_double(v);
      out += ',';
    }
    out += std::to_string(data.label(i));
    out += '\n';
  }
  write_text(path, out);
}

LabeledDataset load_csv(const std::string& path) {
  const std::string text = read_text(path);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      std::vector<double> fields;
      std::size_t f = 0;
      while (true) {
        const std::size_t comma = line.find(',', f);
        const std::string_view cell = line.substr(f, comma == std::string_view::npos ? line.npos : comma - f);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
          throw FormatError(path, pos + f, "not a number: '" + std::string(cell) + "'");
        }
        fields.push_back(v);
        if (comma == std::string_view::npos) break;
        f = comma + 1;
      }
      if (fields.size() < 2) throw FormatError(path, pos, "row needs features and a label");
      const double lab = fields.back();
      if (lab < 0 || lab != static_cast<double>(static_cast<int>(lab))) {
        throw FormatError(path, pos, "label must be a non-negative integer");
      }
      fields.pop_back();
      if (!rows.empty() && fields.size() != rows.front().size()) {
        throw FormatError(path, pos, "row has " + std::to_string(fields.size()) +
                                         " features, expected " + std::to_string(rows.front().size()));
      }
      rows.push_back(std::move(fields));
      labels.push_back(static_cast<int>(lab));
    }
    pos = end + 1;
  }
  if (rows.empty()) throw FormatError(path, 0, "no rows");
  const int classes = std::max(2, *std::max_element(labels.begin(), labels.end()) + 1);
  LabeledDataset data(DatasetKind::Tabular, rows.front().size(), classes);
  data.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) data.add(rows[i], labels[i]);
  return data;
}

void save_pgm(const std::string& path, std::span<const std::uint8_t> pixels, std::size_t height,
              std::size_t width) {
  if (pixels.size() != height * width) throw ContractError("pixel count does not match image size");
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  write_file(path, out);
}

PgmImage load_pgm(const std::string& path) {
  const Bytes b = read_file(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < b.size()) {
      if (b[pos] == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else if (std::isspace(b[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    std::size_t v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) v = v * 10 + (b[pos++] - '0');
    if (pos == start) throw FormatError(path, start, std::string("expected ") + what);
    return v;
  };
  if (b.size() < 2 || b[0] != 'P' || b[1] != '5') throw FormatError(path, 0, "not a binary PGM (P5)");
  pos = 2;
  PgmImage img;
  img.width = read_int("width");
  img.height = read_int("height");
  const std::size_t maxval = read_int("maxval");
  if (maxval != 255) throw FormatError(path, pos, "only maxval 255 is supported");
  if (pos >= b.size() || !std::isspace(b[pos])) throw FormatError(path, pos, "missing separator");
  ++pos;
  if (b.size() - pos != img.width * img.height) {
    throw FormatError(path, pos, "expected " + std::to_string(img.width * img.height) +
                                     " pixel bytes, found " + std::to_string(b.size() - pos));
  }
  img.pixels.assign(b.begin() + static_cast<std::ptrdiff_t>(pos), b.end());
  return img;
}

namespace {

std::string example_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%07zu%s", i, ext);
  return buf;
}

struct LabeledFile {
  std::string name;
  std::string path;
  int label;
};

std::vector<LabeledFile> list_labeled(const std::string& dir, const std::string& ext, int classes) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir);
  std::vector<LabeledFile> files;
  for (const auto& sub : fs::directory_iterator(dir)) {
    if (!sub.is_directory()) continue;
    const std::string name = sub.path().filename().string();
    int label = -1;
    const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), label);
    if (ec != std::errc() || ptr != name.data() + name.size() || label < 0 ||
        (classes > 0 && label >= classes)) {
      throw FormatError(sub.path().string(), 0, "unknown label directory '" + name + "'");
    }
    for (const auto& f : fs::directory_iterator(sub.path())) {
      if (f.is_regular_file() && f.path().extension() == ext) {
        files.push_back({f.path().filename().string(), f.path().string(), label});
      }
    }
  }
  std::sort(files.begin(), files.end(), [](const LabeledFile& a, const LabeledFile& b) {
    return a.name != b.name ? a.name < b.name : a.label < b.label;
  });
  if (files.empty()) throw Error("no " + ext + " files under " + dir);
  return files;
}

int resolve_classes(const std::vector<LabeledFile>& files, int classes) {
  if (classes > 0) return classes;
  int mx = 0;
  for (const auto& f : files) mx = std::max(mx, f.label);
  return std::max(2, mx + 1);
}

}  // namespace

void save_pgm_dir(const std::string& dir, const LabeledDataset& data) {
  if (!data.image || data.image->channels != 1) throw ContractError("PGM export needs grayscale images");
  for (std::size_t i = 0; i < data.size(); ++i) {
    Bytes px(data.dim());
    const auto x = data.features(i);
    for (std::size_t p = 0; p < px.size(); ++p) {
      px[p] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * x[p]), 0L, 255L));
    }
    save_pgm(dir + "/" + std::to_string(data.label(i)) + "/" + example_name(i, ".pgm"), px,
             data.image->height, data.image->width);
  }
}

LabeledDataset load_pgm_dir(const std::string& dir, int classes) {
  const auto files = list_labeled(dir, ".pgm", classes);
  std::optional<LabeledDataset> data;
  for (const auto& f : files) {
    const PgmImage img = load_pgm(f.path);
    if (!data) {
      data.emplace(DatasetKind::Image, img.width * img.height, resolve_classes(files, classes));
      data->image = ImageMeta{img.height, img.width, 1};
      data->reserve(files.size());
    } else if (img.height != data->image->height || img.width != data->image->width) {
      throw FormatError(f.path, 0, "image size differs from the first image");
    }
    std::vector<double> x(img.pixels.size());
    for (std::size_t p = 0; p < x.size(); ++p) x[p] = img.pixels[p] / 255.0;
    data->add(x, f.label);
  }
  return std::move(*data);
}

void save_text_dir(const std::string& dir, const LabeledDataset& data) {
  if (!data.text) throw ContractError("text export needs documents");
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::string body;
    for (const auto& t : data.text->documents[i]) {
      if (!body.empty()) body += ' ';
      body += t;
    }
    body += '\n';
    write_text(dir + "/" + std::to_string(data.label(i)) + "/" + example_name(i, ".txt"), body);
  }
}

LabeledDataset load_text_dir(const std::string& dir, std::shared_ptr<const Vocabulary> vocab,
                             int classes) {
  if (!vocab) throw ContractError("text ingestion needs a vocabulary");
  const auto files = list_labeled(dir, ".txt", classes);
  LabeledDataset data(DatasetKind::Text, vocab->size(), resolve_classes(files, classes));
  data.text = TextMeta{vocab, {}};
  data.reserve(files.size());
  for (const auto& f : files) {
    auto tokens = tokenize(read_text(f.path));
    data.add(bag_of_words(tokens, *vocab), f.label);
    data.text->documents.push_back(std::move(tokens));
  }
  return data;
}

DataFormat data_format_from_string(const std::string& name) {
  if (name == "csv") return DataFormat::Csv;
  if (name == "pgm-dir") return DataFormat::PgmDir;
  if (name == "text-dir") return DataFormat::TextDir;
  throw ContractError("unknown data format '" + name + "'");
}

LabeledDataset ingest(const std::string& path, DataFormat format,
                      std::shared_ptr<const Vocabulary> vocab, int classes) {
  switch (format) {
    case DataFormat::Csv: {
      auto d = load_csv(path);
      if (classes > 0 && classes != d.classes()) {
        LabeledDataset widened(d.kind(), d.dim(), classes);
        for (std::size_t i = 0; i < d.size(); ++i) widened.add(d.features(i), d.label(i));
        return widened;
      }
      return d;
    }
    case DataFormat::PgmDir: return load_pgm_dir(path, classes);
    case DataFormat::TextDir: return load_text_dir(path, std::move(vocab), classes);
  }
  throw ContractError("unknown data format");
}

void save_data_dir(const std::string& dir, const LabeledDataset& train, const LabeledDataset& test,
                   const Vocabulary* public_vocab) {
  fs::create_directories(dir);
  nlohmann::json meta;
  meta["kind"] = to_string(train.kind());
  meta["classes"] = train.classes();
  meta["dim"] = train.dim();
  meta["train_count"] = train.size();
  meta["test_count"] = test.size();
  switch (train.kind()) {
    case DatasetKind::Image:
      meta["format"] = "pgm-dir";
      meta["height"] = train.image->height;
      meta["width"] = train.image->width;
      save_pgm_dir(dir + "/train", train);
      save_pgm_dir(dir + "/test", test);
      break;
    case DatasetKind::Text:
      meta["format"] = "text-dir";
      meta["vocab"] = "vocab.txt";
      train.text->vocab->save(dir + "/vocab.txt");
      if (public_vocab) {
        meta["public_vocab"] = "public_vocab.txt";
        public_vocab->save(dir + "/public_vocab.txt");
      }
      save_text_dir(dir + "/train", train);
      save_text_dir(dir + "/test", test);
      break;
    case DatasetKind::Tabular:
      meta["format"] = "csv";
      save_csv(dir + "/train.csv", train);
      save_csv(dir + "/test.csv", test);
      break;
  }
  write_text(dir + "/meta.json", meta.dump(2) + "\n");
}

DataDir load_data_dir(const std::string& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text(dir + "/meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(dir + "/meta.json", 0, e.what());
  }
  DataDir out;
  const int classes = meta.at("classes").get<int>();
  const DataFormat format = data_format_from_string(meta.at("format").get<std::string>());
  if (format == DataFormat::TextDir) {
    out.vocab = std::make_shared<const Vocabulary>(Vocabulary::load(dir + "/" + meta.at("vocab").get<std::string>()));
    if (meta.contains("public_vocab")) {
      out.public_vocab = std::make_shared<const Vocabulary>(
          Vocabulary::load(dir + "/" + meta["public_vocab"].get<std::string>()));
    }
  }
  const std::string suffix = format == DataFormat::Csv ? ".csv" : "";
  out.train = ingest(dir + "/train" + suffix, format, out.vocab, classes);
  out.test = ingest(dir + "/test" + suffix, format, out.vocab, classes);
  return out;
}

}  // namespace mlmem::io
