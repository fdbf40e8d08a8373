#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlmem/codec.hpp"
#include "mlmem/dataset.hpp"
#include "mlmem/model.hpp"

namespace mlmem::io {

// "MLMEM1" model file:
//   magic "MLMEM1\0" (7 bytes), u8 version = 1, u32 LE metadata length,
//   UTF-8 JSON metadata, u64 LE parameter count, raw LE float32 values.
inline constexpr char kModelMagic[7] = {'M', 'L', 'M', 'E', 'M', '1', '\0'};
inline constexpr std::uint8_t kModelVersion = 1;

struct ModelFile {
  ModelSpec spec;
  ParameterVector params;
  nlohmann::json provenance = nlohmann::json::object();
  bool rejected = false;
};

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);
nlohmann::json layout_to_json(const Layout& layout);

Bytes encode_model(const ModelFile& model);
ModelFile decode_model(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");
void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

// CSV: one example per row, features then label in the last column.
void save_csv(const std::string& path, const LabeledDataset& data);
LabeledDataset load_csv(const std::string& path);

// Binary P5 PGM, maxval 255.
void save_pgm(const std::string& path, std::span<const std::uint8_t> pixels, std::size_t height,
              std::size_t width);
struct PgmImage {
  std::size_t height = 0;
  std::size_t width = 0;
  Bytes pixels;
};
PgmImage load_pgm(const std::string& path);

// <dir>/<label>/<name>.pgm ; label directory names are integers in [0, c).
// Files are ordered by file name across all label directories.
void save_pgm_dir(const std::string& dir, const LabeledDataset& data);
LabeledDataset load_pgm_dir(const std::string& dir, int classes = 0);

// <dir>/<label>/<name>.txt, BOW features against `vocab`.
void save_text_dir(const std::string& dir, const LabeledDataset& data);
LabeledDataset load_text_dir(const std::string& dir, std::shared_ptr<const Vocabulary> vocab,
                             int classes = 0);

enum class DataFormat { Csv, PgmDir, TextDir };
DataFormat data_format_from_string(const std::string& name);

LabeledDataset ingest(const std::string& path, DataFormat format,
                      std::shared_ptr<const Vocabulary> vocab = nullptr, int classes = 0);

// A desk data directory as written by synth-data: meta.json plus train/ and
// test/ in the format recorded there (and vocab.txt for text).
struct DataDir {
  LabeledDataset train;
  LabeledDataset test;
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const Vocabulary> public_vocab;
};

void save_data_dir(const std::string& dir, const LabeledDataset& train, const LabeledDataset& test,
                   const Vocabulary* public_vocab = nullptr);
DataDir load_data_dir(const std::string& dir);

}  // namespace mlmem::io
