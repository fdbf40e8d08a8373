#pragma once

#include <unistd.h>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mlmem/codec.hpp"
#include "mlmem/dataset.hpp"
#include "mlmem/rng.hpp"

namespace testing {

inline mlmem::SecretKey test_key(std::uint8_t fill = 7) {
  std::array<std::uint8_t, 32> b{};
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<std::uint8_t>(fill + i * 13);
  return mlmem::SecretKey(b);
}

inline mlmem::BitString random_bits(std::size_t n, std::uint64_t seed) {
  mlmem::Rng rng(seed);
  mlmem::BitString out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.below(2));
  return out;
}

inline std::vector<double> random_reals(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                        double hi = 1.0) {
  mlmem::Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.uniform(lo, hi);
  return out;
}

inline mlmem::LabeledDataset tabular(const std::vector<std::vector<double>>& xs,
                                     const std::vector<int>& ys, int classes) {
  mlmem::LabeledDataset d(mlmem::DatasetKind::Tabular, xs.front().size(), classes);
  for (std::size_t i = 0; i < xs.size(); ++i) d.add(xs[i], ys[i]);
  return d;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("mlmem-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
