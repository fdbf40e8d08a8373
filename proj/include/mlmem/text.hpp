#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mlmem {

// Lowercases ASCII letters and splits on every byte that is not an ASCII
// letter/digit. Bytes >= 0x80 are kept inside tokens so UTF-8 words survive.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<std::size_t> index_of(std::string_view token) const;
  bool contains(std::string_view token) const { return index_of(token).has_value(); }

  // ceil(log2 |V|), at least 1.
  unsigned bit_width() const;

  // Token indices ordered lexicographically by token text.
  std::vector<std::size_t> lexicographic_order() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

unsigned bit_width_for(std::size_t alphabet_size);

// Count vector over the vocabulary; out-of-vocabulary tokens are dropped.
std::vector<double> bag_of_words(const std::vector<std::string>& tokens, const Vocabulary& vocab);

}  // namespace mlmem
