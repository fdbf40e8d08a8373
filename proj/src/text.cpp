#include "mlmem/text.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "mlmem/error.hpp"

namespace mlmem {

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw ContractError("vocabulary contains an empty token");
    if (!index_.emplace(tokens_[i], i).second) {
      throw ContractError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocabulary " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

unsigned bit_width_for(std::size_t alphabet_size) {
  unsigned w = 0;
  while (w < 64 && (std::size_t{1} << w) < alphabet_size) ++w;
  return std::max(w, 1u);
}

unsigned Vocabulary::bit_width() const { return bit_width_for(tokens_.size()); }

std::vector<std::size_t> Vocabulary::lexicographic_order() const {
  std::vector<std::size_t> order(tokens_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return tokens_[a] < tokens_[b]; });
  return order;
}

std::vector<double> bag_of_words(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::vector<double> counts(vocab.size(), 0.0);
  for (const auto& t : tokens) {
    if (auto idx = vocab.index_of(t)) counts[*idx] += 1.0;
  }
  return counts;
}

}  // namespace mlmem
