#include "rct/tokenizer.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace rct {
namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' ||
         (static_cast<unsigned char>(c) & 0x80) != 0;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

double numeric_value(std::string_view word) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc() || ptr != word.data() + word.size()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return value;
}

}  // namespace

std::vector<WordToken> split_words(std::string_view text) {
  std::vector<WordToken> out;
  std::uint32_t line = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      ++i;
      continue;
    }
    const bool signed_number = c == '-' && i + 1 < text.size() && is_digit(text[i + 1]) &&
                               (i == 0 || !is_word_char(text[i - 1]));
    if (is_word_char(c) || signed_number) {
      std::size_t j = i + 1;
      while (j < text.size()) {
        if (is_word_char(text[j])) {
          ++j;
        } else if (text[j] == '.' && is_digit(text[j - 1]) && j + 1 < text.size() &&
                   is_digit(text[j + 1])) {
          ++j;
        } else {
          break;
        }
      }
      out.push_back({std::string(text.substr(i, j - i)), line});
      i = j;
    } else {
      out.push_back({std::string(1, c), line});
      ++i;
    }
  }
  return out;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    v.index_.emplace(v.tokens_[i], static_cast<TokenId>(i));
  }
  return v;
}

Vocabulary Vocabulary::build(std::span<const PatientCard> cards, std::size_t min_count) {
  if (cards.empty()) throw DataError("cannot build a vocabulary from no cards");
  std::map<std::string, std::size_t> counts;
  for (const auto& card : cards) {
    for (auto& w : split_words(card.text)) ++counts[std::move(w.text)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  for (auto& [tok, n] : ranked) {
    if (n >= min_count) tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  if (tokens.size() < 4 || tokens[0] != "[PAD]" || tokens[1] != "[UNK]" ||
      tokens[2] != "[CLS]" || tokens[3] != "[SEP]") {
    throw DataError("vocabulary file " + path.string() + " lacks the special tokens");
  }
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

TokenizedCard tokenize(const Vocabulary& vocab, const PatientCard& card,
                       std::size_t max_len) {
  if (max_len < 2) throw DataError("max_len must leave room for CLS and SEP");
  TokenizedCard out;
  out.ids.assign(max_len, kPadId);
  out.mask.assign(max_len, 0);
  out.numbers.assign(max_len, std::numeric_limits<double>::quiet_NaN());
  out.segments.assign(max_len, 0);

  const auto words = split_words(card.text);
  const std::size_t kept = std::min(words.size(), max_len - 2);
  out.ids[0] = kClsId;
  for (std::size_t i = 0; i < kept; ++i) {
    out.ids[i + 1] = vocab.id(words[i].text);
    out.numbers[i + 1] = numeric_value(words[i].text);
    out.segments[i + 1] = static_cast<std::uint16_t>(
        std::min<std::uint32_t>(words[i].line + 1, UINT16_MAX));
  }
  out.ids[kept + 1] = kSepId;
  out.length = kept + 2;
  std::fill(out.mask.begin(), out.mask.begin() + static_cast<std::ptrdiff_t>(out.length), 1);
  return out;
}

std::vector<TokenizedCard> tokenize_all(const Vocabulary& vocab,
                                        std::span<const PatientCard> cards,
                                        std::size_t max_len) {
  std::vector<TokenizedCard> out;
  out.reserve(cards.size());
  for (const auto& c : cards) out.push_back(tokenize(vocab, c, max_len));
  return out;
}

}  // namespace rct
