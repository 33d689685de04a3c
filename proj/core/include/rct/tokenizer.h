#ifndef RCT_TOKENIZER_H_
#define RCT_TOKENIZER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rct/data_ingest.h"

namespace rct {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;

struct WordToken {
  std::string text;
  std::uint32_t line = 0;  // zero-based card line
};

// Whole-word split: runs of letters/digits/underscore form words, a '.'
// between digits stays inside the word ("34.2"), a '-' directly before a
// digit at word start is a sign, and any other non-space character is a
// token of its own.
std::vector<WordToken> split_words(std::string_view text);

class Vocabulary {
 public:
  // Specials first (PAD, UNK, CLS, SEP), then tokens by descending count with
  // ties in byte order. Tokens seen fewer than min_count times are left out
  // and tokenize to UNK.
  static Vocabulary build(std::span<const PatientCard> cards,
                          std::size_t min_count = 1);
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

struct TokenizedCard {
  std::vector<TokenId> ids;          // max_len entries, PAD after `length`
  std::vector<std::uint8_t> mask;    // 1 on real tokens
  std::vector<double> numbers;       // literal value of numeric words, NaN otherwise
  std::vector<std::uint16_t> segments;  // 0 for CLS/SEP/PAD, card line + 1 for words
  std::size_t length = 0;
};

// [CLS] words... [SEP], keeping the first max_len - 2 words, right padded.
TokenizedCard tokenize(const Vocabulary& vocab, const PatientCard& card,
                       std::size_t max_len);
std::vector<TokenizedCard> tokenize_all(const Vocabulary& vocab,
                                        std::span<const PatientCard> cards,
                                        std::size_t max_len);

}  // namespace rct

#endif  // RCT_TOKENIZER_H_
