#include "rct/tokenizer.h"

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

namespace rct {
namespace {

std::vector<std::string> texts(const std::vector<WordToken>& words) {
  std::vector<std::string> out;
  for (const auto& w : words) out.push_back(w.text);
  return out;
}

TEST(SplitWords, NumbersStayWhole) {
  const auto w = split_words("Age: 34.2 years\nDelta: -1.5\nx-3");
  EXPECT_EQ(texts(w), (std::vector<std::string>{"Age", ":", "34.2", "years", "Delta", ":",
                                                "-1.5", "x", "-", "3"}));
  EXPECT_EQ(w[0].line, 0u);
  EXPECT_EQ(w[4].line, 1u);
  EXPECT_EQ(w[9].line, 2u);
}

TEST(SplitWords, TrailingDotIsPunctuation) {
  EXPECT_EQ(texts(split_words("ends 5. here")),
            (std::vector<std::string>{"ends", "5", ".", "here"}));
}

TEST(Vocabulary, OrderingAndSpecials) {
  const std::vector<PatientCard> cards = {{"b a a", 0}, {"c b a", 1}};
  const auto v = Vocabulary::build(cards);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "b",
                                                  "c"}));
  EXPECT_EQ(v.id("[PAD]"), kPadId);
  EXPECT_EQ(v.id("zzz"), kUnkId);
  const auto pruned = Vocabulary::build(cards, 2);
  EXPECT_EQ(pruned.size(), 6u);
  EXPECT_EQ(pruned.id("c"), kUnkId);
}

TEST(Vocabulary, StableUnderCardOrder) {
  const std::vector<PatientCard> a = {{"x y z", 0}, {"y z", 1}};
  const std::vector<PatientCard> b = {{"y z", 1}, {"x y z", 0}};
  EXPECT_EQ(Vocabulary::build(a), Vocabulary::build(b));
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const std::vector<PatientCard> cards = {{"Age: 34.2 years\nSex: Male", 0}};
  const auto v = Vocabulary::build(cards);
  const auto path = std::filesystem::temp_directory_path() / "rct_vocab_test.txt";
  v.save(path);
  EXPECT_EQ(Vocabulary::load(path), v);
  std::filesystem::remove(path);
}

TEST(Tokenize, PaddingTruncationAndNumbers) {
  const std::vector<PatientCard> cards = {{"Age: 34.2 years\nSex: Male", 0}};
  const auto v = Vocabulary::build(cards);
  const auto t = tokenize(v, cards[0], 12);
  ASSERT_EQ(t.ids.size(), 12u);
  EXPECT_EQ(t.length, 9u);  // CLS + 7 words + SEP
  EXPECT_EQ(t.ids[0], kClsId);
  EXPECT_EQ(t.ids[8], kSepId);
  for (std::size_t i = 9; i < 12; ++i) {
    EXPECT_EQ(t.ids[i], kPadId);
    EXPECT_EQ(t.mask[i], 0);
  }
  EXPECT_DOUBLE_EQ(t.numbers[3], 34.2);
  EXPECT_TRUE(std::isnan(t.numbers[1]));
  EXPECT_EQ(t.segments[1], 1);
  EXPECT_EQ(t.segments[5], 2);
  EXPECT_EQ(t.segments[0], 0);

  const auto cut = tokenize(v, cards[0], 5);
  EXPECT_EQ(cut.length, 5u);
  EXPECT_EQ(cut.ids[4], kSepId);
  EXPECT_EQ(cut.ids[3], v.id("34.2"));
}

TEST(Tokenize, UnknownWordsMapToUnk) {
  const std::vector<PatientCard> cards = {{"a b", 0}};
  const auto v = Vocabulary::build(cards);
  const auto t = tokenize(v, {"a q", 1}, 6);
  EXPECT_EQ(t.ids[2], kUnkId);
}

}  // namespace
}  // namespace rct
