#include "imac/tokenizer.hpp"

#include <gtest/gtest.h>

#include <string>

namespace imac {
namespace {

TEST(WordTokenizer, SentinelsAndIds) {
    const std::vector<std::string> texts{"a b"};
    const WordTokenizer tok = WordTokenizer::fit(texts);
    const TokenSequence s = tokenize(tok, "a b", 16);
    EXPECT_EQ(s.ids, (std::vector<std::int32_t>{WordTokenizer::kBos, tok.id("a"), tok.id("b"), WordTokenizer::kEos}));
    EXPECT_NE(tok.id("a"), tok.id("b"));
}

TEST(WordTokenizer, TruncatesToMaxLen) {
    std::string text;
    for (int i = 0; i < 1000; ++i) text += "w" + std::to_string(i % 37) + " ";
    const std::vector<std::string> texts{text};
    const WordTokenizer tok = WordTokenizer::fit(texts);
    const TokenSequence s = tokenize(tok, text, 512);
    EXPECT_EQ(s.ids.size(), 512u);
    EXPECT_EQ(s.ids.front(), WordTokenizer::kBos);
    EXPECT_EQ(s.ids.back(), WordTokenizer::kEos);
    EXPECT_EQ(tokenize(tok, text, 512).ids, s.ids);
}

TEST(WordTokenizer, UnknownWordsAndErrors) {
    const std::vector<std::string> texts{"known"};
    const WordTokenizer tok = WordTokenizer::fit(texts);
    EXPECT_EQ(tokenize(tok, "mystery", 8).ids[1], WordTokenizer::kUnk);
    EXPECT_THROW(tokenize(tok, "   ", 8), std::invalid_argument);
    EXPECT_THROW(tokenize(tok, "known", 1), std::invalid_argument);
}

TEST(WordTokenizer, FrequencyOrderAndJsonRoundTrip) {
    const std::vector<std::string> texts{"b a b c", "c b"};
    const WordTokenizer tok = WordTokenizer::fit(texts);
    EXPECT_EQ(tok.id("b"), 4);
    EXPECT_EQ(tok.id("c"), 5);
    EXPECT_EQ(tok.id("a"), 6);
    EXPECT_EQ(tok.vocab_size(), 7);
    const auto back = tokenizer_from_json(nlohmann::json::parse(tok.to_json().dump()));
    EXPECT_EQ(back->encode("a b c zz", 10).ids, tok.encode("a b c zz", 10).ids);
}

TEST(WordPieceTokenizer, GreedyLongestMatch) {
    const WordPieceTokenizer tok({"[PAD]", "[UNK]", "[CLS]", "[SEP]", "graph", "##ene", "##s", "un", "##able", ","});
    EXPECT_EQ(tok.pieces("Graphene, graphs"), (std::vector<std::string>{"graph", "##ene", ",", "graph", "##s"}));
    const TokenSequence s = tok.encode("graphene xyz", 16);
    EXPECT_EQ(s.ids, (std::vector<std::int32_t>{2, 4, 5, 1, 3}));
    const auto back = tokenizer_from_json(nlohmann::json::parse(tok.to_json().dump()));
    EXPECT_EQ(back->encode("graphene xyz", 16).ids, s.ids);
}

TEST(WordPieceTokenizer, RequiresSpecialTokens) {
    EXPECT_THROW(WordPieceTokenizer({"a", "b"}), std::exception);
}

}  // namespace
}  // namespace imac
