#pragma once
// Text -> token id sequences.  Two implementations share one interface: a
// fitted word-level tokenizer for self-contained runs, and a WordPiece
// tokenizer that reads a BERT-style vocab.txt so that externally obtained
// checkpoints can be paired with their own vocabulary.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace imac {

inline constexpr std::size_t kDefaultTitleLength = 64;
inline constexpr std::size_t kDefaultAbstractLength = 512;

struct TokenSequence {
    std::vector<std::int32_t> ids;

    std::size_t length() const { return ids.size(); }
    bool operator==(const TokenSequence&) const = default;
};

class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    // [BOS, tokens..., EOS], truncated so the result has at most max_len ids.
    virtual TokenSequence encode(std::string_view text, std::size_t max_len) const = 0;
    virtual std::int32_t vocab_size() const = 0;
    virtual nlohmann::ordered_json to_json() const = 0;
};

// Throws std::invalid_argument on blank text or max_len < 2.
TokenSequence tokenize(const Tokenizer& tok, std::string_view text, std::size_t max_len);

class WordTokenizer final : public Tokenizer {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;
    static constexpr std::int32_t kBos = 2;
    static constexpr std::int32_t kEos = 3;

    // `words` excludes the four special tokens.
    explicit WordTokenizer(std::vector<std::string> words);

    // Keeps words seen at least min_count times, most frequent first (ties
    // lexicographic), capped at max_words.
    static WordTokenizer fit(std::span<const std::string> texts, std::size_t max_words = 20000,
                             std::size_t min_count = 1);
    static WordTokenizer from_json(const nlohmann::json& j);

    TokenSequence encode(std::string_view text, std::size_t max_len) const override;
    std::int32_t vocab_size() const override;
    nlohmann::ordered_json to_json() const override;

    std::int32_t id(std::string_view word) const;

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::int32_t> index_;
};

class WordPieceTokenizer final : public Tokenizer {
public:
    explicit WordPieceTokenizer(std::vector<std::string> vocab, bool lowercase = true);

    // One token per line, line number = id.
    static WordPieceTokenizer from_vocab_file(const std::filesystem::path& path, bool lowercase = true);
    static WordPieceTokenizer from_json(const nlohmann::json& j);

    TokenSequence encode(std::string_view text, std::size_t max_len) const override;
    std::int32_t vocab_size() const override;
    nlohmann::ordered_json to_json() const override;

    // Word-piece strings for `text` without sentinels (for inspection/tests).
    std::vector<std::string> pieces(std::string_view text) const;

private:
    std::int32_t lookup(const std::string& piece) const;

    std::vector<std::string> vocab_;
    std::unordered_map<std::string, std::int32_t> index_;
    bool lowercase_ = true;
    std::int32_t unk_ = 0, cls_ = 0, sep_ = 0;
};

std::unique_ptr<Tokenizer> tokenizer_from_json(const nlohmann::json& j);

}  // namespace imac
