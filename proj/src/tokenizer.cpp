#include "imac/tokenizer.hpp"

#include "imac/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace imac {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

TokenSequence wrap(std::int32_t bos, std::int32_t eos, const std::vector<std::int32_t>& body,
                   std::size_t max_len) {
    if (max_len < 2) throw std::invalid_argument("max_len must leave room for BOS and EOS");
    TokenSequence seq;
    const std::size_t keep = std::min(body.size(), max_len - 2);
    seq.ids.reserve(keep + 2);
    seq.ids.push_back(bos);
    seq.ids.insert(seq.ids.end(), body.begin(), body.begin() + static_cast<std::ptrdiff_t>(keep));
    seq.ids.push_back(eos);
    return seq;
}

}  // namespace

TokenSequence tokenize(const Tokenizer& tok, std::string_view text, std::size_t max_len) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw std::invalid_argument("cannot tokenize empty text");
    }
    return tok.encode(text, max_len);
}

WordTokenizer::WordTokenizer(std::vector<std::string> words) : words_(std::move(words)) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
        index_.emplace(words_[i], static_cast<std::int32_t>(i) + 4);
    }
}

WordTokenizer WordTokenizer::fit(std::span<const std::string> texts, std::size_t max_words,
                                 std::size_t min_count) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& t : texts) {
        for (auto& w : words(t)) ++counts[std::move(w)];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked;
    for (auto& [w, c] : counts) {
        if (c >= min_count) ranked.emplace_back(w, c);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > max_words) ranked.resize(max_words);
    std::vector<std::string> vocab;
    vocab.reserve(ranked.size());
    for (auto& [w, c] : ranked) vocab.push_back(w);
    return WordTokenizer(std::move(vocab));
}

WordTokenizer WordTokenizer::from_json(const json& j) {
    return WordTokenizer(j.at("words").get<std::vector<std::string>>());
}

std::int32_t WordTokenizer::id(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    return it == index_.end() ? kUnk : it->second;
}

TokenSequence WordTokenizer::encode(std::string_view text, std::size_t max_len) const {
    std::vector<std::int32_t> body;
    for (const auto& w : words(text)) body.push_back(id(w));
    return wrap(kBos, kEos, body, max_len);
}

std::int32_t WordTokenizer::vocab_size() const {
    return static_cast<std::int32_t>(words_.size()) + 4;
}

ordered_json WordTokenizer::to_json() const {
    ordered_json j;
    j["kind"] = "word";
    j["specials"] = {"[PAD]", "[UNK]", "[BOS]", "[EOS]"};
    j["words"] = words_;
    return j;
}

WordPieceTokenizer::WordPieceTokenizer(std::vector<std::string> vocab, bool lowercase)
    : vocab_(std::move(vocab)), lowercase_(lowercase) {
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
        index_.emplace(vocab_[i], static_cast<std::int32_t>(i));
    }
    auto special = [&](const char* name) {
        const auto it = index_.find(name);
        if (it == index_.end()) {
            throw std::runtime_error(std::string("WordPiece vocabulary lacks ") + name);
        }
        return it->second;
    };
    unk_ = special("[UNK]");
    cls_ = special("[CLS]");
    sep_ = special("[SEP]");
}

WordPieceTokenizer WordPieceTokenizer::from_vocab_file(const std::filesystem::path& path,
                                                       bool lowercase) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vocabulary " + path.string());
    std::vector<std::string> vocab;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        vocab.push_back(line);
    }
    return WordPieceTokenizer(std::move(vocab), lowercase);
}

WordPieceTokenizer WordPieceTokenizer::from_json(const json& j) {
    return WordPieceTokenizer(j.at("vocab").get<std::vector<std::string>>(),
                              j.value("lowercase", true));
}

std::int32_t WordPieceTokenizer::lookup(const std::string& piece) const {
    const auto it = index_.find(piece);
    return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> WordPieceTokenizer::pieces(std::string_view text) const {
    // Basic tokenization: whitespace split, punctuation as standalone tokens.
    std::vector<std::string> basic;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) basic.push_back(std::move(cur));
        cur.clear();
    };
    for (char ch : text) {
        const auto u = static_cast<unsigned char>(ch);
        if (std::isspace(u)) {
            flush();
        } else if (u < 0x80 && std::ispunct(u)) {
            flush();
            basic.emplace_back(1, ch);
        } else {
            cur.push_back(lowercase_ && u < 0x80 ? static_cast<char>(std::tolower(u)) : ch);
        }
    }
    flush();

    std::vector<std::string> out;
    for (const auto& word : basic) {
        if (word.size() > 100) {
            out.emplace_back("[UNK]");
            continue;
        }
        std::vector<std::string> sub;
        std::size_t start = 0;
        bool bad = false;
        while (start < word.size()) {
            std::size_t end = word.size();
            std::string found;
            while (start < end) {
                std::string piece = word.substr(start, end - start);
                if (start > 0) piece = "##" + piece;
                if (lookup(piece) >= 0) {
                    found = std::move(piece);
                    break;
                }
                --end;
            }
            if (found.empty()) {
                bad = true;
                break;
            }
            sub.push_back(std::move(found));
            start = end;
        }
        if (bad) {
            out.emplace_back("[UNK]");
        } else {
            out.insert(out.end(), sub.begin(), sub.end());
        }
    }
    return out;
}

TokenSequence WordPieceTokenizer::encode(std::string_view text, std::size_t max_len) const {
    std::vector<std::int32_t> body;
    for (const auto& p : pieces(text)) {
        const std::int32_t id = lookup(p);
        body.push_back(id >= 0 ? id : unk_);
    }
    return wrap(cls_, sep_, body, max_len);
}

std::int32_t WordPieceTokenizer::vocab_size() const {
    return static_cast<std::int32_t>(vocab_.size());
}

ordered_json WordPieceTokenizer::to_json() const {
    ordered_json j;
    j["kind"] = "wordpiece";
    j["lowercase"] = lowercase_;
    j["vocab"] = vocab_;
    return j;
}

std::unique_ptr<Tokenizer> tokenizer_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "word") return std::make_unique<WordTokenizer>(WordTokenizer::from_json(j));
    if (kind == "wordpiece") {
        return std::make_unique<WordPieceTokenizer>(WordPieceTokenizer::from_json(j));
    }
    throw std::runtime_error("unknown tokenizer kind '" + kind + "'");
}

}  // namespace imac
