#pragma once
// Deterministic synthetic corpus: articles whose journal class is planted in
// a title token, abstract tokens and author/reference metadata.

#include "imac/bibliometrics.hpp"
#include "imac/corpus.hpp"
#include "imac/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace imac {

struct SyntheticSpec {
    std::size_t articles = 200;
    std::size_t journals = 10;
    std::size_t high_impact_journals = 4;
    double positive_fraction = 0.4;  // share of articles in high-impact journals
    std::uint64_t seed = 42;
};

struct SyntheticCorpus {
    std::vector<ArticleRecord> articles;  // unlabeled
    std::vector<JournalRecord> journals;
};

SyntheticCorpus generate_corpus(const SyntheticSpec& spec);

// cits_8y >= cits_4y; ids h000000, h000001, ...
std::vector<CitationHistory> generate_histories(std::size_t n, std::uint64_t seed);

nlohmann::ordered_json to_json(const JournalRecord& j);
void write_journals(const std::filesystem::path& path, std::span<const JournalRecord> journals);
void write_citation_histories(const std::filesystem::path& path, std::span<const CitationHistory> rows);

}  // namespace imac
