#pragma once
// Article data model, JSONL ingestion, stratified splitting, metadata
// normalization and the bag-of-words featurization used by the baselines.

#include "imac/types.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace imac {

inline constexpr std::size_t kMetadataDim = 7;

// Column order of MetadataVector.
inline constexpr std::array<std::string_view, kMetadataDim> kMetadataFields = {
    "year", "reference_count", "reference_age", "impact_reference",
    "h_index", "author_cit", "author_papers"};

struct ArticleRecord {
    std::string id;
    std::string title;
    std::string abstract;
    int year = 0;
    std::int64_t reference_count = 0;
    double reference_age = 0.0;    // mean publication year of the references
    double impact_reference = 0.0; // share of references in top-decile journals
    std::int64_t h_index = 0;
    std::int64_t author_cit = 0;
    std::int64_t author_papers = 0;
    std::int64_t citations = 0;
    std::string journal_id;

    // Filled in by labeling.
    std::optional<double> jif;
    std::optional<double> aif;
    std::optional<ImpactLabel> journal_label;
    std::optional<ImpactLabel> article_label;

    std::optional<ImpactLabel> label(Task task) const {
        return task == Task::journal_impact ? journal_label : article_label;
    }

    bool operator==(const ArticleRecord&) const = default;
};

struct MetadataVector {
    std::array<double, kMetadataDim> values{};
    bool normalized = false;
};

MetadataVector raw_metadata(const ArticleRecord& r);

struct ValidationOptions {
    int min_year = 1900;
    int max_year = 2100;
    // A manuscript awaiting assessment has no citation count or venue yet.
    bool require_outcome = true;
};

// Thrown when a JSON object does not satisfy the ArticleRecord invariants.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

ArticleRecord parse_article(const nlohmann::json& j, const ValidationOptions& opts = {});
nlohmann::ordered_json to_json(const ArticleRecord& r);
std::string serialize(const ArticleRecord& r);  // single JSON line, no newline

struct Rejection {
    std::size_t line = 0;  // 1-based
    std::string reason;
};

struct IngestResult {
    std::vector<ArticleRecord> records;
    std::vector<Rejection> rejections;
    std::vector<std::string> warnings;
};

IngestResult ingest(const std::filesystem::path& path, const ValidationOptions& opts = {});
IngestResult ingest_lines(std::istream& in, const ValidationOptions& opts = {});
void write_jsonl(const std::filesystem::path& path, std::span<const ArticleRecord> records);

struct SplitSpec {
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 7;

    void validate() const;
};

struct Splits {
    std::vector<ArticleRecord> train;
    std::vector<ArticleRecord> val;
    std::vector<ArticleRecord> test;
};

// Stratified on the task label when `stratify_on` is set (every record must
// then carry that label).  Sizes are round(n * fraction) for train and val,
// test takes the rest.
Splits split(std::span<const ArticleRecord> records, const SplitSpec& spec,
             std::optional<Task> stratify_on = std::nullopt);

void write_ids(const std::filesystem::path& path, std::span<const ArticleRecord> records);
std::vector<std::string> read_ids(const std::filesystem::path& path);

// Keeps the records whose id appears in `ids`, in the order of `ids`.
std::vector<ArticleRecord> select_by_ids(std::span<const ArticleRecord> records,
                                         std::span<const std::string> ids);

// Per-column z-score fitted on training data.
class Normalizer {
public:
    static Normalizer fit(std::span<const ArticleRecord> train);

    MetadataVector apply(const MetadataVector& raw) const;
    MetadataVector apply(const ArticleRecord& r) const { return apply(raw_metadata(r)); }

    const std::array<double, kMetadataDim>& mean() const { return mean_; }
    const std::array<double, kMetadataDim>& sd() const { return sd_; }

    nlohmann::ordered_json to_json() const;
    static Normalizer from_json(const nlohmann::json& j);

private:
    std::array<double, kMetadataDim> mean_{};
    std::array<double, kMetadataDim> sd_{};
};

// Lowercased alphanumeric words; punctuation acts as a separator.
std::vector<std::string> words(std::string_view text);

bool is_stop_word(std::string_view word);
std::string_view stop_word_list_version();

struct BaselineVocab {
    std::vector<std::string> terms;

    nlohmann::ordered_json to_json() const;
    static BaselineVocab from_json(const nlohmann::json& j);
};

// The k most frequent non-stop-words over title + abstract; ties go to the
// lexicographically smaller word.
BaselineVocab build_vocab(std::span<const ArticleRecord> records, std::size_t k = 50,
                          std::vector<std::string>* warnings = nullptr);

struct BaselineFeatures {
    std::vector<double> onehot;  // 0/1 per vocabulary term
    MetadataVector metadata;

    // [onehot..., metadata...]
    std::vector<double> concatenated() const;
};

BaselineFeatures featurize_baseline(const ArticleRecord& r, const BaselineVocab& vocab,
                                    const Normalizer& normalizer);

}  // namespace imac
