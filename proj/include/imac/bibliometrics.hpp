#pragma once
// Journal and article impact metrics, impact labels, and the analyses used to
// argue that those metrics are sensible (citation-window stability and
// correlation with bibliometric features).

#include "imac/corpus.hpp"
#include "imac/types.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace imac {

inline constexpr double kHighImpactJif = 6.0;
inline constexpr double kHighImpactAif = 5.0;

// Citations received in year T of items published in T-1 and T-2.
struct CitationWindow {
    std::int64_t citations_t1 = 0;
    std::int64_t citations_t2 = 0;
    std::int64_t papers_t1 = 0;
    std::int64_t papers_t2 = 0;
};

struct AifParams {
    double d = 0.4;        // balance between citations and venue, in (0, 0.5)
    double cits_m = 29.0;  // median citation count of the reference corpus

    void validate() const;
};

struct ImpactScores {
    double jif = 0.0;
    std::int64_t cits = 0;
    double p = 1.0;
    double aif = 0.0;
};

struct CitationHistory {
    std::string article_id;
    std::int64_t cits_4y = 0;
    std::int64_t cits_8y = 0;
};

double compute_jif(const CitationWindow& w);

// min(2, max(cits_m / jif, 0.5)); requires jif > 0.
double scaling_factor(double cits_m, double jif);

ImpactScores compute_aif(std::int64_t cits, double jif, const AifParams& params);

ImpactLabel label_journal(double jif);
ImpactLabel label_article(double aif);

// (d * p * |cits_4 - cits_8|, |cits_4 - cits_8|).  The scaling factor does not
// depend on the citation count itself; it is evaluated with the given jif.
struct SensitivityGap {
    double aif_side = 0.0;
    double citation_side = 0.0;
};

SensitivityGap sensitivity_gap(const CitationHistory& h, const AifParams& params, double jif);

struct StabilityReport {
    std::int64_t threshold = 0;
    std::int64_t others_4y = 0;
    std::int64_t impactful_4y = 0;
    std::int64_t others_8y = 0;
    std::int64_t impactful_8y = 0;
    std::int64_t flip_count = 0;

    std::int64_t total() const { return others_4y + impactful_4y; }
    double flip_fraction() const {
        return total() > 0 ? static_cast<double>(flip_count) / static_cast<double>(total()) : 0.0;
    }
    nlohmann::ordered_json to_json() const;
};

// An article is impactful at a horizon iff its citations exceed `threshold`.
StabilityReport stability_report(std::span<const CitationHistory> histories, std::int64_t threshold);

// CSV with header article_id,cits_4y,cits_8y.
std::vector<CitationHistory> read_citation_histories(const std::filesystem::path& path);
std::vector<CitationHistory> parse_citation_histories(std::istream& in);

enum class CorrelationMethod { pearson, spearman };

CorrelationMethod parse_correlation_method(std::string_view s);
std::string_view to_string(CorrelationMethod m);

// nullopt when either column has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

inline constexpr std::array<std::string_view, 3> kIndicators = {"JIF", "citations", "AIF"};
inline constexpr std::array<std::string_view, 6> kCorrelationFeatures = {
    "reference_count", "reference_age", "impact_reference", "h_index", "author_cit", "author_papers"};

struct CorrelationMatrix {
    CorrelationMethod method = CorrelationMethod::pearson;
    std::size_t n = 0;
    // coefficients[indicator][feature]
    std::array<std::array<std::optional<double>, 6>, 3> coefficients{};

    nlohmann::ordered_json to_json() const;
};

// Records must carry jif and aif (see label_corpus).
CorrelationMatrix correlation_matrix(std::span<const ArticleRecord> records,
                                     CorrelationMethod method = CorrelationMethod::pearson);

struct JournalRecord {
    std::string journal_id;
    std::optional<double> jif;
    std::optional<CitationWindow> window;
    std::string category;

    // Precomputed JIF when present, otherwise computed from the window.
    double resolve_jif() const;
};

JournalRecord parse_journal(const nlohmann::json& j);
std::vector<JournalRecord> read_journals(const std::filesystem::path& path);

double median_citations(std::span<const ArticleRecord> records);

struct LabelResult {
    std::vector<ArticleRecord> records;
    std::vector<Rejection> rejections;  // `line` is the 1-based record position
};

// Attaches jif, aif and both task labels to every record whose journal
// resolves to a positive JIF.
LabelResult label_corpus(std::span<const ArticleRecord> records,
                         std::span<const JournalRecord> journals, const AifParams& params);

}  // namespace imac
