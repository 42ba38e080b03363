#include "imac/bibliometrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace imac {

using nlohmann::json;
using nlohmann::ordered_json;

void AifParams::validate() const {
    if (!(d > 0.0 && d < 0.5)) {
        throw std::domain_error("AIF balance parameter d must lie in (0, 0.5)");
    }
    if (!(cits_m > 0.0) || !std::isfinite(cits_m)) {
        throw std::domain_error("median citation count cits_m must be positive");
    }
}

double compute_jif(const CitationWindow& w) {
    if (w.citations_t1 < 0 || w.citations_t2 < 0 || w.papers_t1 < 0 || w.papers_t2 < 0) {
        throw std::domain_error("citation window fields must be nonnegative");
    }
    const std::int64_t papers = w.papers_t1 + w.papers_t2;
    if (papers <= 0) {
        throw std::domain_error("journal record has no papers in the citation window");
    }
    return static_cast<double>(w.citations_t1 + w.citations_t2) / static_cast<double>(papers);
}

double scaling_factor(double cits_m, double jif) {
    if (!(jif > 0.0)) throw std::domain_error("scaling factor undefined for jif <= 0");
    return std::min(2.0, std::max(cits_m / jif, 0.5));
}

ImpactScores compute_aif(std::int64_t cits, double jif, const AifParams& params) {
    params.validate();
    if (cits < 0) throw std::domain_error("citation count must be nonnegative");
    if (!(jif > 0.0) || !std::isfinite(jif)) {
        throw std::domain_error("AIF requires a positive journal impact factor");
    }
    ImpactScores s;
    s.jif = jif;
    s.cits = cits;
    s.p = scaling_factor(params.cits_m, jif);
    const double arg = params.d * static_cast<double>(cits) * s.p + (1.0 - params.d) * jif;
    if (!(arg > 0.0)) throw std::domain_error("AIF logarithm argument is not positive");
    s.aif = std::log(arg);
    return s;
}

ImpactLabel label_journal(double jif) {
    return jif >= kHighImpactJif ? ImpactLabel::high_impact : ImpactLabel::others;
}

ImpactLabel label_article(double aif) {
    return aif >= kHighImpactAif ? ImpactLabel::high_impact : ImpactLabel::others;
}

SensitivityGap sensitivity_gap(const CitationHistory& h, const AifParams& params, double jif) {
    params.validate();
    const double p = scaling_factor(params.cits_m, jif);
    const double delta = std::abs(static_cast<double>(h.cits_4y - h.cits_8y));
    return {params.d * p * delta, delta};
}

ordered_json StabilityReport::to_json() const {
    ordered_json j;
    j["threshold"] = threshold;
    j["articles"] = total();
    j["others_4y"] = others_4y;
    j["impactful_4y"] = impactful_4y;
    j["others_8y"] = others_8y;
    j["impactful_8y"] = impactful_8y;
    j["flip_count"] = flip_count;
    j["flip_fraction"] = flip_fraction();
    return j;
}

StabilityReport stability_report(std::span<const CitationHistory> histories, std::int64_t threshold) {
    if (histories.empty()) throw std::domain_error("stability report needs at least one history");
    StabilityReport r;
    r.threshold = threshold;
    for (const auto& h : histories) {
        const bool early = h.cits_4y > threshold;
        const bool late = h.cits_8y > threshold;
        ++(early ? r.impactful_4y : r.others_4y);
        ++(late ? r.impactful_8y : r.others_8y);
        if (early != late) ++r.flip_count;
    }
    return r;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
    }
    return cells;
}

std::int64_t parse_count(const std::string& s, std::size_t lineno) {
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty() || v < 0) {
        throw std::runtime_error("line " + std::to_string(lineno) + ": invalid citation count '" +
                                 s + "'");
    }
    return v;
}

}  // namespace

std::vector<CitationHistory> parse_citation_histories(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw std::runtime_error("citation history file is empty");
    ++lineno;
    const auto header = split_csv_line(line);
    if (header != std::vector<std::string>{"article_id", "cits_4y", "cits_8y"}) {
        throw std::runtime_error("expected header article_id,cits_4y,cits_8y");
    }
    std::vector<CitationHistory> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 3) {
            throw std::runtime_error("line " + std::to_string(lineno) + ": expected 3 columns");
        }
        CitationHistory h{cells[0], parse_count(cells[1], lineno), parse_count(cells[2], lineno)};
        if (h.cits_8y < h.cits_4y) {
            throw std::runtime_error("line " + std::to_string(lineno) +
                                     ": cits_8y is smaller than cits_4y (counts are cumulative)");
        }
        out.push_back(std::move(h));
    }
    return out;
}

std::vector<CitationHistory> read_citation_histories(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return parse_citation_histories(in);
}

CorrelationMethod parse_correlation_method(std::string_view s) {
    if (s == "pearson") return CorrelationMethod::pearson;
    if (s == "spearman") return CorrelationMethod::spearman;
    throw std::invalid_argument("unknown correlation method '" + std::string(s) + "'");
}

std::string_view to_string(CorrelationMethod m) {
    return m == CorrelationMethod::pearson ? "pearson" : "spearman";
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) {
        throw std::invalid_argument("correlation needs two nonempty columns of equal length");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

// Average ranks (1-based), ties share the mean rank.
std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    return pearson(rx, ry);
}

ordered_json CorrelationMatrix::to_json() const {
    ordered_json j;
    j["method"] = to_string(method);
    j["records"] = n;
    ordered_json rows = ordered_json::object();
    for (std::size_t i = 0; i < kIndicators.size(); ++i) {
        ordered_json row = ordered_json::object();
        for (std::size_t f = 0; f < kCorrelationFeatures.size(); ++f) {
            const auto& c = coefficients[i][f];
            row[std::string(kCorrelationFeatures[f])] = c ? ordered_json(*c) : ordered_json(nullptr);
        }
        rows[std::string(kIndicators[i])] = std::move(row);
    }
    j["coefficients"] = std::move(rows);
    return j;
}

CorrelationMatrix correlation_matrix(std::span<const ArticleRecord> records,
                                     CorrelationMethod method) {
    if (records.size() < 3) throw std::domain_error("correlation analysis needs at least 3 records");
    std::array<std::vector<double>, 3> indicators;
    std::array<std::vector<double>, 6> features;
    for (const auto& r : records) {
        if (!r.jif || !r.aif) {
            throw std::domain_error("record '" + r.id + "' lacks jif/aif; run labeling first");
        }
        indicators[0].push_back(*r.jif);
        indicators[1].push_back(static_cast<double>(r.citations));
        indicators[2].push_back(*r.aif);
        features[0].push_back(static_cast<double>(r.reference_count));
        features[1].push_back(r.reference_age);
        features[2].push_back(r.impact_reference);
        features[3].push_back(static_cast<double>(r.h_index));
        features[4].push_back(static_cast<double>(r.author_cit));
        features[5].push_back(static_cast<double>(r.author_papers));
    }
    CorrelationMatrix m;
    m.method = method;
    m.n = records.size();
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t f = 0; f < 6; ++f) {
            m.coefficients[i][f] = method == CorrelationMethod::pearson
                                       ? pearson(indicators[i], features[f])
                                       : spearman(indicators[i], features[f]);
        }
    }
    return m;
}

double JournalRecord::resolve_jif() const {
    if (jif) return *jif;
    if (window) return compute_jif(*window);
    throw std::domain_error("journal '" + journal_id + "' has neither a JIF nor a citation window");
}

JournalRecord parse_journal(const json& j) {
    JournalRecord rec;
    if (!j.is_object()) throw std::runtime_error("journal record is not a JSON object");
    const auto& id = j.at("journal_id");
    rec.journal_id = id.is_string() ? id.get<std::string>() : id.dump();
    if (j.contains("jif") && !j["jif"].is_null()) rec.jif = j["jif"].get<double>();
    if (j.contains("citations_t1")) {
        rec.window = CitationWindow{j.at("citations_t1").get<std::int64_t>(),
                                    j.at("citations_t2").get<std::int64_t>(),
                                    j.at("papers_t1").get<std::int64_t>(),
                                    j.at("papers_t2").get<std::int64_t>()};
    }
    rec.category = j.value("category", std::string{});
    return rec;
}

std::vector<JournalRecord> read_journals(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<JournalRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        try {
            out.push_back(parse_journal(json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

double median_citations(std::span<const ArticleRecord> records) {
    if (records.empty()) throw std::domain_error("median of an empty corpus");
    std::vector<double> c;
    c.reserve(records.size());
    for (const auto& r : records) c.push_back(static_cast<double>(r.citations));
    std::sort(c.begin(), c.end());
    const std::size_t m = c.size() / 2;
    return c.size() % 2 == 1 ? c[m] : 0.5 * (c[m - 1] + c[m]);
}

LabelResult label_corpus(std::span<const ArticleRecord> records,
                         std::span<const JournalRecord> journals, const AifParams& params) {
    params.validate();
    std::unordered_map<std::string, const JournalRecord*> by_id;
    for (const auto& j : journals) by_id.emplace(j.journal_id, &j);

    LabelResult result;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto it = by_id.find(r.journal_id);
        if (it == by_id.end()) {
            result.rejections.push_back({i + 1, "record '" + r.id + "': unknown journal_id '" +
                                                    r.journal_id + "'"});
            continue;
        }
        try {
            const double jif = it->second->resolve_jif();
            const ImpactScores s = compute_aif(r.citations, jif, params);
            ArticleRecord out = r;
            out.jif = jif;
            out.aif = s.aif;
            out.journal_label = label_journal(jif);
            out.article_label = label_article(s.aif);
            result.records.push_back(std::move(out));
        } catch (const std::domain_error& e) {
            result.rejections.push_back({i + 1, "record '" + r.id + "': " + e.what()});
        }
    }
    return result;
}

}  // namespace imac
