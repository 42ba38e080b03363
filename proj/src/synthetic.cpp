#include "imac/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace imac {

namespace {

constexpr const char* kNeutral[] = {
    "model",     "data",      "analysis",   "network",   "method",     "system",    "learning",
    "signal",    "protein",   "graph",      "sensor",    "imaging",    "energy",    "cell",
    "dynamics",  "sampling",  "estimation", "framework", "algorithm",  "structure", "control",
    "process",   "material",  "surface",    "response",  "field",      "optical",   "thermal",
    "genome",    "patient",   "clinical",   "survey",    "spectral",   "wireless",  "robust",
    "inference", "kernel",    "stochastic", "temporal",  "spatial",    "channel",   "particle",
    "quantum",   "catalyst",  "polymer",    "tissue",    "climate",    "urban",     "traffic",
    "language",  "retrieval", "vision",     "feature",   "classifier", "benchmark", "dataset",
    "simulation", "experiment", "theory",   "measurement"};

constexpr const char* kHighTitle = "landmark";
constexpr const char* kLowTitle = "routine";
constexpr const char* kHighAbstract[] = {"pioneering", "unprecedented", "transformative"};
constexpr const char* kLowAbstract[] = {"preliminary", "modest", "incremental"};

std::size_t pick(Rng& rng, std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(pick(rng, static_cast<std::size_t>(hi - lo + 1)));
}

std::string sentence(Rng& rng, std::size_t words, const char* planted, std::size_t planted_copies) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < words; ++i) out.emplace_back(kNeutral[pick(rng, std::size(kNeutral))]);
    for (std::size_t c = 0; c < planted_copies; ++c) {
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(pick(rng, out.size() + 1)), planted);
    }
    std::string s;
    for (const auto& w : out) {
        if (!s.empty()) s += ' ';
        s += w;
    }
    return s;
}

}  // namespace

SyntheticCorpus generate_corpus(const SyntheticSpec& spec) {
    if (spec.articles == 0) throw std::domain_error("synthetic corpus needs at least one article");
    if (spec.journals < 2 || spec.high_impact_journals == 0 || spec.high_impact_journals >= spec.journals) {
        throw std::domain_error("need at least one high-impact and one other journal");
    }
    if (!(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0)) {
        throw std::domain_error("positive_fraction must lie in (0, 1)");
    }
    Rng rng(spec.seed);
    SyntheticCorpus corpus;
    for (std::size_t j = 0; j < spec.journals; ++j) {
        JournalRecord rec;
        char id[32];
        std::snprintf(id, sizeof id, "J%02zu", j);
        rec.journal_id = id;
        const bool high = j < spec.high_impact_journals;
        rec.category = high ? "synthetic-high" : "synthetic-other";
        const double jif = high ? uniform(rng, 6.5, 14.0) : uniform(rng, 0.8, 4.5);
        if (j % 2 == 0) {
            rec.jif = std::round(jif * 1000.0) / 1000.0;
        } else {
            CitationWindow w;
            w.papers_t1 = uniform_int(rng, 80, 200);
            w.papers_t2 = uniform_int(rng, 80, 200);
            const auto cites = static_cast<std::int64_t>(std::llround(jif * static_cast<double>(w.papers_t1 + w.papers_t2)));
            w.citations_t1 = cites / 2;
            w.citations_t2 = cites - w.citations_t1;
            rec.window = w;
        }
        corpus.journals.push_back(std::move(rec));
    }

    const auto positives = static_cast<std::size_t>(
        std::llround(spec.positive_fraction * static_cast<double>(spec.articles)));
    std::vector<int> classes(spec.articles, 0);
    std::fill(classes.begin(), classes.begin() + static_cast<std::ptrdiff_t>(std::min(positives, spec.articles)), 1);
    std::shuffle(classes.begin(), classes.end(), rng);

    for (std::size_t i = 0; i < spec.articles; ++i) {
        const bool high = classes[i] == 1;
        ArticleRecord a;
        char id[32];
        std::snprintf(id, sizeof id, "syn%05zu", i);
        a.id = id;
        const std::size_t title_words = static_cast<std::size_t>(uniform_int(rng, 5, 9));
        a.title = sentence(rng, title_words, high ? kHighTitle : kLowTitle, 1);
        const std::size_t abstract_words = static_cast<std::size_t>(uniform_int(rng, 25, 45));
        const char* marker = high ? kHighAbstract[pick(rng, 3)] : kLowAbstract[pick(rng, 3)];
        a.abstract = sentence(rng, abstract_words, marker, 2);
        a.year = static_cast<int>(uniform_int(rng, 2000, 2015));
        a.reference_count = uniform_int(rng, 10, 60);
        a.reference_age = std::round((a.year - uniform(rng, 2.0, 10.0)) * 100.0) / 100.0;
        a.impact_reference = std::round((high ? uniform(rng, 0.3, 0.7) : uniform(rng, 0.0, 0.25)) * 1000.0) / 1000.0;
        a.h_index = high ? uniform_int(rng, 25, 60) : uniform_int(rng, 1, 20);
        a.author_cit = high ? uniform_int(rng, 800, 6000) : uniform_int(rng, 10, 900);
        a.author_papers = uniform_int(rng, 5, 200);
        a.citations = high ? uniform_int(rng, 120, 600) : uniform_int(rng, 0, 60);
        const std::size_t journal = high ? pick(rng, spec.high_impact_journals)
                                         : spec.high_impact_journals + pick(rng, spec.journals - spec.high_impact_journals);
        a.journal_id = corpus.journals[journal].journal_id;
        corpus.articles.push_back(std::move(a));
    }
    return corpus;
}

std::vector<CitationHistory> generate_histories(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CitationHistory> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "h%06zu", i);
        const auto c4 = static_cast<std::int64_t>(std::floor(std::exp(uniform(rng, 0.0, 5.5)))) - 1;
        const auto extra = static_cast<std::int64_t>(std::floor(static_cast<double>(c4) * uniform(rng, 0.0, 1.2) +
                                                                uniform(rng, 0.0, 6.0)));
        out.push_back({id, c4, c4 + extra});
    }
    return out;
}

nlohmann::ordered_json to_json(const JournalRecord& j) {
    nlohmann::ordered_json o;
    o["journal_id"] = j.journal_id;
    if (j.jif) o["jif"] = *j.jif;
    if (j.window) {
        o["citations_t1"] = j.window->citations_t1;
        o["citations_t2"] = j.window->citations_t2;
        o["papers_t1"] = j.window->papers_t1;
        o["papers_t2"] = j.window->papers_t2;
    }
    if (!j.category.empty()) o["category"] = j.category;
    return o;
}

void write_journals(const std::filesystem::path& path, std::span<const JournalRecord> journals) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& j : journals) out << to_json(j).dump() << '\n';
}

void write_citation_histories(const std::filesystem::path& path, std::span<const CitationHistory> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "article_id,cits_4y,cits_8y\n";
    for (const auto& r : rows) out << r.article_id << ',' << r.cits_4y << ',' << r.cits_8y << '\n';
}

}  // namespace imac
