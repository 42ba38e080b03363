#include "imac/corpus.hpp"

#include "imac/nn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace imac {

using nlohmann::json;
using nlohmann::ordered_json;

MetadataVector raw_metadata(const ArticleRecord& r) {
    MetadataVector m;
    m.values = {static_cast<double>(r.year),
                static_cast<double>(r.reference_count),
                r.reference_age,
                r.impact_reference,
                static_cast<double>(r.h_index),
                static_cast<double>(r.author_cit),
                static_cast<double>(r.author_papers)};
    m.normalized = false;
    return m;
}

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

bool integral_number(const json& v) {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
        const double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d && std::abs(d) < 9.0e15;
    }
    return false;
}

std::int64_t as_int(const json& v) {
    if (v.is_number_float()) return static_cast<std::int64_t>(v.get<double>());
    return v.get<std::int64_t>();
}

class FieldReader {
public:
    FieldReader(const json& obj, std::vector<std::string>& problems)
        : obj_(obj), problems_(problems) {}

    const json* find(std::string_view key, bool required) {
        const auto it = obj_.find(std::string(key));
        if (it == obj_.end() || it->is_null()) {
            if (required) problems_.push_back(std::string(key) + ": missing");
            return nullptr;
        }
        return &*it;
    }

    std::string text(std::string_view key, bool required = true) {
        const json* v = find(key, required);
        if (v == nullptr) return {};
        if (!v->is_string()) {
            problems_.push_back(std::string(key) + ": expected a string");
            return {};
        }
        std::string s = v->get<std::string>();
        if (required && s.find_first_not_of(" \t\r\n") == std::string::npos) {
            problems_.push_back(std::string(key) + ": empty");
        }
        return s;
    }

    std::int64_t count(std::string_view key, bool required = true) {
        const json* v = find(key, required);
        if (v == nullptr) return 0;
        if (!integral_number(*v)) {
            problems_.push_back(std::string(key) + ": expected an integer");
            return 0;
        }
        const std::int64_t n = as_int(*v);
        if (n < 0) problems_.push_back(std::string(key) + ": negative count");
        return n;
    }

    std::optional<double> real(std::string_view key, bool required = true) {
        const json* v = find(key, required);
        if (v == nullptr) return std::nullopt;
        if (!v->is_number()) {
            problems_.push_back(std::string(key) + ": expected a number");
            return std::nullopt;
        }
        const double d = v->get<double>();
        if (!std::isfinite(d)) {
            problems_.push_back(std::string(key) + ": not finite");
            return std::nullopt;
        }
        return d;
    }

    std::optional<ImpactLabel> label(std::string_view key) {
        const json* v = find(key, false);
        if (v == nullptr) return std::nullopt;
        if (v->is_string()) {
            if (auto l = parse_label(v->get<std::string>())) return l;
        }
        problems_.push_back(std::string(key) + ": expected \"high_impact\" or \"others\"");
        return std::nullopt;
    }

private:
    const json& obj_;
    std::vector<std::string>& problems_;
};

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error("invalid article: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

ArticleRecord parse_article(const json& j, const ValidationOptions& opts) {
    if (!j.is_object()) {
        throw ValidationError({"record is not a JSON object"});
    }
    std::vector<std::string> problems;
    FieldReader f(j, problems);
    ArticleRecord r;

    if (const json* id = f.find("id", true)) {
        if (id->is_string() && !id->get<std::string>().empty()) {
            r.id = id->get<std::string>();
        } else if (id->is_number_integer()) {
            r.id = std::to_string(id->get<std::int64_t>());
        } else {
            problems.emplace_back("id: expected a nonempty string");
        }
    }
    r.title = f.text("title");
    r.abstract = f.text("abstract");

    if (const json* y = f.find("year", true)) {
        if (!integral_number(*y)) {
            problems.emplace_back("year: expected an integer");
        } else {
            const std::int64_t year = as_int(*y);
            if (year < opts.min_year || year > opts.max_year) {
                problems.push_back("year: " + std::to_string(year) + " outside [" +
                                   std::to_string(opts.min_year) + ", " +
                                   std::to_string(opts.max_year) + "]");
            }
            r.year = static_cast<int>(year);
        }
    }
    r.reference_count = f.count("reference_count");
    r.reference_age = f.real("reference_age").value_or(0.0);
    if (auto ir = f.real("impact_reference")) {
        if (*ir < 0.0 || *ir > 1.0) problems.emplace_back("impact_reference: outside [0, 1]");
        r.impact_reference = *ir;
    }
    r.h_index = f.count("h_index");
    r.author_cit = f.count("author_cit");
    r.author_papers = f.count("author_papers");
    r.citations = f.count("citations", opts.require_outcome);
    r.journal_id = f.text("journal_id", opts.require_outcome);

    r.jif = f.real("jif", false);
    r.aif = f.real("aif", false);
    r.journal_label = f.label("journal_label");
    r.article_label = f.label("article_label");

    if (!problems.empty()) throw ValidationError(std::move(problems));
    return r;
}

ordered_json to_json(const ArticleRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["title"] = r.title;
    j["abstract"] = r.abstract;
    j["year"] = r.year;
    j["reference_count"] = r.reference_count;
    j["reference_age"] = r.reference_age;
    j["impact_reference"] = r.impact_reference;
    j["h_index"] = r.h_index;
    j["author_cit"] = r.author_cit;
    j["author_papers"] = r.author_papers;
    j["citations"] = r.citations;
    j["journal_id"] = r.journal_id;
    if (r.jif) j["jif"] = *r.jif;
    if (r.aif) j["aif"] = *r.aif;
    if (r.journal_label) j["journal_label"] = to_string(*r.journal_label);
    if (r.article_label) j["article_label"] = to_string(*r.article_label);
    return j;
}

std::string serialize(const ArticleRecord& r) {
    return to_json(r).dump();
}

IngestResult ingest_lines(std::istream& in, const ValidationOptions& opts) {
    IngestResult result;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            result.rejections.push_back({lineno, std::string("malformed JSON: ") + e.what()});
            continue;
        }
        try {
            ArticleRecord r = parse_article(j, opts);
            if (!seen.insert(r.id).second) {
                result.rejections.push_back({lineno, "duplicate id '" + r.id + "'"});
                continue;
            }
            result.records.push_back(std::move(r));
        } catch (const ValidationError& e) {
            result.rejections.push_back({lineno, join(e.problems(), "; ")});
        }
    }
    if (lineno == 0 || (result.records.empty() && result.rejections.empty())) {
        result.warnings.emplace_back("input contains no records");
    }
    return result;
}

IngestResult ingest(const std::filesystem::path& path, const ValidationOptions& opts) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return ingest_lines(in, opts);
}

void write_jsonl(const std::filesystem::path& path, std::span<const ArticleRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : records) out << serialize(r) << '\n';
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0 && val_fraction > 0.0 && test_fraction > 0.0)) {
        throw std::domain_error("split fractions must all be positive");
    }
    if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
        throw std::domain_error("split fractions must sum to 1");
    }
}

namespace {

// Largest-remainder allocation of `target` items across strata, each stratum
// asking for quota[c] and holding at most capacity[c].
std::vector<std::size_t> allocate(const std::vector<double>& quota,
                                  const std::vector<std::size_t>& capacity, std::size_t target) {
    const std::size_t k = quota.size();
    std::vector<std::size_t> take(k);
    std::size_t used = 0;
    for (std::size_t c = 0; c < k; ++c) {
        take[c] = std::min(capacity[c], static_cast<std::size_t>(std::floor(quota[c])));
        used += take[c];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return quota[a] - std::floor(quota[a]) > quota[b] - std::floor(quota[b]);
    });
    while (used < target) {
        bool progressed = false;
        for (std::size_t c : order) {
            if (used == target) break;
            if (take[c] < capacity[c]) {
                ++take[c];
                ++used;
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    while (used > target) {
        for (auto it = order.rbegin(); it != order.rend() && used > target; ++it) {
            if (take[*it] > 0) {
                --take[*it];
                --used;
            }
        }
    }
    return take;
}

}  // namespace

Splits split(std::span<const ArticleRecord> records, const SplitSpec& spec,
             std::optional<Task> stratify_on) {
    spec.validate();
    const std::size_t n = records.size();
    if (n == 0) throw std::domain_error("cannot split an empty corpus");

    const auto n_train = static_cast<std::size_t>(std::llround(n * spec.train_fraction));
    const auto n_val = static_cast<std::size_t>(std::llround(n * spec.val_fraction));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
        throw std::domain_error("split of " + std::to_string(n) +
                                " records leaves a partition empty");
    }
    const std::size_t n_test = n - n_train - n_val;

    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < n; ++i) {
        int key = 0;
        if (stratify_on) {
            const auto l = records[i].label(*stratify_on);
            if (!l) {
                throw std::domain_error("record '" + records[i].id + "' has no " +
                                        std::string(to_string(*stratify_on)) + " label");
            }
            key = to_int(*l);
        }
        strata[key].push_back(i);
    }

    Rng rng(spec.seed);
    std::vector<std::vector<std::size_t>> groups;
    for (auto& [key, idx] : strata) {
        std::shuffle(idx.begin(), idx.end(), rng);
        groups.push_back(idx);
    }

    std::vector<double> q_train, q_val;
    std::vector<std::size_t> cap(groups.size());
    for (std::size_t c = 0; c < groups.size(); ++c) {
        const double nc = static_cast<double>(groups[c].size());
        q_train.push_back(nc * spec.train_fraction);
        q_val.push_back(nc * spec.val_fraction);
        cap[c] = groups[c].size();
    }
    const auto take_train = allocate(q_train, cap, n_train);
    for (std::size_t c = 0; c < groups.size(); ++c) cap[c] -= take_train[c];
    const auto take_val = allocate(q_val, cap, n_val);

    std::vector<std::size_t> tr, va, te;
    for (std::size_t c = 0; c < groups.size(); ++c) {
        const auto& g = groups[c];
        const std::size_t a = take_train[c];
        const std::size_t b = a + take_val[c];
        tr.insert(tr.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(a));
        va.insert(va.end(), g.begin() + static_cast<std::ptrdiff_t>(a),
                  g.begin() + static_cast<std::ptrdiff_t>(b));
        te.insert(te.end(), g.begin() + static_cast<std::ptrdiff_t>(b), g.end());
    }
    if (tr.size() != n_train || va.size() != n_val || te.size() != n_test) {
        throw std::logic_error("split allocation does not match target sizes");
    }
    Splits out;
    auto gather = [&](std::vector<std::size_t>& idx, std::vector<ArticleRecord>& dst) {
        std::sort(idx.begin(), idx.end());
        dst.reserve(idx.size());
        for (std::size_t i : idx) dst.push_back(records[i]);
    };
    gather(tr, out.train);
    gather(va, out.val);
    gather(te, out.test);
    return out;
}

void write_ids(const std::filesystem::path& path, std::span<const ArticleRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : records) out << r.id << '\n';
}

std::vector<std::string> read_ids(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) ids.push_back(line);
    }
    return ids;
}

std::vector<ArticleRecord> select_by_ids(std::span<const ArticleRecord> records,
                                         std::span<const std::string> ids) {
    std::unordered_map<std::string, const ArticleRecord*> by_id;
    for (const auto& r : records) by_id.emplace(r.id, &r);
    std::vector<ArticleRecord> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw std::runtime_error("split references unknown id '" + id + "'");
        out.push_back(*it->second);
    }
    return out;
}

Normalizer Normalizer::fit(std::span<const ArticleRecord> train) {
    Normalizer nz;
    if (train.empty()) throw std::domain_error("cannot fit a normalizer on no records");
    const double n = static_cast<double>(train.size());
    for (std::size_t c = 0; c < kMetadataDim; ++c) {
        double sum = 0.0;
        for (const auto& r : train) sum += raw_metadata(r).values[c];
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& r : train) {
            const double dv = raw_metadata(r).values[c] - mean;
            ss += dv * dv;
        }
        nz.mean_[c] = mean;
        const double sd = std::sqrt(ss / n);
        // Treat roundoff-level spread as constant.
        nz.sd_[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 0.0;
    }
    return nz;
}

MetadataVector Normalizer::apply(const MetadataVector& raw) const {
    if (raw.normalized) return raw;
    MetadataVector out;
    for (std::size_t c = 0; c < kMetadataDim; ++c) {
        out.values[c] = sd_[c] > 0.0 ? (raw.values[c] - mean_[c]) / sd_[c] : 0.0;
    }
    out.normalized = true;
    return out;
}

ordered_json Normalizer::to_json() const {
    ordered_json j;
    j["kind"] = "zscore";
    j["fields"] = kMetadataFields;
    j["mean"] = mean_;
    j["sd"] = sd_;
    return j;
}

Normalizer Normalizer::from_json(const json& j) {
    Normalizer nz;
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto sd = j.at("sd").get<std::vector<double>>();
    if (mean.size() != kMetadataDim || sd.size() != kMetadataDim) {
        throw std::runtime_error("normalizer must have 7 columns");
    }
    std::copy(mean.begin(), mean.end(), nz.mean_.begin());
    std::copy(sd.begin(), sd.end(), nz.sd_.begin());
    return nz;
}

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto u = static_cast<unsigned char>(ch);
        if (std::isalnum(u) || u >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

ordered_json BaselineVocab::to_json() const {
    ordered_json j;
    j["stop_words"] = stop_word_list_version();
    j["terms"] = terms;
    return j;
}

BaselineVocab BaselineVocab::from_json(const json& j) {
    return {j.at("terms").get<std::vector<std::string>>()};
}

BaselineVocab build_vocab(std::span<const ArticleRecord> records, std::size_t k,
                          std::vector<std::string>* warnings) {
    if (records.empty()) throw std::domain_error("cannot build a vocabulary from no records");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& r : records) {
        for (const auto* text : {&r.title, &r.abstract}) {
            for (auto& w : words(*text)) {
                if (!is_stop_word(w)) ++counts[std::move(w)];
            }
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() < k && warnings != nullptr) {
        warnings->push_back("only " + std::to_string(ranked.size()) +
                            " distinct terms available; vocabulary has fewer than " +
                            std::to_string(k) + " entries");
    }
    BaselineVocab vocab;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        vocab.terms.push_back(ranked[i].first);
    }
    return vocab;
}

std::vector<double> BaselineFeatures::concatenated() const {
    std::vector<double> out = onehot;
    out.insert(out.end(), metadata.values.begin(), metadata.values.end());
    return out;
}

BaselineFeatures featurize_baseline(const ArticleRecord& r, const BaselineVocab& vocab,
                                    const Normalizer& normalizer) {
    std::set<std::string> present;
    for (auto& w : words(r.title)) present.insert(std::move(w));
    for (auto& w : words(r.abstract)) present.insert(std::move(w));
    BaselineFeatures f;
    f.onehot.reserve(vocab.terms.size());
    for (const auto& term : vocab.terms) {
        f.onehot.push_back(present.contains(term) ? 1.0 : 0.0);
    }
    f.metadata = normalizer.apply(r);
    return f;
}

}  // namespace imac
