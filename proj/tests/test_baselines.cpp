#include "imac/baselines.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>

namespace imac {
namespace {

Example ex(const std::string& id, std::vector<double> x, int label) { return {id, std::move(x), label}; }

std::vector<Example> separable_1d() {
    return {ex("a", {-2.0}, 0), ex("b", {-1.5}, 0), ex("c", {-1.0}, 0),
            ex("d", {1.0}, 1),  ex("e", {1.5}, 1),  ex("f", {2.0}, 1)};
}

TEST(ZeroR, StoresMajorityWithTiesToZero) {
    BaselineModel z(BaselineKind::zeror);
    const std::vector<Example> train{ex("a", {0}, 1), ex("b", {0}, 1), ex("c", {0}, 0)};
    z.fit(train);
    EXPECT_EQ(z.majority(), 1);
    const std::vector<double> anything{42.0};
    EXPECT_EQ(z.predict(anything), 1);

    BaselineModel tie(BaselineKind::zeror);
    const std::vector<Example> even{ex("a", {0}, 1), ex("b", {0}, 0)};
    tie.fit(even);
    EXPECT_EQ(tie.majority(), 0);
}

TEST(ZeroR, AccuracyEqualsMajorityFraction) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Example> xs;
        const std::size_t n = 5 + static_cast<std::size_t>(uniform01(rng) * 40);
        std::size_t ones = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const int y = uniform01(rng) < 0.3 ? 1 : 0;
            ones += static_cast<std::size_t>(y);
            xs.push_back(ex(std::to_string(i), {uniform01(rng)}, y));
        }
        BaselineModel z(BaselineKind::zeror);
        z.fit(xs);
        const double expected =
            static_cast<double>(std::max(ones, n - ones)) / static_cast<double>(n);
        EXPECT_NEAR(evaluate(z, xs).accuracy, expected, 1e-15);
    }
}

TEST(Baselines, PredictBeforeFitThrows) {
    const std::vector<double> x{1.0};
    for (BaselineKind k : kAllBaselines) EXPECT_THROW(BaselineModel(k).predict(x), std::logic_error);
}

TEST(Linear, SeparableDataIsFitExactly) {
    for (BaselineKind k : {BaselineKind::svm, BaselineKind::lr}) {
        BaselineModel m(k);
        const auto train = separable_1d();
        m.fit(train);
        EXPECT_EQ(evaluate(m, train).accuracy, 1.0) << to_string(k);
        EXPECT_GT(m.weights()[0], 0.0);
    }
}

TEST(Linear, ObjectiveIsNonIncreasing) {
    Rng rng(2);
    std::vector<Example> xs;
    for (int i = 0; i < 60; ++i) {
        const int y = i % 2;
        xs.push_back(ex(std::to_string(i), {uniform(rng, -1, 1) + y, uniform(rng, -1, 1), uniform(rng, -1, 1)}, y));
    }
    for (BaselineKind k : {BaselineKind::svm, BaselineKind::lr}) {
        BaselineModel m(k);
        m.fit(xs);
        const auto& h = m.loss_history();
        ASSERT_EQ(h.size(), 501u);
        for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LE(h[i], h[i - 1]) << to_string(k) << " at " << i;
    }
}

TEST(Linear, PredictionIsTheSignOfTheScore) {
    Rng rng(3);
    std::vector<Example> xs;
    for (int i = 0; i < 40; ++i) {
        const int y = i % 2;
        xs.push_back(ex(std::to_string(i), {uniform(rng, -1, 1) + 0.5 * y, uniform(rng, -1, 1)}, y));
    }
    BaselineModel m(BaselineKind::lr);
    m.fit(xs);
    for (const auto& e : xs) {
        const double s = m.score(e.x);
        EXPECT_EQ(m.predict(e.x), s > 0 ? 1 : 0);
    }
    BaselineModel knn(BaselineKind::knn);
    knn.fit(xs);
    EXPECT_THROW(knn.score(xs[0].x), std::logic_error);
}

TEST(Linear, SingleClassWarns) {
    const std::vector<Example> xs{ex("a", {1.0}, 1), ex("b", {2.0}, 1)};
    BaselineModel m(BaselineKind::svm);
    std::vector<std::string> warnings;
    m.fit(xs, &warnings);
    EXPECT_FALSE(warnings.empty());
}

TEST(Knn, KOneReturnsOwnLabel) {
    Rng rng(4);
    std::vector<Example> xs;
    for (int i = 0; i < 30; ++i) {
        xs.push_back(ex(std::to_string(i), {uniform(rng, -5, 5), uniform(rng, -5, 5)},
                        uniform01(rng) < 0.5 ? 1 : 0));
    }
    BaselineModel m(BaselineKind::knn, {1});
    m.fit(xs);
    for (const auto& e : xs) EXPECT_EQ(m.predict(e.x), e.label);
}

int brute_knn(const std::vector<Example>& train, const std::vector<double>& q, std::size_t k) {
    std::vector<std::pair<double, std::string>> d;
    std::map<std::string, int> label;
    for (const auto& e : train) {
        double s = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) s += (e.x[j] - q[j]) * (e.x[j] - q[j]);
        d.emplace_back(s, e.id);
        label[e.id] = e.label;
    }
    std::sort(d.begin(), d.end());
    int votes = 0;
    for (std::size_t i = 0; i < k; ++i) votes += label[d[i].second];
    return 2 * votes > static_cast<int>(k) ? 1 : 0;
}

TEST(Knn, MatchesBruteForceAndIsOrderInvariant) {
    const std::vector<Example> train{ex("p1", {0, 0}, 1), ex("p2", {1, 0}, 0), ex("p3", {0, 1}, 1),
                                     ex("p4", {3, 3}, 0), ex("p5", {2, 2}, 0)};
    BaselineModel m(BaselineKind::knn, {3});
    m.fit(train);
    std::vector<Example> reversed(train.rbegin(), train.rend());
    BaselineModel r(BaselineKind::knn, {3});
    r.fit(reversed);
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> q{uniform(rng, -1, 4), uniform(rng, -1, 4)};
        EXPECT_EQ(m.predict(q), brute_knn(train, q, 3));
        EXPECT_EQ(r.predict(q), m.predict(q));
    }
    const std::vector<double> origin{0, 0};
    EXPECT_EQ(m.predict(origin), 1);
}

TEST(Knn, DistanceTiesGoToSmallerId) {
    const std::vector<Example> train{ex("b", {1}, 1), ex("a", {-1}, 0)};
    BaselineModel m(BaselineKind::knn, {1});
    m.fit(train);
    const std::vector<double> mid{0};
    EXPECT_EQ(m.predict(mid), 0);
}

TEST(Examples, FeatureLayout) {
    std::vector<ArticleRecord> records{testing::make_record("a", "graphene sensor", "graphene layers"),
                                       testing::make_record("b", "protein folding", "protein dynamics")};
    records[0].journal_label = ImpactLabel::high_impact;
    records[1].journal_label = ImpactLabel::others;
    const BaselineVocab vocab = build_vocab(records, 3);
    const Normalizer norm = Normalizer::fit(records);
    const auto xs = make_examples(records, Task::journal_impact, vocab, norm);
    ASSERT_EQ(xs.size(), 2u);
    EXPECT_EQ(xs[0].x.size(), vocab.terms.size() + kMetadataDim);
    EXPECT_EQ(xs[0].label, 1);
    EXPECT_EQ(xs[1].label, 0);
    EXPECT_THROW(make_examples(records, Task::article_impact, vocab, norm), std::domain_error);
}

TEST(Kinds, ParseRoundTrip) {
    for (BaselineKind k : kAllBaselines) EXPECT_EQ(parse_baseline_kind(to_string(k)), k);
    EXPECT_THROW(parse_baseline_kind("forest"), std::exception);
}

}  // namespace
}  // namespace imac
