#include "imac/model.hpp"
#include "imac/losses.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

namespace imac {
namespace {

using testing::random_bundle;
using testing::tiny_model_config;

struct Batch4 {
    ModelConfig cfg;
    ModelParams params;
    std::vector<FeatureBundle> bundles;
    std::vector<int> labels;
};

Batch4 make_batch(Index d, std::uint64_t seed, bool no_fusion = false, bool pooled = false) {
    Batch4 b;
    b.cfg = tiny_model_config(d);
    b.cfg.no_fusion = no_fusion;
    b.cfg.pooled_attention = pooled;
    b.params = init_model(b.cfg, seed);
    Rng rng(seed + 100);
    for (int i = 0; i < 4; ++i) b.bundles.push_back(random_bundle(rng, b.cfg, 4 + i, 5 + i));
    b.labels = {0, 1, 0, 1};
    return b;
}

TEST(Model, GradientCheckFullModel) {
    Batch4 b = make_batch(16, 3);
    const auto gc = testing::gradient_check(b.params, b.cfg, b.bundles, b.labels, LossConfig{});
    for (const auto& [group, err] : gc.per_group) EXPECT_LT(err, 1e-4) << group;
    EXPECT_LT(gc.max_rel_error, 1e-4) << gc.worst_param;
}

TEST(Model, GradientCheckNoFusion) {
    Batch4 b = make_batch(8, 5, true);
    const auto gc = testing::gradient_check(b.params, b.cfg, b.bundles, b.labels, LossConfig{});
    EXPECT_LT(gc.max_rel_error, 1e-4) << gc.worst_param;
}

TEST(Model, GradientCheckPooledAttention) {
    Batch4 b = make_batch(8, 6, false, true);
    const auto gc = testing::gradient_check(b.params, b.cfg, b.bundles, b.labels, LossConfig{});
    EXPECT_LT(gc.max_rel_error, 1e-4) << gc.worst_param;
}

TEST(Model, GradientCheckFirstTokenPoolingWithoutContrastive) {
    Batch4 b = make_batch(8, 8);
    b.cfg.encoder.pooling = Pooling::first_token;
    LossConfig loss;
    loss.alpha = 0.0;
    const auto gc = testing::gradient_check(b.params, b.cfg, b.bundles, b.labels, loss);
    EXPECT_LT(gc.max_rel_error, 1e-4) << gc.worst_param;
}

TEST(Model, ForwardPopulatesEveryTraceSymbol) {
    Batch4 b = make_batch(8, 1);
    const ForwardTrace t = forward(b.params, b.cfg, b.bundles[0]);
    for (const Vector* v : {&t.f_t, &t.f_a, &t.f_att, &t.f_o, &t.f_aff, &t.f_txt, &t.f_m, &t.f_u, &t.gate}) {
        EXPECT_EQ(v->size(), 8);
        EXPECT_TRUE(v->allFinite());
    }
    EXPECT_EQ(t.out.size(), 2);
    EXPECT_NEAR(t.p.sum(), 1.0, 1e-12);
}

TEST(Model, ForwardEqualsStageByStageComposition) {
    Batch4 b = make_batch(8, 2);
    const FeatureBundle& fb = b.bundles[1];
    const ForwardTrace t = forward(b.params, b.cfg, fb);

    const TextEncoding te = encode_text(fb.title, b.params.encoder, b.cfg.encoder, b.params.projection);
    const TextEncoding ae = encode_text(fb.abstract, b.params.encoder, b.cfg.encoder, b.params.projection);
    const Vector f_att = attention_fuse(te.tokens, ae.tokens, b.params.attention);
    const ResidualOutputs res = residual_merge(te.feature, ae.feature, f_att);
    const Vector gate = ms_cam(res.f_aff, b.params.mscam);
    const Vector f_txt = aff_fuse(res.f_o, f_att, gate);
    const Vector f_u = metadata_fuse(f_txt, fb.metadata, b.params.head);
    const Classification c = classify(f_u, b.params.head);

    EXPECT_EQ(t.f_t, te.feature);
    EXPECT_EQ(t.f_a, ae.feature);
    EXPECT_EQ(t.f_att, f_att);
    EXPECT_EQ(t.f_txt, f_txt);
    EXPECT_EQ(t.f_u, f_u);
    EXPECT_EQ(t.out, c.logits);
    EXPECT_EQ(t.p, c.p);
}

TEST(Model, NoFusionBypassesFusion) {
    Batch4 b = make_batch(8, 4, true);
    const ForwardTrace t = forward(b.params, b.cfg, b.bundles[0]);
    EXPECT_EQ(t.f_txt, t.f_o);
    EXPECT_EQ(t.f_o, t.f_t + t.f_a);
}

TEST(Model, DropoutOffIsDeterministic) {
    Batch4 b = make_batch(8, 4);
    const ForwardTrace a = forward(b.params, b.cfg, b.bundles[0]);
    const ForwardTrace c = forward(b.params, b.cfg, b.bundles[0]);
    EXPECT_EQ(a.p, c.p);
}

TEST(Model, DropoutOnVariesWithRng) {
    Batch4 b = make_batch(16, 4);
    b.cfg.dropout = 0.5;
    Rng rng(1);
    ForwardOptions fo{true, &rng};
    const ForwardTrace a = forward(b.params, b.cfg, b.bundles[0], fo);
    const ForwardTrace c = forward(b.params, b.cfg, b.bundles[0], fo);
    EXPECT_NE(a.f_att, c.f_att);
}

TEST(Model, SameSeedSameInit) {
    ModelConfig c1 = tiny_model_config(8), c2 = tiny_model_config(8);
    ModelParams a = init_model(c1, 9), b = init_model(c2, 9);
    auto va = param_views(a), vb = param_views(b);
    ASSERT_EQ(va.size(), vb.size());
    for (std::size_t i = 0; i < va.size(); ++i) {
        EXPECT_EQ(va[i].name, vb[i].name);
        EXPECT_EQ(va[i].map(), vb[i].map());
    }
}

TEST(Model, ParamViewsAreGroupedByStage) {
    ModelConfig cfg = tiny_model_config(8);
    ModelParams p = init_model(cfg, 1);
    std::set<std::string> groups;
    for (const auto& v : param_views(p)) groups.insert(v.name.substr(0, v.name.find('.')));
    EXPECT_EQ(groups, (std::set<std::string>{"encoder", "projection", "attention", "mscam", "head"}));
}

TEST(Model, ConfigJsonRoundTrip) {
    ModelConfig cfg = tiny_model_config(16);
    cfg.no_fusion = true;
    cfg.dropout = 0.2;
    const ModelConfig back = ModelConfig::from_json(nlohmann::json::parse(cfg.to_json().dump()));
    EXPECT_EQ(back.to_json(), cfg.to_json());
}

TEST(Model, RejectsIndivisibleReduction) {
    ModelConfig cfg = tiny_model_config(8);
    cfg.reduction = 3;
    EXPECT_THROW(cfg.validate(), std::domain_error);
}

}  // namespace
}  // namespace imac
