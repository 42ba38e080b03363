#include "imac/encoder.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace imac {
namespace {

EncoderConfig small_config(Index d = 16) {
    EncoderConfig cfg;
    cfg.d = d;
    cfg.layers = 2;
    cfg.heads = 4;
    cfg.vocab_size = 30;
    cfg.max_positions = 16;
    return cfg;
}

TEST(Encoder, ShapeAndDeterminism) {
    const EncoderConfig cfg = small_config();
    Rng rng(1);
    const EncoderParams p = init_encoder(cfg, rng);
    const TokenSequence one{{5}};
    EXPECT_EQ(encode_tokens(one, p, cfg).rows(), 1);
    EXPECT_EQ(encode_tokens(one, p, cfg).cols(), 16);
    const TokenSequence seq{{2, 7, 9, 3}};
    EXPECT_EQ(encode_tokens(seq, p, cfg), encode_tokens(seq, p, cfg));
}

TEST(Encoder, ZeroWeightsGiveEqualRows) {
    const EncoderConfig cfg = small_config();
    Rng rng(1);
    const EncoderParams p = zeros_like(init_encoder(cfg, rng));
    const Matrix out = encode_tokens(TokenSequence{{2, 7, 9, 3}}, p, cfg);
    for (Index r = 1; r < out.rows(); ++r) EXPECT_LT((out.row(r) - out.row(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Encoder, OutOfRangeIdsAndLength) {
    const EncoderConfig cfg = small_config();
    Rng rng(1);
    const EncoderParams p = init_encoder(cfg, rng);
    EXPECT_THROW(encode_tokens(TokenSequence{{2, 30}}, p, cfg), std::domain_error);
    EXPECT_THROW(encode_tokens(TokenSequence{{-1}}, p, cfg), std::domain_error);
    EXPECT_THROW(encode_tokens(TokenSequence{std::vector<std::int32_t>(17, 4)}, p, cfg), std::domain_error);
}

TEST(Encoder, OutputWidthIsDForAnyLength) {
    EncoderConfig cfg = small_config(768);
    cfg.layers = 1;
    cfg.heads = 12;
    cfg.ff_dim = 64;
    Rng rng(2);
    const EncoderParams p = init_encoder(cfg, rng);
    const ProjectionParams proj = init_projection(768, rng);
    for (std::size_t n : {1u, 3u, 9u}) {
        const TextEncoding e = encode_text(TokenSequence{std::vector<std::int32_t>(n, 5)}, p, cfg, proj);
        EXPECT_EQ(e.feature.size(), 768);
        EXPECT_EQ(e.tokens.rows(), static_cast<Index>(n));
    }
}

TEST(Encoder, GradientCheckOnProbeLoss) {
    const EncoderConfig cfg = small_config();
    Rng rng(3);
    EncoderParams p = init_encoder(cfg, rng);
    const TokenSequence seq{{2, 11, 4, 17, 3}};
    Matrix w(5, 16);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng, -1, 1);
    auto loss = [&](const EncoderParams& q) { return (encode_tokens(seq, q, cfg).array() * w.array()).sum(); };

    EncoderCache cache;
    encode_tokens(seq, p, cfg, &cache);
    EncoderParams grad = zeros_like(p);
    encode_tokens_backward(p, cfg, cache, w, grad);

    std::vector<ParamView> pv, gv;
    append_views(pv, "encoder", p);
    append_views(gv, "encoder", grad);
    double worst = 0.0;
    for (std::size_t v = 0; v < pv.size(); ++v) {
        for (Index k = 0; k < pv[v].size(); ++k) {
            double& x = pv[v].data[k];
            const double saved = x;
            x = saved + 1e-5;
            const double up = loss(p);
            x = saved - 1e-5;
            const double down = loss(p);
            x = saved;
            const double num = (up - down) / 2e-5;
            const double an = gv[v].data[k];
            worst = std::max(worst, std::abs(an - num) / std::max({std::abs(an), std::abs(num), 1e-6}));
        }
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(Pool, MeanAndFirstToken) {
    Matrix one(1, 3);
    one << 1, 2, 3;
    EXPECT_EQ(pool(one), Vector(one.row(0).transpose()));
    Matrix sym(2, 3);
    sym << 1, -2, 3, -1, 2, -3;
    EXPECT_EQ(pool(sym), Vector::Zero(3));
    Matrix three(3, 2);
    three << 1, 4, 2, 5, 6, 9;
    const Vector m = pool(three);
    EXPECT_DOUBLE_EQ(m[0], 3.0);
    EXPECT_DOUBLE_EQ(m[1], 6.0);
    EXPECT_EQ(pool(three, Pooling::first_token), Vector(three.row(0).transpose()));
}

TEST(Project, Examples) {
    ProjectionParams id{Matrix::Identity(4, 4), Matrix::Identity(4, 4)};
    EXPECT_EQ(project(Vector::Zero(4), id), Vector::Zero(4));
    const Vector tens = project(Vector::Constant(4, 10.0), id);
    EXPECT_LT((tens.array() - 10.0).abs().maxCoeff(), 1e-6);
    ProjectionParams twice{2.0 * Matrix::Identity(4, 4), Matrix::Identity(4, 4)};
    const Vector ones = project(Vector::Ones(4), twice);
    EXPECT_LT((ones.array() - 2.0 * gelu(1.0)).abs().maxCoeff(), 1e-15);
    EXPECT_NEAR(ones[0], 1.68269, 1e-5);
    EXPECT_THROW(project(Vector::Ones(3), id), std::domain_error);
}

TEST(Project, LinearUnderIdentityHook) {
    Rng rng(5);
    const ProjectionParams p = init_projection(6, rng);
    Vector a(6), b(6);
    for (Index i = 0; i < 6; ++i) {
        a[i] = uniform(rng, -1, 1);
        b[i] = uniform(rng, -1, 1);
    }
    const Activation id = Activation::identity();
    const Vector lhs = project(2.0 * a - 3.0 * b, p, nullptr, id);
    const Vector rhs = 2.0 * project(a, p, nullptr, id) - 3.0 * project(b, p, nullptr, id);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((project(a, p, nullptr, id) - p.l1 * p.l2 * a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EncodeText, EqualsManualChaining) {
    const EncoderConfig cfg = small_config();
    Rng rng(6);
    const EncoderParams p = init_encoder(cfg, rng);
    const ProjectionParams proj = init_projection(16, rng);
    const TokenSequence seq{{2, 5, 6, 3}};
    const TextEncoding e = encode_text(seq, p, cfg, proj);
    const Matrix tokens = encode_tokens(seq, p, cfg);
    EXPECT_EQ(e.tokens, tokens);
    EXPECT_EQ(e.pooled, pool(tokens));
    EXPECT_EQ(e.feature, project(pool(tokens), proj));
}

TEST(Checkpoint, PretrainedAdapterRoundTrip) {
    EncoderConfig cfg = small_config();
    Rng rng(7);
    EncoderParams p = init_encoder(cfg, rng);
    const auto dir = testing::scratch_dir("encoder_ckpt");
    save_encoder_checkpoint(dir, cfg, p);
    EncoderConfig load_cfg;
    load_cfg.d = 16;
    load_cfg.kind = EncoderKind::pretrained_checkpoint;
    load_cfg.checkpoint_dir = dir.string();
    const EncoderParams back = load_encoder_checkpoint(load_cfg);
    EXPECT_EQ(load_cfg.layers, 2);
    EXPECT_EQ(load_cfg.vocab_size, 30);
    const TokenSequence seq{{2, 5, 6, 3}};
    EXPECT_EQ(encode_tokens(seq, back, load_cfg), encode_tokens(seq, p, cfg));

    load_cfg.d = 32;
    EXPECT_THROW(load_encoder_checkpoint(load_cfg), std::domain_error);
}

}  // namespace
}  // namespace imac
