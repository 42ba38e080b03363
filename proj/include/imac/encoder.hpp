#pragma once
// Text encoder: token ids -> per-token d-vectors -> pooled d-vector ->
// projected nonlinearity L1 * gelu(L2 * v).
//
// The token-level encoder is a post-LN transformer (BERT layout): token +
// position embeddings, embedding LayerNorm, then `layers` blocks of
// multi-head self-attention and a GELU feed-forward, each followed by a
// residual LayerNorm.  The same structure serves two sources of weights:
// random initialization (small_trainable) and a checkpoint directory
// (pretrained_checkpoint).

#include "imac/nn.hpp"
#include "imac/tokenizer.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace imac {

enum class EncoderKind { small_trainable, pretrained_checkpoint };
enum class Pooling { mean, first_token };

struct EncoderConfig {
    Index d = 768;
    EncoderKind kind = EncoderKind::small_trainable;
    Pooling pooling = Pooling::mean;
    Index layers = 2;
    Index heads = 4;
    Index ff_dim = 0;  // 0 means 4 * d
    Index vocab_size = 0;
    Index max_positions = 512;
    double layer_norm_eps = 1e-5;
    std::string checkpoint_dir;  // pretrained_checkpoint only
    bool freeze = false;         // exclude encoder weights from optimization

    Index ff() const { return ff_dim > 0 ? ff_dim : 4 * d; }
    void validate() const;

    nlohmann::ordered_json to_json() const;
    static EncoderConfig from_json(const nlohmann::json& j);
};

struct EncoderLayer {
    Linear q, k, v, o;
    LayerNorm ln1;
    Linear ff1, ff2;
    LayerNorm ln2;
};

struct EncoderParams {
    Matrix token_embedding;     // vocab x d
    Matrix position_embedding;  // max_positions x d
    LayerNorm embed_ln;
    std::vector<EncoderLayer> layers;
};

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng);
EncoderParams zeros_like(const EncoderParams& p);
void append_views(std::vector<ParamView>& out, const std::string& prefix, EncoderParams& p);

struct EncoderLayerCache {
    Matrix input;
    Matrix q, k, v;
    std::vector<Matrix> probs;  // per head, n x n
    Matrix attended;            // concatenated heads, before the output map
    LayerNormCache ln1;
    Matrix h1;
    Matrix ff_pre;
    Matrix ff_act;
    LayerNormCache ln2;
};

struct EncoderCache {
    std::vector<std::int32_t> ids;
    LayerNormCache embed;
    std::vector<EncoderLayerCache> layers;
};

// One d-vector per token.  Throws std::domain_error on out-of-range ids or
// sequences longer than max_positions.
Matrix encode_tokens(const TokenSequence& seq, const EncoderParams& params,
                     const EncoderConfig& cfg, EncoderCache* cache = nullptr);

void encode_tokens_backward(const EncoderParams& params, const EncoderConfig& cfg,
                            const EncoderCache& cache, const Matrix& dout, EncoderParams& grad);

Vector pool(const Matrix& tokens, Pooling mode = Pooling::mean);
Matrix pool_backward(Index rows, const Vector& dv, Pooling mode = Pooling::mean);

struct ProjectionParams {
    Matrix l1;  // d x d
    Matrix l2;  // d x d
};

ProjectionParams init_projection(Index d, Rng& rng);

// Scalar nonlinearity and its derivative.  Tests swap in the identity to
// check the linear wiring separately from GELU.
struct Activation {
    double (*f)(double);
    double (*df)(double);

    static Activation gelu();
    static Activation identity();
};

struct ProjectionCache {
    Vector input;
    Vector pre;  // L2 * v
};

Vector project(const Vector& v, const ProjectionParams& params, ProjectionCache* cache = nullptr,
               Activation act = Activation::gelu());
Vector project_backward(const ProjectionParams& params, const ProjectionCache& cache,
                        const Vector& dy, ProjectionParams& grad,
                        Activation act = Activation::gelu());

struct TextEncoding {
    Matrix tokens;   // un-pooled encoder output, kept for token-level fusion
    Vector pooled;
    Vector feature;  // projected
    EncoderCache encoder_cache;
    ProjectionCache projection_cache;
};

TextEncoding encode_text(const TokenSequence& seq, const EncoderParams& params,
                         const EncoderConfig& cfg, const ProjectionParams& proj);

// Checkpoint directory layout: config.json (BERT-style keys hidden_size,
// num_hidden_layers, num_attention_heads, intermediate_size, vocab_size,
// max_position_embeddings, layer_norm_eps), weights.bin (tensor file with
// "encoder.*" names) and vocab.txt.  `cfg.d` must equal hidden_size.
EncoderParams load_encoder_checkpoint(EncoderConfig& cfg);
void save_encoder_checkpoint(const std::filesystem::path& dir, const EncoderConfig& cfg,
                             EncoderParams& params);

}  // namespace imac
