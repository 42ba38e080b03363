#pragma once
// The full network: shared text encoder for title and abstract, fusion head,
// metadata fusion and classifier, with a batch-free forward/backward over a
// single FeatureBundle.

#include "imac/corpus.hpp"
#include "imac/encoder.hpp"
#include "imac/fusion.hpp"
#include "imac/tokenizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace imac {

struct ModelConfig {
    EncoderConfig encoder;
    Index reduction = 4;     // MS-CAM bottleneck ratio
    double dropout = 0.1;    // on the attention-fusion output, training only
    bool no_fusion = false;  // ablation: F_txt = F_o, attention and AFF bypassed
    // Ablation: attend between the pooled title and abstract vectors instead
    // of their token sequences (single-key softmax, always 1).
    bool pooled_attention = false;
    std::size_t title_max_len = kDefaultTitleLength;
    std::size_t abstract_max_len = kDefaultAbstractLength;

    Index d() const { return encoder.d; }
    void validate() const;

    nlohmann::ordered_json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

struct ModelParams {
    EncoderParams encoder;
    ProjectionParams projection;
    AttentionParams attention;
    MsCamParams mscam;
    HeadParams head;
};

// Weights of every linear map ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); layer
// norms start at gain 1, bias 0.  With a pretrained_checkpoint encoder the
// encoder weights come from the checkpoint directory instead.
ModelParams init_model(ModelConfig& cfg, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& p);

// Named views grouped by stage: encoder.*, projection.*, attention.*,
// mscam.*, head.*.
std::vector<ParamView> param_views(ModelParams& p);

struct FeatureBundle {
    TokenSequence title;
    TokenSequence abstract;
    MetadataVector metadata;
};

FeatureBundle make_bundle(const ArticleRecord& r, const Tokenizer& tok, const Normalizer& norm,
                          const ModelConfig& cfg);

struct ForwardCache {
    TextEncoding title;
    TextEncoding abstract;
    AttentionCache attention;
    MsCamCache mscam;
    MetadataCache metadata;
    ForwardTrace trace;
};

struct ForwardOptions {
    bool training = false;  // enables dropout
    Rng* rng = nullptr;
};

ForwardTrace forward(const ModelParams& params, const ModelConfig& cfg, const FeatureBundle& bundle,
                     const ForwardOptions& opts = {}, ForwardCache* cache = nullptr);

// Accumulates into `grad` the gradient of a loss whose partial derivatives
// are d_logits (w.r.t. the classifier output) and d_features (w.r.t. F_u,
// from losses that read the feature directly; may be empty).
void backward(const ModelParams& params, const ModelConfig& cfg, const ForwardCache& cache,
              const Vector& d_logits, const Vector& d_features, ModelParams& grad);

}  // namespace imac
