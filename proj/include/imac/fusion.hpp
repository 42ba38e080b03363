#pragma once
// Classifier head: title/abstract attention fusion, residual shortcut,
// MS-CAM gated attentional feature fusion, metadata fusion and the linear
// softmax classifier.  Each stage has a forward and a backward.

#include "imac/corpus.hpp"
#include "imac/nn.hpp"

#include <optional>

namespace imac {

struct AttentionParams {
    Matrix wq;  // d x d, applied as X * wq
    Matrix wk;
    Matrix wv;
    LayerNorm ln;
};

AttentionParams init_attention(Index d, Rng& rng);

struct AttentionCache {
    Matrix title;
    Matrix abstract;
    Matrix q, k, v;
    Matrix probs;   // title positions x abstract positions
    Vector pooled;  // mean over title positions of probs * v
    LayerNormCache ln;
    DropoutMask mask;
};

struct AttentionOptions {
    double dropout_rate = 0.0;
    Rng* rng = nullptr;  // required when dropout_rate > 0
};

// F_att = dropout(layernorm(mean_t softmax_rows(T Wq (A Wk)^T / sqrt(d)) A Wv)).
Vector attention_fuse(const Matrix& title_tokens, const Matrix& abstract_tokens,
                      const AttentionParams& params, const AttentionOptions& opts = {},
                      AttentionCache* cache = nullptr);

struct AttentionInputGrads {
    Matrix title;
    Matrix abstract;
};

AttentionInputGrads attention_fuse_backward(const AttentionParams& params, const AttentionCache& cache,
                                            const Vector& dout, AttentionParams& grad);

struct ResidualOutputs {
    Vector f_o;    // F_t + F_a
    Vector f_aff;  // F_o + F_att
};

ResidualOutputs residual_merge(const Vector& f_t, const Vector& f_a, const Vector& f_att);

struct MsCamBranch {
    Linear down;  // d -> d/r
    Linear up;    // d/r -> d
};

struct MsCamParams {
    MsCamBranch local;
    MsCamBranch global;
};

MsCamParams init_ms_cam(Index d, Index reduction, Rng& rng);

struct MsCamCache {
    Vector input;
    Vector global_input;  // mean(input) broadcast to d channels
    Vector local_hidden;  // post-ReLU
    Vector global_hidden;
    Vector gate;
};

// Channel gate in (0, 1)^d: sigmoid(local(x) + global(mean(x) * 1)), each
// branch a ReLU bottleneck d -> d/r -> d.
Vector ms_cam(const Vector& f_aff, const MsCamParams& params, MsCamCache* cache = nullptr);
Vector ms_cam_backward(const MsCamParams& params, const MsCamCache& cache, const Vector& dgate,
                       MsCamParams& grad);

// F_txt = M * F_o + (1 - M) * F_att (element-wise).
Vector aff_fuse(const Vector& f_o, const Vector& f_att, const Vector& gate);

struct HeadParams {
    Linear fc0;         // 7 -> d
    Linear fc1;         // d -> d
    Linear classifier;  // d -> 2
};

HeadParams init_head(Index d, Rng& rng);

struct MetadataCache {
    Vector f_txt;
    Vector x_m;
    Vector f_m;
    Vector product;
};

// F_u = fc1(F_txt * fc0(x_m)).  Throws std::domain_error when x_m has not
// been normalized.
Vector metadata_fuse(const Vector& f_txt, const MetadataVector& x_m, const HeadParams& params,
                     MetadataCache* cache = nullptr);

struct Classification {
    Vector logits;
    Vector p;
};

Classification classify(const Vector& f_u, const HeadParams& params);

// Every intermediate symbol of one forward pass.
struct ForwardTrace {
    Vector f_t, f_a, f_att, f_o, f_aff, f_txt, f_m, f_u;
    Vector gate;  // M(F_aff); empty when fusion is bypassed
    Vector out;   // logits
    Vector p;
    Matrix attention_probs;
};

}  // namespace imac
