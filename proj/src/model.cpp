#include "imac/model.hpp"

#include <stdexcept>

namespace imac {

using nlohmann::json;
using nlohmann::ordered_json;

void ModelConfig::validate() const {
    encoder.validate();
    if (reduction <= 0 || encoder.d % reduction != 0) {
        throw std::domain_error("d must be divisible by the MS-CAM reduction ratio");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::domain_error("dropout rate must lie in [0, 1)");
    if (title_max_len < 2 || abstract_max_len < 2) {
        throw std::domain_error("token length limits must be at least 2");
    }
}

ordered_json ModelConfig::to_json() const {
    ordered_json j;
    j["encoder"] = encoder.to_json();
    j["reduction"] = reduction;
    j["dropout"] = dropout;
    j["no_fusion"] = no_fusion;
    j["pooled_attention"] = pooled_attention;
    j["title_max_len"] = title_max_len;
    j["abstract_max_len"] = abstract_max_len;
    return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    if (j.contains("encoder")) c.encoder = EncoderConfig::from_json(j["encoder"]);
    c.reduction = j.value("reduction", c.reduction);
    c.dropout = j.value("dropout", c.dropout);
    c.no_fusion = j.value("no_fusion", c.no_fusion);
    c.pooled_attention = j.value("pooled_attention", c.pooled_attention);
    c.title_max_len = j.value("title_max_len", c.title_max_len);
    c.abstract_max_len = j.value("abstract_max_len", c.abstract_max_len);
    return c;
}

ModelParams init_model(ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0));
    ModelParams p;
    if (cfg.encoder.kind == EncoderKind::pretrained_checkpoint) {
        p.encoder = load_encoder_checkpoint(cfg.encoder);
    } else {
        cfg.encoder.max_positions = std::max<Index>(
            cfg.encoder.max_positions,
            static_cast<Index>(std::max(cfg.title_max_len, cfg.abstract_max_len)));
        p.encoder = init_encoder(cfg.encoder, rng);
    }
    cfg.validate();
    const Index d = cfg.d();
    p.projection = init_projection(d, rng);
    p.attention = init_attention(d, rng);
    p.mscam = init_ms_cam(d, cfg.reduction, rng);
    p.head = init_head(d, rng);
    return p;
}

namespace {

Linear zeros_like(const Linear& l) { return Linear::zeros(l.in_dim(), l.out_dim()); }

Matrix zeros_like(const Matrix& m) { return Matrix::Zero(m.rows(), m.cols()); }

}  // namespace

ModelParams zeros_like(const ModelParams& p) {
    ModelParams g;
    g.encoder = zeros_like(p.encoder);
    g.projection = {zeros_like(p.projection.l1), zeros_like(p.projection.l2)};
    g.attention.wq = zeros_like(p.attention.wq);
    g.attention.wk = zeros_like(p.attention.wk);
    g.attention.wv = zeros_like(p.attention.wv);
    g.attention.ln = {Vector::Zero(p.attention.ln.gain.size()),
                      Vector::Zero(p.attention.ln.bias.size()), p.attention.ln.eps};
    g.mscam.local = {zeros_like(p.mscam.local.down), zeros_like(p.mscam.local.up)};
    g.mscam.global = {zeros_like(p.mscam.global.down), zeros_like(p.mscam.global.up)};
    g.head = {zeros_like(p.head.fc0), zeros_like(p.head.fc1), zeros_like(p.head.classifier)};
    return g;
}

std::vector<ParamView> param_views(ModelParams& p) {
    std::vector<ParamView> v;
    append_views(v, "encoder", p.encoder);
    v.push_back(view("projection.l1", p.projection.l1));
    v.push_back(view("projection.l2", p.projection.l2));
    v.push_back(view("attention.wq", p.attention.wq));
    v.push_back(view("attention.wk", p.attention.wk));
    v.push_back(view("attention.wv", p.attention.wv));
    append_views(v, "attention.ln", p.attention.ln);
    append_views(v, "mscam.local.down", p.mscam.local.down);
    append_views(v, "mscam.local.up", p.mscam.local.up);
    append_views(v, "mscam.global.down", p.mscam.global.down);
    append_views(v, "mscam.global.up", p.mscam.global.up);
    append_views(v, "head.fc0", p.head.fc0);
    append_views(v, "head.fc1", p.head.fc1);
    append_views(v, "head.classifier", p.head.classifier);
    return v;
}

FeatureBundle make_bundle(const ArticleRecord& r, const Tokenizer& tok, const Normalizer& norm,
                          const ModelConfig& cfg) {
    return {tokenize(tok, r.title, cfg.title_max_len), tokenize(tok, r.abstract, cfg.abstract_max_len),
            norm.apply(r)};
}

ForwardTrace forward(const ModelParams& params, const ModelConfig& cfg, const FeatureBundle& bundle,
                     const ForwardOptions& opts, ForwardCache* cache) {
    ForwardCache local;
    ForwardCache& c = cache != nullptr ? *cache : local;

    c.title = encode_text(bundle.title, params.encoder, cfg.encoder, params.projection);
    c.abstract = encode_text(bundle.abstract, params.encoder, cfg.encoder, params.projection);

    ForwardTrace t;
    t.f_t = c.title.feature;
    t.f_a = c.abstract.feature;
    if (cfg.no_fusion) {
        t.f_o = t.f_t + t.f_a;
        t.f_att = Vector::Zero(cfg.d());
        t.f_aff = t.f_o;
        t.f_txt = t.f_o;
    } else {
        AttentionOptions ao;
        if (opts.training && cfg.dropout > 0.0) {
            ao.dropout_rate = cfg.dropout;
            ao.rng = opts.rng;
        }
        if (cfg.pooled_attention) {
            t.f_att = attention_fuse(t.f_t.transpose(), t.f_a.transpose(), params.attention, ao,
                                     &c.attention);
        } else {
            t.f_att = attention_fuse(c.title.tokens, c.abstract.tokens, params.attention, ao,
                                     &c.attention);
        }
        t.attention_probs = c.attention.probs;
        const ResidualOutputs res = residual_merge(t.f_t, t.f_a, t.f_att);
        t.f_o = res.f_o;
        t.f_aff = res.f_aff;
        t.gate = ms_cam(t.f_aff, params.mscam, &c.mscam);
        t.f_txt = aff_fuse(t.f_o, t.f_att, t.gate);
    }
    t.f_u = metadata_fuse(t.f_txt, bundle.metadata, params.head, &c.metadata);
    t.f_m = c.metadata.f_m;
    const Classification cls = classify(t.f_u, params.head);
    t.out = cls.logits;
    t.p = cls.p;
    c.trace = t;
    return t;
}

void backward(const ModelParams& params, const ModelConfig& cfg, const ForwardCache& c,
              const Vector& d_logits, const Vector& d_features, ModelParams& grad) {
    const ForwardTrace& t = c.trace;
    Vector d_fu = linear_backward(params.head.classifier, t.f_u, d_logits, grad.head.classifier);
    if (d_features.size() > 0) d_fu += d_features;

    const Vector d_product = linear_backward(params.head.fc1, c.metadata.product, d_fu, grad.head.fc1);
    const Vector d_ftxt = d_product.cwiseProduct(c.metadata.f_m);
    const Vector d_fm = d_product.cwiseProduct(c.metadata.f_txt);
    linear_backward(params.head.fc0, c.metadata.x_m, d_fm, grad.head.fc0);

    Vector d_fo;
    Vector d_ft_extra, d_fa_extra;
    Matrix d_title_tokens = Matrix::Zero(c.title.tokens.rows(), cfg.d());
    Matrix d_abstract_tokens = Matrix::Zero(c.abstract.tokens.rows(), cfg.d());
    if (cfg.no_fusion) {
        d_fo = d_ftxt;
    } else {
        const Vector d_gate = d_ftxt.cwiseProduct(t.f_o - t.f_att);
        d_fo = d_ftxt.cwiseProduct(t.gate);
        Vector d_fatt = d_ftxt.cwiseProduct((1.0 - t.gate.array()).matrix());
        const Vector d_faff = ms_cam_backward(params.mscam, c.mscam, d_gate, grad.mscam);
        d_fo += d_faff;
        d_fatt += d_faff;
        const AttentionInputGrads ag =
            attention_fuse_backward(params.attention, c.attention, d_fatt, grad.attention);
        if (cfg.pooled_attention) {
            d_ft_extra = ag.title.transpose();
            d_fa_extra = ag.abstract.transpose();
        } else {
            d_title_tokens += ag.title;
            d_abstract_tokens += ag.abstract;
        }
    }

    Vector d_ft = d_fo;
    Vector d_fa = d_fo;
    if (d_ft_extra.size() > 0) {
        d_ft += d_ft_extra;
        d_fa += d_fa_extra;
    }
    const Vector d_pool_t =
        project_backward(params.projection, c.title.projection_cache, d_ft, grad.projection);
    const Vector d_pool_a =
        project_backward(params.projection, c.abstract.projection_cache, d_fa, grad.projection);

    if (cfg.encoder.freeze) return;
    d_title_tokens += pool_backward(c.title.tokens.rows(), d_pool_t, cfg.encoder.pooling);
    d_abstract_tokens += pool_backward(c.abstract.tokens.rows(), d_pool_a, cfg.encoder.pooling);
    encode_tokens_backward(params.encoder, cfg.encoder, c.title.encoder_cache, d_title_tokens,
                           grad.encoder);
    encode_tokens_backward(params.encoder, cfg.encoder, c.abstract.encoder_cache, d_abstract_tokens,
                           grad.encoder);
}

}  // namespace imac
