#include "imac/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace imac {

AttentionParams init_attention(Index d, Rng& rng) {
    AttentionParams p;
    p.wq = Linear::init(d, d, rng).w;
    p.wk = Linear::init(d, d, rng).w;
    p.wv = Linear::init(d, d, rng).w;
    p.ln = LayerNorm::identity(d);
    return p;
}

Vector attention_fuse(const Matrix& title_tokens, const Matrix& abstract_tokens,
                      const AttentionParams& params, const AttentionOptions& opts,
                      AttentionCache* cache) {
    const Index d = params.wq.rows();
    if (title_tokens.cols() != d || abstract_tokens.cols() != d || params.wk.rows() != d ||
        params.wv.rows() != d) {
        throw std::domain_error("attention fusion dimension mismatch");
    }
    if (title_tokens.rows() == 0 || abstract_tokens.rows() == 0) {
        throw std::domain_error("attention fusion needs at least one title and one abstract token");
    }
    Matrix q = title_tokens * params.wq;
    Matrix k = abstract_tokens * params.wk;
    Matrix v = abstract_tokens * params.wv;
    Matrix probs = softmax_rows((q * k.transpose()) / std::sqrt(static_cast<double>(d)));
    Vector pooled = (probs * v).colwise().mean().transpose();

    AttentionCache local;
    AttentionCache& c = cache != nullptr ? *cache : local;
    Vector normed = layer_norm(params.ln, pooled, &c.ln);
    Vector out;
    if (opts.dropout_rate > 0.0) {
        if (opts.rng == nullptr) throw std::invalid_argument("dropout requires an rng");
        out = dropout(normed, opts.dropout_rate, *opts.rng, &c.mask);
    } else {
        c.mask.scale.resize(0);
        out = std::move(normed);
    }
    if (cache != nullptr) {
        c.title = title_tokens;
        c.abstract = abstract_tokens;
        c.q = std::move(q);
        c.k = std::move(k);
        c.v = std::move(v);
        c.probs = std::move(probs);
        c.pooled = std::move(pooled);
    }
    return out;
}

AttentionInputGrads attention_fuse_backward(const AttentionParams& params, const AttentionCache& c,
                                            const Vector& dout, AttentionParams& grad) {
    const Index d = params.wq.rows();
    const Vector dnormed = c.mask.active() ? Vector(dout.cwiseProduct(c.mask.scale)) : dout;
    const Vector dpooled = layer_norm_backward(params.ln, c.ln, dnormed, grad.ln);

    const Index nt = c.title.rows();
    Matrix datt(nt, d);
    datt.rowwise() = dpooled.transpose() / static_cast<double>(nt);

    const Matrix dprobs = datt * c.v.transpose();
    const Matrix dv = c.probs.transpose() * datt;
    const Matrix ds = softmax_rows_backward(c.probs, dprobs) / std::sqrt(static_cast<double>(d));
    const Matrix dq = ds * c.k;
    const Matrix dk = ds.transpose() * c.q;

    grad.wq.noalias() += c.title.transpose() * dq;
    grad.wk.noalias() += c.abstract.transpose() * dk;
    grad.wv.noalias() += c.abstract.transpose() * dv;

    AttentionInputGrads g;
    g.title = dq * params.wq.transpose();
    g.abstract = dk * params.wk.transpose() + dv * params.wv.transpose();
    return g;
}

ResidualOutputs residual_merge(const Vector& f_t, const Vector& f_a, const Vector& f_att) {
    if (f_t.size() != f_a.size() || f_t.size() != f_att.size()) {
        throw std::domain_error("residual merge dimension mismatch");
    }
    ResidualOutputs r;
    r.f_o = f_t + f_a;
    r.f_aff = r.f_o + f_att;
    return r;
}

MsCamParams init_ms_cam(Index d, Index reduction, Rng& rng) {
    if (reduction <= 0 || d % reduction != 0) {
        throw std::domain_error("MS-CAM needs d divisible by the reduction ratio");
    }
    const Index hidden = d / reduction;
    MsCamParams p;
    p.local.down = Linear::init(d, hidden, rng);
    p.local.up = Linear::init(hidden, d, rng);
    p.global.down = Linear::init(d, hidden, rng);
    p.global.up = Linear::init(hidden, d, rng);
    return p;
}

Vector ms_cam(const Vector& f_aff, const MsCamParams& params, MsCamCache* cache) {
    const Index d = f_aff.size();
    if (params.local.down.in_dim() != d || params.global.up.out_dim() != d) {
        throw std::domain_error("MS-CAM dimension mismatch");
    }
    const Vector global_in = Vector::Constant(d, f_aff.mean());
    const Vector local_hidden = params.local.down.apply(f_aff).cwiseMax(0.0);
    const Vector global_hidden = params.global.down.apply(global_in).cwiseMax(0.0);
    const Vector z = params.local.up.apply(local_hidden) + params.global.up.apply(global_hidden);
    Vector gate = z.unaryExpr([](double x) { return sigmoid(x); });
    if (cache != nullptr) {
        cache->input = f_aff;
        cache->global_input = global_in;
        cache->local_hidden = local_hidden;
        cache->global_hidden = global_hidden;
        cache->gate = gate;
    }
    return gate;
}

Vector ms_cam_backward(const MsCamParams& params, const MsCamCache& c, const Vector& dgate,
                       MsCamParams& grad) {
    const Vector dz = dgate.cwiseProduct(c.gate.cwiseProduct((1.0 - c.gate.array()).matrix()));

    const Vector dlh = linear_backward(params.local.up, c.local_hidden, dz, grad.local.up)
                           .cwiseProduct((c.local_hidden.array() > 0.0).cast<double>().matrix());
    Vector dx = linear_backward(params.local.down, c.input, dlh, grad.local.down);

    const Vector dgh = linear_backward(params.global.up, c.global_hidden, dz, grad.global.up)
                           .cwiseProduct((c.global_hidden.array() > 0.0).cast<double>().matrix());
    const Vector dg = linear_backward(params.global.down, c.global_input, dgh, grad.global.down);
    dx.array() += dg.sum() / static_cast<double>(dx.size());
    return dx;
}

Vector aff_fuse(const Vector& f_o, const Vector& f_att, const Vector& gate) {
    if (f_o.size() != f_att.size() || f_o.size() != gate.size()) {
        throw std::domain_error("AFF dimension mismatch");
    }
    return gate.cwiseProduct(f_o) + (1.0 - gate.array()).matrix().cwiseProduct(f_att);
}

HeadParams init_head(Index d, Rng& rng) {
    HeadParams h;
    h.fc0 = Linear::init(static_cast<Index>(kMetadataDim), d, rng);
    h.fc1 = Linear::init(d, d, rng);
    h.classifier = Linear::init(d, 2, rng);
    return h;
}

Vector metadata_fuse(const Vector& f_txt, const MetadataVector& x_m, const HeadParams& params,
                     MetadataCache* cache) {
    if (!x_m.normalized) {
        throw std::domain_error("metadata must be normalized with the training-set statistics");
    }
    if (f_txt.size() != params.fc1.in_dim() || params.fc0.out_dim() != f_txt.size()) {
        throw std::domain_error("metadata fusion dimension mismatch");
    }
    const Vector x = Eigen::Map<const Vector>(x_m.values.data(), static_cast<Index>(kMetadataDim));
    Vector f_m = params.fc0.apply(x);
    Vector product = f_txt.cwiseProduct(f_m);
    Vector f_u = params.fc1.apply(product);
    if (cache != nullptr) {
        cache->f_txt = f_txt;
        cache->x_m = x;
        cache->f_m = std::move(f_m);
        cache->product = std::move(product);
    }
    return f_u;
}

Classification classify(const Vector& f_u, const HeadParams& params) {
    if (f_u.size() != params.classifier.in_dim()) {
        throw std::domain_error("classifier dimension mismatch");
    }
    Classification c;
    c.logits = params.classifier.apply(f_u);
    c.p = softmax(c.logits);
    return c;
}

}  // namespace imac
