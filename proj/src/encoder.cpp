#include "imac/encoder.hpp"

#include "imac/tensor_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace imac {

using nlohmann::json;
using nlohmann::ordered_json;

void EncoderConfig::validate() const {
    if (d <= 0) throw std::domain_error("encoder dimension must be positive");
    if (heads <= 0 || d % heads != 0) {
        throw std::domain_error("encoder dimension must be divisible by the head count");
    }
    if (layers < 0) throw std::domain_error("encoder layer count must be nonnegative");
    if (vocab_size <= 0) throw std::domain_error("encoder vocabulary size must be positive");
    if (max_positions <= 0) throw std::domain_error("max_positions must be positive");
}

ordered_json EncoderConfig::to_json() const {
    ordered_json j;
    j["d"] = d;
    j["kind"] = kind == EncoderKind::small_trainable ? "small_trainable" : "pretrained_checkpoint";
    j["pooling"] = pooling == Pooling::mean ? "mean" : "first_token";
    j["layers"] = layers;
    j["heads"] = heads;
    j["ff_dim"] = ff();
    j["vocab_size"] = vocab_size;
    j["max_positions"] = max_positions;
    j["layer_norm_eps"] = layer_norm_eps;
    j["checkpoint_dir"] = checkpoint_dir;
    j["freeze"] = freeze;
    return j;
}

EncoderConfig EncoderConfig::from_json(const json& j) {
    EncoderConfig c;
    c.d = j.value("d", c.d);
    const auto kind = j.value("kind", std::string("small_trainable"));
    if (kind == "small_trainable") {
        c.kind = EncoderKind::small_trainable;
    } else if (kind == "pretrained_checkpoint") {
        c.kind = EncoderKind::pretrained_checkpoint;
    } else {
        throw std::invalid_argument("unknown encoder kind '" + kind + "'");
    }
    const auto pooling = j.value("pooling", std::string("mean"));
    if (pooling == "mean") {
        c.pooling = Pooling::mean;
    } else if (pooling == "first_token") {
        c.pooling = Pooling::first_token;
    } else {
        throw std::invalid_argument("unknown pooling '" + pooling + "'");
    }
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.ff_dim = j.value("ff_dim", c.ff_dim);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.max_positions = j.value("max_positions", c.max_positions);
    c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
    c.checkpoint_dir = j.value("checkpoint_dir", std::string{});
    c.freeze = j.value("freeze", false);
    return c;
}

namespace {

Matrix small_uniform(Index rows, Index cols, double sd, Rng& rng) {
    const double a = sd * std::sqrt(3.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -a, a);
    return m;
}

}  // namespace

EncoderParams init_encoder(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    const Index d = cfg.d;
    EncoderParams p;
    p.token_embedding = small_uniform(cfg.vocab_size, d, 0.02, rng);
    p.position_embedding = small_uniform(cfg.max_positions, d, 0.02, rng);
    p.embed_ln = LayerNorm::identity(d, cfg.layer_norm_eps);
    for (Index l = 0; l < cfg.layers; ++l) {
        EncoderLayer layer;
        layer.q = Linear::init(d, d, rng);
        layer.k = Linear::init(d, d, rng);
        layer.v = Linear::init(d, d, rng);
        layer.o = Linear::init(d, d, rng);
        layer.ln1 = LayerNorm::identity(d, cfg.layer_norm_eps);
        layer.ff1 = Linear::init(d, cfg.ff(), rng);
        layer.ff2 = Linear::init(cfg.ff(), d, rng);
        layer.ln2 = LayerNorm::identity(d, cfg.layer_norm_eps);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

namespace {

Linear zeros_like(const Linear& l) { return Linear::zeros(l.in_dim(), l.out_dim()); }

LayerNorm zeros_like(const LayerNorm& ln) {
    return {Vector::Zero(ln.gain.size()), Vector::Zero(ln.bias.size()), ln.eps};
}

}  // namespace

EncoderParams zeros_like(const EncoderParams& p) {
    EncoderParams g;
    g.token_embedding = Matrix::Zero(p.token_embedding.rows(), p.token_embedding.cols());
    g.position_embedding = Matrix::Zero(p.position_embedding.rows(), p.position_embedding.cols());
    g.embed_ln = zeros_like(p.embed_ln);
    for (const auto& l : p.layers) {
        g.layers.push_back({zeros_like(l.q), zeros_like(l.k), zeros_like(l.v), zeros_like(l.o),
                            zeros_like(l.ln1), zeros_like(l.ff1), zeros_like(l.ff2),
                            zeros_like(l.ln2)});
    }
    return g;
}

void append_views(std::vector<ParamView>& out, const std::string& prefix, EncoderParams& p) {
    out.push_back(view(prefix + ".token_embedding", p.token_embedding));
    out.push_back(view(prefix + ".position_embedding", p.position_embedding));
    append_views(out, prefix + ".embed_ln", p.embed_ln);
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        const std::string lp = prefix + ".layer" + std::to_string(i);
        auto& l = p.layers[i];
        append_views(out, lp + ".attn.q", l.q);
        append_views(out, lp + ".attn.k", l.k);
        append_views(out, lp + ".attn.v", l.v);
        append_views(out, lp + ".attn.o", l.o);
        append_views(out, lp + ".ln1", l.ln1);
        append_views(out, lp + ".ffn.in", l.ff1);
        append_views(out, lp + ".ffn.out", l.ff2);
        append_views(out, lp + ".ln2", l.ln2);
    }
}

Matrix encode_tokens(const TokenSequence& seq, const EncoderParams& params,
                     const EncoderConfig& cfg, EncoderCache* cache) {
    const Index n = static_cast<Index>(seq.ids.size());
    const Index d = cfg.d;
    if (n == 0) throw std::domain_error("cannot encode an empty token sequence");
    if (n > params.position_embedding.rows()) {
        throw std::domain_error("sequence of length " + std::to_string(n) +
                                " exceeds max_positions " +
                                std::to_string(params.position_embedding.rows()));
    }
    Matrix x(n, d);
    for (Index t = 0; t < n; ++t) {
        const auto id = seq.ids[static_cast<std::size_t>(t)];
        if (id < 0 || id >= params.token_embedding.rows()) {
            throw std::domain_error("token id " + std::to_string(id) + " outside vocabulary of size " +
                                    std::to_string(params.token_embedding.rows()));
        }
        x.row(t) = params.token_embedding.row(id) + params.position_embedding.row(t);
    }
    if (cache != nullptr) {
        cache->ids = seq.ids;
        cache->layers.clear();
    }
    Matrix h = layer_norm_rows(params.embed_ln, x, cache ? &cache->embed : nullptr);

    const Index heads = cfg.heads;
    const Index dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (const auto& layer : params.layers) {
        EncoderLayerCache lc;
        Matrix q = layer.q.apply_rows(h);
        Matrix k = layer.k.apply_rows(h);
        Matrix v = layer.v.apply_rows(h);
        Matrix attended(n, d);
        std::vector<Matrix> probs;
        probs.reserve(static_cast<std::size_t>(heads));
        for (Index hd = 0; hd < heads; ++hd) {
            const auto qh = q.middleCols(hd * dh, dh);
            const auto kh = k.middleCols(hd * dh, dh);
            const auto vh = v.middleCols(hd * dh, dh);
            Matrix p = softmax_rows((qh * kh.transpose()) * scale);
            attended.middleCols(hd * dh, dh) = p * vh;
            probs.push_back(std::move(p));
        }
        Matrix r1 = h + layer.o.apply_rows(attended);
        Matrix h1 = layer_norm_rows(layer.ln1, r1, cache ? &lc.ln1 : nullptr);
        Matrix ff_pre = layer.ff1.apply_rows(h1);
        Matrix ff_act = gelu(ff_pre);
        Matrix r2 = h1 + layer.ff2.apply_rows(ff_act);
        Matrix out = layer_norm_rows(layer.ln2, r2, cache ? &lc.ln2 : nullptr);
        if (cache != nullptr) {
            lc.input = std::move(h);
            lc.q = std::move(q);
            lc.k = std::move(k);
            lc.v = std::move(v);
            lc.probs = std::move(probs);
            lc.attended = std::move(attended);
            lc.h1 = std::move(h1);
            lc.ff_pre = std::move(ff_pre);
            lc.ff_act = std::move(ff_act);
            cache->layers.push_back(std::move(lc));
        }
        h = std::move(out);
    }
    return h;
}

void encode_tokens_backward(const EncoderParams& params, const EncoderConfig& cfg,
                            const EncoderCache& cache, const Matrix& dout, EncoderParams& grad) {
    const Index d = cfg.d;
    const Index heads = cfg.heads;
    const Index dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Matrix dh_out = dout;
    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const auto& layer = params.layers[li];
        auto& g = grad.layers[li];
        const auto& lc = cache.layers[li];

        const Matrix dr2 = layer_norm_rows_backward(layer.ln2, lc.ln2, dh_out, g.ln2);
        Matrix dh1 = dr2;
        const Matrix dact = linear_rows_backward(layer.ff2, lc.ff_act, dr2, g.ff2);
        const Matrix dpre = dact.cwiseProduct(lc.ff_pre.unaryExpr([](double x) { return gelu_grad(x); }));
        dh1 += linear_rows_backward(layer.ff1, lc.h1, dpre, g.ff1);

        const Matrix dr1 = layer_norm_rows_backward(layer.ln1, lc.ln1, dh1, g.ln1);
        Matrix dh_in = dr1;
        const Matrix dattended = linear_rows_backward(layer.o, lc.attended, dr1, g.o);

        Matrix dq(lc.q.rows(), d), dk(lc.k.rows(), d), dv(lc.v.rows(), d);
        for (Index hd = 0; hd < heads; ++hd) {
            const Matrix& p = lc.probs[static_cast<std::size_t>(hd)];
            const auto qh = lc.q.middleCols(hd * dh, dh);
            const auto kh = lc.k.middleCols(hd * dh, dh);
            const auto vh = lc.v.middleCols(hd * dh, dh);
            const auto doh = dattended.middleCols(hd * dh, dh);
            const Matrix dp = doh * vh.transpose();
            dv.middleCols(hd * dh, dh) = p.transpose() * doh;
            const Matrix ds = softmax_rows_backward(p, dp) * scale;
            dq.middleCols(hd * dh, dh) = ds * kh;
            dk.middleCols(hd * dh, dh) = ds.transpose() * qh;
        }
        dh_in += linear_rows_backward(layer.q, lc.input, dq, g.q);
        dh_in += linear_rows_backward(layer.k, lc.input, dk, g.k);
        dh_in += linear_rows_backward(layer.v, lc.input, dv, g.v);
        dh_out = std::move(dh_in);
    }

    const Matrix dx = layer_norm_rows_backward(params.embed_ln, cache.embed, dh_out, grad.embed_ln);
    for (Index t = 0; t < dx.rows(); ++t) {
        grad.token_embedding.row(cache.ids[static_cast<std::size_t>(t)]) += dx.row(t);
        grad.position_embedding.row(t) += dx.row(t);
    }
}

Vector pool(const Matrix& tokens, Pooling mode) {
    if (tokens.rows() == 0) throw std::domain_error("cannot pool zero rows");
    if (mode == Pooling::first_token) return tokens.row(0).transpose();
    return tokens.colwise().mean().transpose();
}

Matrix pool_backward(Index rows, const Vector& dv, Pooling mode) {
    Matrix d = Matrix::Zero(rows, dv.size());
    if (mode == Pooling::first_token) {
        d.row(0) = dv.transpose();
    } else {
        d.rowwise() = dv.transpose() / static_cast<double>(rows);
    }
    return d;
}

ProjectionParams init_projection(Index d, Rng& rng) {
    return {Linear::init(d, d, rng).w, Linear::init(d, d, rng).w};
}

Activation Activation::gelu() {
    return {static_cast<double (*)(double)>(&imac::gelu), &imac::gelu_grad};
}

Activation Activation::identity() {
    return {[](double x) { return x; }, [](double) { return 1.0; }};
}

Vector project(const Vector& v, const ProjectionParams& params, ProjectionCache* cache,
               Activation act) {
    if (params.l2.cols() != v.size() || params.l1.cols() != params.l2.rows()) {
        throw std::domain_error("projection dimension mismatch");
    }
    Vector pre = params.l2 * v;
    Vector out = params.l1 * pre.unaryExpr(act.f);
    if (cache != nullptr) {
        cache->input = v;
        cache->pre = std::move(pre);
    }
    return out;
}

Vector project_backward(const ProjectionParams& params, const ProjectionCache& cache,
                        const Vector& dy, ProjectionParams& grad, Activation act) {
    const Vector a = cache.pre.unaryExpr(act.f);
    grad.l1.noalias() += dy * a.transpose();
    const Vector da = params.l1.transpose() * dy;
    const Vector dpre = da.cwiseProduct(cache.pre.unaryExpr(act.df));
    grad.l2.noalias() += dpre * cache.input.transpose();
    return params.l2.transpose() * dpre;
}

TextEncoding encode_text(const TokenSequence& seq, const EncoderParams& params,
                         const EncoderConfig& cfg, const ProjectionParams& proj) {
    TextEncoding e;
    e.tokens = encode_tokens(seq, params, cfg, &e.encoder_cache);
    e.pooled = pool(e.tokens, cfg.pooling);
    e.feature = project(e.pooled, proj, &e.projection_cache);
    return e;
}

EncoderParams load_encoder_checkpoint(EncoderConfig& cfg) {
    const std::filesystem::path dir = cfg.checkpoint_dir;
    std::ifstream in(dir / "config.json");
    if (!in) throw std::runtime_error("encoder checkpoint lacks config.json: " + dir.string());
    const json j = json::parse(in);
    const Index hidden = j.at("hidden_size").get<Index>();
    if (cfg.d != hidden) {
        throw std::domain_error("configured d = " + std::to_string(cfg.d) +
                                " but checkpoint hidden size is " + std::to_string(hidden));
    }
    cfg.layers = j.at("num_hidden_layers").get<Index>();
    cfg.heads = j.at("num_attention_heads").get<Index>();
    cfg.ff_dim = j.at("intermediate_size").get<Index>();
    cfg.vocab_size = j.at("vocab_size").get<Index>();
    cfg.max_positions = j.at("max_position_embeddings").get<Index>();
    cfg.layer_norm_eps = j.value("layer_norm_eps", 1e-12);
    cfg.validate();

    Rng unused(0);
    EncoderParams p = init_encoder(cfg, unused);
    std::vector<ParamView> views;
    append_views(views, "encoder", p);
    load_tensors(dir / "weights.bin", views);
    return p;
}

void save_encoder_checkpoint(const std::filesystem::path& dir, const EncoderConfig& cfg,
                             EncoderParams& params) {
    std::filesystem::create_directories(dir);
    ordered_json j;
    j["hidden_size"] = cfg.d;
    j["num_hidden_layers"] = cfg.layers;
    j["num_attention_heads"] = cfg.heads;
    j["intermediate_size"] = cfg.ff();
    j["vocab_size"] = cfg.vocab_size;
    j["max_position_embeddings"] = cfg.max_positions;
    j["layer_norm_eps"] = cfg.layer_norm_eps;
    std::ofstream(dir / "config.json") << j.dump(2) << '\n';
    std::vector<ParamView> views;
    append_views(views, "encoder", params);
    save_tensors(dir / "weights.bin", views);
}

}  // namespace imac
