#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace imac::testing {

namespace fs = std::filesystem;

fs::path source_dir() { return fs::path(IMAC_SOURCE_DIR); }

fs::path synthetic_dir() { return source_dir() / "data" / "synthetic"; }

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("imac_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ArticleRecord make_record(const std::string& id, const std::string& title, const std::string& abstract) {
    ArticleRecord r;
    r.id = id;
    r.title = title;
    r.abstract = abstract;
    r.year = 2010;
    r.reference_count = 20;
    r.reference_age = 2004.5;
    r.impact_reference = 0.3;
    r.h_index = 10;
    r.author_cit = 200;
    r.author_papers = 30;
    r.citations = 12;
    r.journal_id = "J1";
    return r;
}

ModelConfig tiny_model_config(Index d, Index vocab) {
    ModelConfig cfg;
    cfg.encoder.d = d;
    cfg.encoder.layers = 2;
    cfg.encoder.heads = 4;
    cfg.encoder.vocab_size = vocab;
    cfg.encoder.max_positions = 32;
    cfg.reduction = 4;
    cfg.dropout = 0.1;
    cfg.title_max_len = 8;
    cfg.abstract_max_len = 16;
    return cfg;
}

FeatureBundle random_bundle(Rng& rng, const ModelConfig& cfg, std::size_t title_len,
                            std::size_t abstract_len) {
    auto seq = [&](std::size_t n) {
        TokenSequence s;
        s.ids.push_back(2);
        for (std::size_t i = 0; i + 2 < n; ++i) {
            s.ids.push_back(static_cast<std::int32_t>(
                4 + static_cast<Index>(uniform01(rng) * static_cast<double>(cfg.encoder.vocab_size - 4))));
        }
        s.ids.push_back(3);
        return s;
    };
    FeatureBundle b;
    b.title = seq(title_len);
    b.abstract = seq(abstract_len);
    for (auto& v : b.metadata.values) v = uniform(rng, -2.0, 2.0);
    b.metadata.normalized = true;
    return b;
}

double aif_oracle(double cits, double jif, double d, double cits_m) {
    double p = cits_m / jif;
    if (p < 0.5) p = 0.5;
    if (p > 2.0) p = 2.0;
    return std::log(d * cits * p + (1.0 - d) * jif);
}

double supcon_oracle(const std::vector<Vector>& features, const std::vector<int>& labels, double tau,
                     bool l2_normalize) {
    const std::size_t n = features.size();
    std::vector<Vector> z;
    for (const auto& f : features) z.push_back(l2_normalize ? Vector(f / f.norm()) : f);
    double total = 0.0;
    int anchors = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> positives;
        for (std::size_t p = 0; p < n; ++p) {
            if (p != i && labels[p] == labels[i]) positives.push_back(p);
        }
        if (positives.empty()) continue;
        double denom = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            if (a != i) denom += std::exp(z[i].dot(z[a]) / tau);
        }
        double term = 0.0;
        for (std::size_t p : positives) term += std::log(std::exp(z[i].dot(z[p]) / tau) / denom);
        total += -term / static_cast<double>(positives.size());
        ++anchors;
    }
    return anchors == 0 ? 0.0 : total / anchors;
}

double batch_loss(const ModelParams& params, const ModelConfig& cfg,
                  const std::vector<FeatureBundle>& bundles, const std::vector<int>& labels,
                  const LossConfig& loss) {
    std::vector<Vector> logits, feats;
    for (const auto& b : bundles) {
        const ForwardTrace t = forward(params, cfg, b);
        logits.push_back(t.out);
        feats.push_back(t.f_u);
    }
    return total_loss_with_grad(logits, feats, labels, loss).total;
}

GradCheck gradient_check(ModelParams params, const ModelConfig& cfg,
                         const std::vector<FeatureBundle>& bundles, const std::vector<int>& labels,
                         const LossConfig& loss, double h, double floor) {
    ModelParams grad = zeros_like(params);
    {
        std::vector<ForwardCache> caches(bundles.size());
        std::vector<Vector> logits, feats;
        for (std::size_t i = 0; i < bundles.size(); ++i) {
            const ForwardTrace t = forward(params, cfg, bundles[i], {}, &caches[i]);
            logits.push_back(t.out);
            feats.push_back(t.f_u);
        }
        const LossBreakdown lb = total_loss_with_grad(logits, feats, labels, loss);
        for (std::size_t i = 0; i < bundles.size(); ++i) {
            backward(params, cfg, caches[i], lb.d_logits[i], lb.d_features[i], grad);
        }
    }
    auto pv = param_views(params);
    auto gv = param_views(grad);
    GradCheck out;
    for (std::size_t v = 0; v < pv.size(); ++v) {
        const std::string group = pv[v].name.substr(0, pv[v].name.find('.'));
        double& group_max = out.per_group[group];
        for (Index k = 0; k < pv[v].size(); ++k) {
            double& x = pv[v].data[k];
            const double saved = x;
            x = saved + h;
            const double up = batch_loss(params, cfg, bundles, labels, loss);
            x = saved - h;
            const double down = batch_loss(params, cfg, bundles, labels, loss);
            x = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = gv[v].data[k];
            const double rel =
                std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
            group_max = std::max(group_max, rel);
            if (rel > out.max_rel_error) {
                out.max_rel_error = rel;
                out.worst_param = pv[v].name + "[" + std::to_string(k) + "]";
            }
            ++out.checked;
        }
    }
    return out;
}

}  // namespace imac::testing
