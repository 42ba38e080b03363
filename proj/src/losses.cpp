#include "imac/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace imac {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kNormFloor = 1e-12;

}  // namespace

void LossConfig::validate() const {
    if (!(alpha >= 0.0)) throw std::domain_error("alpha must be nonnegative");
    if (!(tau > 0.0)) throw std::domain_error("temperature tau must be positive");
}

ordered_json LossConfig::to_json() const {
    ordered_json j;
    j["alpha"] = alpha;
    j["tau"] = tau;
    j["feature_normalization"] = feature_normalization == FeatureNormalization::l2 ? "l2" : "none";
    j["ce_reduction"] = ce_reduction == Reduction::mean ? "mean" : "sum";
    j["anchor_normalization"] = "mean_over_anchors";
    return j;
}

LossConfig LossConfig::from_json(const json& j) {
    LossConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.tau = j.value("tau", c.tau);
    const auto fn = j.value("feature_normalization", std::string("l2"));
    if (fn == "l2") {
        c.feature_normalization = FeatureNormalization::l2;
    } else if (fn == "none") {
        c.feature_normalization = FeatureNormalization::none;
    } else {
        throw std::invalid_argument("unknown feature_normalization '" + fn + "'");
    }
    const auto red = j.value("ce_reduction", std::string("mean"));
    if (red == "mean") {
        c.ce_reduction = Reduction::mean;
    } else if (red == "sum") {
        c.ce_reduction = Reduction::sum;
    } else {
        throw std::invalid_argument("unknown ce_reduction '" + red + "'");
    }
    return c;
}

double cross_entropy(const Batch& batch, Reduction reduction) {
    if (batch.probabilities.size() != batch.labels.size() || batch.labels.empty()) {
        throw std::domain_error("cross entropy needs matching, nonempty probabilities and labels");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.labels.size(); ++i) {
        const double p = batch.probabilities[i][batch.labels[i]];
        sum -= std::log(std::max(p, kProbabilityFloor));
    }
    return reduction == Reduction::mean ? sum / static_cast<double>(batch.labels.size()) : sum;
}

double supcon_with_grad(const std::vector<Vector>& features, const std::vector<int>& labels,
                        const LossConfig& cfg, std::vector<Vector>* d_features) {
    cfg.validate();
    const std::size_t n = features.size();
    if (n < 2) throw std::domain_error("supervised contrastive loss needs a batch of at least 2");
    if (labels.size() != n) throw std::domain_error("features and labels differ in length");
    const Index d = features[0].size();

    Matrix z(static_cast<Index>(n), d);
    Vector norms(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const Index r = static_cast<Index>(i);
        if (cfg.feature_normalization == FeatureNormalization::l2) {
            norms[r] = features[i].norm();
            z.row(r) = features[i].transpose() / std::max(norms[r], kNormFloor);
        } else {
            z.row(r) = features[i].transpose();
        }
    }
    const Matrix s = (z * z.transpose()) / cfg.tau;

    Matrix g = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(n));
    double total = 0.0;
    std::size_t anchors = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Index r = static_cast<Index>(i);
        std::size_t positives = 0;
        double max_s = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a) {
            if (a == i) continue;
            max_s = std::max(max_s, s(r, static_cast<Index>(a)));
            if (labels[a] == labels[i]) ++positives;
        }
        if (positives == 0) continue;
        double denom = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            if (a != i) denom += std::exp(s(r, static_cast<Index>(a)) - max_s);
        }
        const double lse = max_s + std::log(denom);
        double pos_mean = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            if (p != i && labels[p] == labels[i]) pos_mean += s(r, static_cast<Index>(p));
        }
        pos_mean /= static_cast<double>(positives);
        total += lse - pos_mean;
        ++anchors;
        for (std::size_t a = 0; a < n; ++a) {
            if (a == i) continue;
            const Index c = static_cast<Index>(a);
            g(r, c) = std::exp(s(r, c) - lse) -
                      (labels[a] == labels[i] ? 1.0 / static_cast<double>(positives) : 0.0);
        }
    }
    if (anchors == 0) {
        if (d_features != nullptr) {
            d_features->assign(n, Vector::Zero(d));
        }
        return 0.0;
    }
    const double inv = 1.0 / static_cast<double>(anchors);
    if (d_features != nullptr) {
        g *= inv;
        const Matrix dz = ((g + g.transpose()) * z) / cfg.tau;
        d_features->resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Index r = static_cast<Index>(i);
            const Vector dzi = dz.row(r).transpose();
            if (cfg.feature_normalization == FeatureNormalization::l2) {
                if (norms[r] > kNormFloor) {
                    const Vector zi = z.row(r).transpose();
                    (*d_features)[i] = (dzi - zi * zi.dot(dzi)) / norms[r];
                } else {
                    (*d_features)[i] = dzi / kNormFloor;
                }
            } else {
                (*d_features)[i] = dzi;
            }
        }
    }
    return total * inv;
}

double supcon(const Batch& batch, const LossConfig& cfg) {
    return supcon_with_grad(batch.features, batch.labels, cfg, nullptr);
}

double total_loss(const Batch& batch, const LossConfig& cfg) {
    cfg.validate();
    const double ce = cross_entropy(batch, cfg.ce_reduction);
    if (cfg.alpha == 0.0) return ce;
    return ce + cfg.alpha * supcon(batch, cfg);
}

LossBreakdown total_loss_with_grad(const std::vector<Vector>& logits,
                                   const std::vector<Vector>& features, const std::vector<int>& labels,
                                   const LossConfig& cfg) {
    cfg.validate();
    const std::size_t n = logits.size();
    if (n == 0 || labels.size() != n || features.size() != n) {
        throw std::domain_error("loss needs matching, nonempty logits, features and labels");
    }
    LossBreakdown out;
    const double scale = cfg.ce_reduction == Reduction::mean ? 1.0 / static_cast<double>(n) : 1.0;
    out.d_logits.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector p = softmax(logits[i]);
        const double py = p[labels[i]];
        out.cross_entropy -= std::log(std::max(py, kProbabilityFloor));
        Vector dl = p;
        dl[labels[i]] -= 1.0;
        // The floor is flat below 1e-12.
        out.d_logits[i] = py < kProbabilityFloor ? Vector::Zero(p.size()) : Vector(dl * scale);
    }
    out.cross_entropy *= scale;

    if (cfg.alpha > 0.0 && n >= 2) {
        out.supcon = supcon_with_grad(features, labels, cfg, &out.d_features);
        for (auto& df : out.d_features) df *= cfg.alpha;
    } else {
        out.d_features.assign(n, Vector());
    }
    out.total = out.cross_entropy + cfg.alpha * out.supcon;
    return out;
}

}  // namespace imac
