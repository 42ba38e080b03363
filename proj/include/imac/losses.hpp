#pragma once
// Training objective: cross-entropy on the class probabilities plus a
// weighted supervised contrastive term on the fused features.

#include "imac/nn.hpp"

#include <json.hpp>

#include <vector>

namespace imac {

enum class Reduction { mean, sum };
enum class FeatureNormalization { l2, none };

inline constexpr double kProbabilityFloor = 1e-12;

struct LossConfig {
    double alpha = 0.5;  // weight of the contrastive term; 0 disables it
    double tau = 0.1;    // temperature
    FeatureNormalization feature_normalization = FeatureNormalization::l2;
    Reduction ce_reduction = Reduction::mean;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static LossConfig from_json(const nlohmann::json& j);
};

struct Batch {
    std::vector<Vector> features;       // F_u per element
    std::vector<int> labels;            // 0 or 1
    std::vector<Vector> probabilities;  // 2-vectors on the simplex
};

// -sum_i ln max(p[i][y_i], 1e-12), divided by the batch size under mean
// reduction.
double cross_entropy(const Batch& batch, Reduction reduction = Reduction::mean);

// Anchors without a same-label partner are skipped; the result is averaged
// over the remaining anchors (0 if there are none).  Throws
// std::domain_error for batches smaller than 2.
double supcon(const Batch& batch, const LossConfig& cfg);

double total_loss(const Batch& batch, const LossConfig& cfg);

struct LossBreakdown {
    double total = 0.0;
    double cross_entropy = 0.0;
    double supcon = 0.0;
    std::vector<Vector> d_logits;    // dL/d(logits_i)
    std::vector<Vector> d_features;  // dL/d(F_u_i)
};

// Loss and gradients from raw logits (probabilities = softmax(logits)).
// Batches of size 1 contribute no contrastive term.
LossBreakdown total_loss_with_grad(const std::vector<Vector>& logits,
                                   const std::vector<Vector>& features, const std::vector<int>& labels,
                                   const LossConfig& cfg);

double supcon_with_grad(const std::vector<Vector>& features, const std::vector<int>& labels,
                        const LossConfig& cfg, std::vector<Vector>* d_features);

}  // namespace imac
