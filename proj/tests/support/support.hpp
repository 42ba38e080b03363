#pragma once
// Fixtures and independent oracles shared by the unit and acceptance tests.

#include "imac/corpus.hpp"
#include "imac/losses.hpp"
#include "imac/model.hpp"
#include "imac/nn.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace imac::testing {

std::filesystem::path source_dir();
std::filesystem::path synthetic_dir();  // data/synthetic
std::filesystem::path scratch_dir(const std::string& name);  // fresh temp dir

ArticleRecord make_record(const std::string& id, const std::string& title = "a title",
                          const std::string& abstract = "an abstract");

// Small built-in encoder config with the given width.
ModelConfig tiny_model_config(Index d, Index vocab = 40);

// Random token ids in [0, vocab) with BOS/EOS ends; normalized random metadata.
FeatureBundle random_bundle(Rng& rng, const ModelConfig& cfg, std::size_t title_len,
                            std::size_t abstract_len);

// Direct arithmetic AIF: ln(d·cits·p + (1−d)·jif), p = min(2, max(cits_m/jif, 0.5)).
double aif_oracle(double cits, double jif, double d, double cits_m);

// Double-loop supervised contrastive loss with explicit positive/anchor sets.
double supcon_oracle(const std::vector<Vector>& features, const std::vector<int>& labels, double tau,
                     bool l2_normalize);

struct GradCheck {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::map<std::string, double> per_group;  // encoder, projection, attention, mscam, head
    std::size_t checked = 0;
};

// Compares analytic gradients of the batch loss with central differences
// for every parameter entry.  rel = |a - n| / max(|a|, |n|, floor).
GradCheck gradient_check(ModelParams params, const ModelConfig& cfg,
                         const std::vector<FeatureBundle>& bundles, const std::vector<int>& labels,
                         const LossConfig& loss, double h = 1e-5, double floor = 1e-6);

// Batch loss L_o in eval mode (no dropout).
double batch_loss(const ModelParams& params, const ModelConfig& cfg,
                  const std::vector<FeatureBundle>& bundles, const std::vector<int>& labels,
                  const LossConfig& loss);

}  // namespace imac::testing
