#pragma once
// Optimization, evaluation, repeated runs, checkpoints and embedding export.

#include "imac/corpus.hpp"
#include "imac/losses.hpp"
#include "imac/model.hpp"
#include "imac/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace imac {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    AdamConfig adam;
    std::size_t batch_size = 32;
    int epochs = 30;
    std::uint64_t seed = 0;
    Task task = Task::journal_impact;
    int num_runs = 5;
    LossConfig loss;
    bool track_train_accuracy = true;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// Named ablations: "full", "no_fusion" (fusion layers bypassed) and
// "no_supcon" (alpha = 0).
void apply_ablation(std::string_view name, ModelConfig& model, TrainConfig& train);

struct EvalReport {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    // nullopt where the ratio has a zero denominator.
    std::optional<double> precision, recall, f1;

    static EvalReport from_counts(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn);
    // Positive class is 1 (high_impact).
    static EvalReport from_predictions(std::span<const int> truth, std::span<const int> predicted);

    std::int64_t total() const { return tp + fp + tn + fn; }
    nlohmann::ordered_json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
};

// One split ready for the network.
struct LabeledSplit {
    std::vector<std::string> ids;
    std::vector<FeatureBundle> bundles;
    std::vector<int> labels;

    std::size_t size() const { return bundles.size(); }
};

LabeledSplit make_split(std::span<const ArticleRecord> records, Task task, const Tokenizer& tok,
                        const Normalizer& norm, const ModelConfig& cfg);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double train_cross_entropy = 0.0;
    double train_supcon = 0.0;
    std::optional<double> train_accuracy;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct RunManifest {
    nlohmann::ordered_json config;
    std::uint64_t seed = 0;
    std::vector<EpochLog> epochs;
    int best_epoch = 0;
    std::map<std::string, EvalReport> reports;
    double wall_seconds = 0.0;

    nlohmann::ordered_json to_json() const;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainResult {
    ModelParams params;  // best validation accuracy (earliest epoch on ties)
    RunManifest manifest;
};

TrainResult train(const LabeledSplit& train_split, const LabeledSplit& val_split, ModelParams params,
                  const ModelConfig& model_cfg, const TrainConfig& cfg);

// argmax of p with ties to class 0.
int predict_label(const ForwardTrace& trace);

std::vector<ForwardTrace> infer(const ModelParams& params, const ModelConfig& cfg,
                                const LabeledSplit& split);

EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg, const LabeledSplit& split);

struct MetricSummary {
    std::optional<double> mean;
    std::optional<double> sd;  // sample standard deviation; 0 for one run
    std::optional<double> min, max;
};

struct RepeatedReport {
    std::vector<EvalReport> runs;
    std::map<std::string, MetricSummary> summary;  // accuracy, precision, recall, f1

    nlohmann::ordered_json to_json() const;
};

RepeatedReport summarize_runs(std::vector<EvalReport> runs);

// Trains cfg.num_runs models with seeds seed, seed+1, ... (or all with
// `seed` when vary_seed is false) and evaluates each on `test_split`.
RepeatedReport run_repeated(const LabeledSplit& train_split, const LabeledSplit& val_split,
                            const LabeledSplit& test_split, const ModelConfig& model_cfg,
                            const TrainConfig& cfg, bool vary_seed = true);

struct EmbeddingRow {
    std::string id;
    int label = 0;
    double x = 0.0;
    double y = 0.0;
};

// Samples up to n_per_class records of each class, computes F_u, and
// projects onto the two leading principal components of the sample.
std::vector<EmbeddingRow> export_embeddings(const ModelParams& params, const ModelConfig& cfg,
                                            const LabeledSplit& split, std::size_t n_per_class,
                                            std::uint64_t seed,
                                            std::vector<std::string>* warnings = nullptr);

// Projects rows of `features` onto their two leading principal components
// (sign fixed so each axis' largest-magnitude loading is positive).
Matrix principal_projection_2d(const Matrix& features);

void write_embeddings_csv(const std::filesystem::path& path, std::span<const EmbeddingRow> rows);

struct Checkpoint {
    ModelConfig model;
    TrainConfig train;
    ModelParams params;
    std::unique_ptr<Tokenizer> tokenizer;
    Normalizer normalizer;
    std::optional<RunManifest> manifest;
};

// Layout: params.bin, model.json, tokenizer.json, normalizer.json,
// manifest.json.
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace imac
