#pragma once
// Glue shared by the command-line tool and the acceptance suite: one JSON
// config for every stage, preprocessing fitted on the training split, and
// the end-to-end train/evaluate helpers.

#include "imac/baselines.hpp"
#include "imac/bibliometrics.hpp"
#include "imac/corpus.hpp"
#include "imac/model.hpp"
#include "imac/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <span>

namespace imac {

struct PipelineConfig {
    ModelConfig model;
    TrainConfig train;
    SplitSpec split;
    double aif_d = 0.4;
    std::optional<double> cits_m;  // corpus median when unset
    BaselineHyper baseline;
    std::size_t baseline_vocab = 50;
    std::size_t tokenizer_max_words = 20000;
    std::size_t tokenizer_min_count = 1;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    // Missing keys keep their defaults.
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::filesystem::path& path);
};

struct Preprocessing {
    std::unique_ptr<Tokenizer> tokenizer;
    Normalizer normalizer;
};

// Word tokenizer fitted on training titles and abstracts, or the checkpoint's
// vocab.txt for a pretrained encoder.  Sets model.encoder.vocab_size.
Preprocessing fit_preprocessing(std::span<const ArticleRecord> train, PipelineConfig& cfg);

struct TrainedModel {
    Checkpoint checkpoint;
    LabeledSplit train_split;
    LabeledSplit val_split;
};

// Fits preprocessing, initializes with cfg.train.seed and trains.
TrainedModel train_model(std::span<const ArticleRecord> train_records,
                         std::span<const ArticleRecord> val_records, PipelineConfig cfg);

LabeledSplit labeled_split(const Checkpoint& ckpt, std::span<const ArticleRecord> records);

// Class counts per task label, for reporting.
nlohmann::ordered_json class_balance(std::span<const ArticleRecord> records);

}  // namespace imac
