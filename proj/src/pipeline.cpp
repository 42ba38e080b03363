#include "imac/pipeline.hpp"

#include <fstream>
#include <stdexcept>

namespace imac {

using nlohmann::json;
using nlohmann::ordered_json;

void PipelineConfig::validate() const {
    model.validate();
    train.validate();
    split.validate();
    AifParams{aif_d, cits_m.value_or(1.0)}.validate();
}

ordered_json PipelineConfig::to_json() const {
    ordered_json j;
    j["model"] = model.to_json();
    j["train"] = train.to_json();
    j["split"] = {{"train", split.train_fraction},
                  {"val", split.val_fraction},
                  {"test", split.test_fraction},
                  {"seed", split.seed}};
    j["label"] = {{"d", aif_d}, {"cits_m", cits_m ? ordered_json(*cits_m) : ordered_json(nullptr)}};
    j["baselines"] = {{"k", baseline.k},
                      {"l2", baseline.l2},
                      {"step", baseline.step},
                      {"iterations", baseline.iterations},
                      {"vocab", baseline_vocab}};
    j["tokenizer"] = {{"max_words", tokenizer_max_words}, {"min_count", tokenizer_min_count}};
    return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    if (j.contains("model")) c.model = ModelConfig::from_json(j["model"]);
    if (j.contains("train")) c.train = TrainConfig::from_json(j["train"]);
    if (j.contains("split")) {
        const auto& s = j["split"];
        c.split.train_fraction = s.value("train", c.split.train_fraction);
        c.split.val_fraction = s.value("val", c.split.val_fraction);
        c.split.test_fraction = s.value("test", c.split.test_fraction);
        c.split.seed = s.value("seed", c.split.seed);
    }
    if (j.contains("label")) {
        const auto& l = j["label"];
        c.aif_d = l.value("d", c.aif_d);
        if (l.contains("cits_m") && !l["cits_m"].is_null()) c.cits_m = l["cits_m"].get<double>();
    }
    if (j.contains("baselines")) {
        const auto& b = j["baselines"];
        c.baseline.k = b.value("k", c.baseline.k);
        c.baseline.l2 = b.value("l2", c.baseline.l2);
        c.baseline.step = b.value("step", c.baseline.step);
        c.baseline.iterations = b.value("iterations", c.baseline.iterations);
        c.baseline_vocab = b.value("vocab", c.baseline_vocab);
    }
    if (j.contains("tokenizer")) {
        const auto& t = j["tokenizer"];
        c.tokenizer_max_words = t.value("max_words", c.tokenizer_max_words);
        c.tokenizer_min_count = t.value("min_count", c.tokenizer_min_count);
    }
    return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

Preprocessing fit_preprocessing(std::span<const ArticleRecord> train, PipelineConfig& cfg) {
    if (train.empty()) throw std::domain_error("training split is empty");
    Preprocessing out;
    auto& enc = cfg.model.encoder;
    if (enc.kind == EncoderKind::pretrained_checkpoint) {
        const auto vocab = std::filesystem::path(enc.checkpoint_dir) / "vocab.txt";
        out.tokenizer = std::make_unique<WordPieceTokenizer>(WordPieceTokenizer::from_vocab_file(vocab));
    } else {
        std::vector<std::string> texts;
        texts.reserve(2 * train.size());
        for (const auto& r : train) {
            texts.push_back(r.title);
            texts.push_back(r.abstract);
        }
        out.tokenizer = std::make_unique<WordTokenizer>(
            WordTokenizer::fit(texts, cfg.tokenizer_max_words, cfg.tokenizer_min_count));
        enc.vocab_size = out.tokenizer->vocab_size();
    }
    out.normalizer = Normalizer::fit(train);
    return out;
}

TrainedModel train_model(std::span<const ArticleRecord> train_records,
                         std::span<const ArticleRecord> val_records, PipelineConfig cfg) {
    Preprocessing pre = fit_preprocessing(train_records, cfg);
    ModelParams init = init_model(cfg.model, cfg.train.seed);
    TrainedModel out;
    out.train_split = make_split(train_records, cfg.train.task, *pre.tokenizer, pre.normalizer, cfg.model);
    out.val_split = make_split(val_records, cfg.train.task, *pre.tokenizer, pre.normalizer, cfg.model);
    TrainResult result = train(out.train_split, out.val_split, std::move(init), cfg.model, cfg.train);
    out.checkpoint.model = cfg.model;
    out.checkpoint.train = cfg.train;
    out.checkpoint.params = std::move(result.params);
    out.checkpoint.tokenizer = std::move(pre.tokenizer);
    out.checkpoint.normalizer = pre.normalizer;
    out.checkpoint.manifest = std::move(result.manifest);
    return out;
}

LabeledSplit labeled_split(const Checkpoint& ckpt, std::span<const ArticleRecord> records) {
    return make_split(records, ckpt.train.task, *ckpt.tokenizer, ckpt.normalizer, ckpt.model);
}

ordered_json class_balance(std::span<const ArticleRecord> records) {
    ordered_json j;
    j["records"] = records.size();
    for (Task t : {Task::journal_impact, Task::article_impact}) {
        std::int64_t high = 0, others = 0;
        for (const auto& r : records) {
            const auto l = r.label(t);
            if (!l) continue;
            (*l == ImpactLabel::high_impact ? high : others) += 1;
        }
        j[std::string(to_string(t))] = {{"high_impact", high}, {"others", others}};
    }
    return j;
}

}  // namespace imac
