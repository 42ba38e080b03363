#include "imac/training.hpp"

#include "imac/tensor_io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace imac {

using nlohmann::json;
using nlohmann::ordered_json;

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::domain_error("learning_rate must be positive");
    if (batch_size == 0) throw std::domain_error("batch_size must be positive");
    if (epochs <= 0) throw std::domain_error("epochs must be positive");
    if (num_runs <= 0) throw std::domain_error("num_runs must be positive");
    loss.validate();
}

ordered_json TrainConfig::to_json() const {
    ordered_json j;
    j["learning_rate"] = learning_rate;
    j["optimizer"] = {{"kind", "adam"}, {"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}};
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["seed"] = seed;
    j["task"] = to_string(task);
    j["num_runs"] = num_runs;
    j["loss"] = loss.to_json();
    return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        c.adam.beta1 = o.value("beta1", c.adam.beta1);
        c.adam.beta2 = o.value("beta2", c.adam.beta2);
        c.adam.eps = o.value("eps", c.adam.eps);
    }
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
    c.num_runs = j.value("num_runs", c.num_runs);
    if (j.contains("loss")) c.loss = LossConfig::from_json(j["loss"]);
    return c;
}

void apply_ablation(std::string_view name, ModelConfig& model, TrainConfig& train) {
    if (name == "full") return;
    if (name == "no_fusion") {
        model.no_fusion = true;
    } else if (name == "no_supcon") {
        train.loss.alpha = 0.0;
    } else {
        throw std::invalid_argument("unknown ablation '" + std::string(name) +
                                    "' (expected full, no_fusion or no_supcon)");
    }
}

EvalReport EvalReport::from_counts(std::int64_t tp, std::int64_t fp, std::int64_t tn, std::int64_t fn) {
    EvalReport r;
    r.tp = tp;
    r.fp = fp;
    r.tn = tn;
    r.fn = fn;
    const std::int64_t total = tp + fp + tn + fn;
    if (total <= 0) throw std::domain_error("cannot evaluate an empty split");
    r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
        r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
    }
    return r;
}

EvalReport EvalReport::from_predictions(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw std::domain_error("prediction count mismatch");
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == 1;
        const bool p = predicted[i] == 1;
        if (t && p) ++tp;
        else if (!t && p) ++fp;
        else if (!t && !p) ++tn;
        else ++fn;
    }
    return from_counts(tp, fp, tn, fn);
}

namespace {

ordered_json optional_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

ordered_json EvalReport::to_json() const {
    ordered_json j;
    j["accuracy"] = accuracy;
    j["precision"] = optional_json(precision);
    j["recall"] = optional_json(recall);
    j["f1"] = optional_json(f1);
    j["confusion"] = {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}};
    return j;
}

EvalReport EvalReport::from_json(const json& j) {
    const auto& c = j.at("confusion");
    return from_counts(c.at("tp").get<std::int64_t>(), c.at("fp").get<std::int64_t>(),
                       c.at("tn").get<std::int64_t>(), c.at("fn").get<std::int64_t>());
}

LabeledSplit make_split(std::span<const ArticleRecord> records, Task task, const Tokenizer& tok,
                        const Normalizer& norm, const ModelConfig& cfg) {
    LabeledSplit s;
    s.ids.reserve(records.size());
    s.bundles.reserve(records.size());
    s.labels.reserve(records.size());
    for (const auto& r : records) {
        const auto label = r.label(task);
        if (!label) {
            throw std::domain_error("record '" + r.id + "' has no " + std::string(to_string(task)) +
                                    " label; run `imac label` first");
        }
        s.ids.push_back(r.id);
        s.bundles.push_back(make_bundle(r, tok, norm, cfg));
        s.labels.push_back(to_int(*label));
    }
    return s;
}

ordered_json RunManifest::to_json() const {
    ordered_json j;
    j["config"] = config;
    j["seed"] = seed;
    ordered_json epochs_json = ordered_json::array();
    for (const auto& e : epochs) {
        ordered_json ej;
        ej["epoch"] = e.epoch;
        ej["train_loss"] = e.train_loss;
        ej["train_cross_entropy"] = e.train_cross_entropy;
        ej["train_supcon"] = e.train_supcon;
        ej["train_accuracy"] = optional_json(e.train_accuracy);
        ej["val_loss"] = e.val_loss;
        ej["val_accuracy"] = e.val_accuracy;
        epochs_json.push_back(std::move(ej));
    }
    j["epochs"] = std::move(epochs_json);
    j["best_epoch"] = best_epoch;
    ordered_json reports_json = ordered_json::object();
    for (const auto& [name, report] : reports) reports_json[name] = report.to_json();
    j["reports"] = std::move(reports_json);
    j["wall_seconds"] = wall_seconds;
    return j;
}

namespace {

class Adam {
public:
    Adam(const ModelParams& shape, const AdamConfig& cfg, double lr)
        : cfg_(cfg), lr_(lr), m_(zeros_like(shape)), v_(zeros_like(shape)) {
        m_views_ = param_views(m_);
        v_views_ = param_views(v_);
    }

    void step(ModelParams& params, ModelParams& grads, bool skip_encoder) {
        ++t_;
        auto pv = param_views(params);
        auto gv = param_views(grads);
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < pv.size(); ++i) {
            if (skip_encoder && pv[i].name.starts_with("encoder.")) continue;
            double* p = pv[i].data;
            const double* g = gv[i].data;
            double* m = m_views_[i].data;
            double* v = v_views_[i].data;
            for (Index k = 0; k < pv[i].size(); ++k) {
                m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
                v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
                p[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
            }
        }
    }

private:
    AdamConfig cfg_;
    double lr_;
    std::int64_t t_ = 0;
    ModelParams m_, v_;
    std::vector<ParamView> m_views_, v_views_;
};

void zero(ModelParams& g) {
    for (auto& v : param_views(g)) v.map().setZero();
}

struct SplitLoss {
    double total = 0.0;
    double accuracy = 0.0;
};

// Eval-mode loss (batched in order) and accuracy.
SplitLoss split_loss(const ModelParams& params, const ModelConfig& cfg, const LabeledSplit& split,
                     const TrainConfig& tc) {
    SplitLoss out;
    if (split.size() == 0) return out;
    std::size_t correct = 0;
    double weighted = 0.0;
    for (std::size_t start = 0; start < split.size(); start += tc.batch_size) {
        const std::size_t end = std::min(split.size(), start + tc.batch_size);
        std::vector<Vector> logits, feats;
        std::vector<int> labels;
        for (std::size_t i = start; i < end; ++i) {
            const ForwardTrace t = forward(params, cfg, split.bundles[i]);
            if (predict_label(t) == split.labels[i]) ++correct;
            logits.push_back(t.out);
            feats.push_back(t.f_u);
            labels.push_back(split.labels[i]);
        }
        const LossBreakdown lb = total_loss_with_grad(logits, feats, labels, tc.loss);
        weighted += lb.total * static_cast<double>(end - start);
    }
    out.total = weighted / static_cast<double>(split.size());
    out.accuracy = static_cast<double>(correct) / static_cast<double>(split.size());
    return out;
}

}  // namespace

int predict_label(const ForwardTrace& trace) {
    return trace.p[1] > trace.p[0] ? 1 : 0;
}

std::vector<ForwardTrace> infer(const ModelParams& params, const ModelConfig& cfg,
                                const LabeledSplit& split) {
    std::vector<ForwardTrace> out;
    out.reserve(split.size());
    for (const auto& b : split.bundles) out.push_back(forward(params, cfg, b));
    return out;
}

EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg, const LabeledSplit& split) {
    if (split.size() == 0) throw std::domain_error("cannot evaluate an empty split");
    std::vector<int> predicted;
    predicted.reserve(split.size());
    for (const auto& b : split.bundles) predicted.push_back(predict_label(forward(params, cfg, b)));
    return EvalReport::from_predictions(split.labels, predicted);
}

TrainResult train(const LabeledSplit& train_split, const LabeledSplit& val_split, ModelParams params,
                  const ModelConfig& model_cfg, const TrainConfig& cfg) {
    cfg.validate();
    model_cfg.validate();
    if (train_split.size() == 0) throw std::domain_error("training split is empty");
    if (val_split.size() == 0) throw std::domain_error("validation split is empty");

    const auto started = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(cfg.seed, 1));
    Rng dropout_rng(derive_seed(cfg.seed, 2));
    Adam adam(params, cfg.adam, cfg.learning_rate);
    ModelParams grads = zeros_like(params);

    RunManifest manifest;
    manifest.config = {{"model", model_cfg.to_json()}, {"train", cfg.to_json()}};
    manifest.seed = cfg.seed;

    ModelParams best = params;
    double best_val = -1.0;

    std::vector<std::size_t> order(train_split.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<ForwardCache> caches(cfg.batch_size);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0, ce_sum = 0.0, sc_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::size_t n = end - start;
            std::vector<Vector> logits(n), feats(n);
            std::vector<int> labels(n);
            ForwardOptions fo{true, &dropout_rng};
            for (std::size_t b = 0; b < n; ++b) {
                const std::size_t idx = order[start + b];
                const ForwardTrace t = forward(params, model_cfg, train_split.bundles[idx], fo, &caches[b]);
                logits[b] = t.out;
                feats[b] = t.f_u;
                labels[b] = train_split.labels[idx];
            }
            const LossBreakdown lb = total_loss_with_grad(logits, feats, labels, cfg.loss);
            if (!std::isfinite(lb.total)) {
                std::ostringstream msg;
                msg << "non-finite loss (ce=" << lb.cross_entropy << ", supcon=" << lb.supcon
                    << ") at epoch " << epoch << ", batch " << batch_index << "; records:";
                for (std::size_t b = 0; b < n; ++b) msg << ' ' << train_split.ids[order[start + b]];
                throw TrainingError(msg.str());
            }
            zero(grads);
            for (std::size_t b = 0; b < n; ++b) {
                backward(params, model_cfg, caches[b], lb.d_logits[b], lb.d_features[b], grads);
            }
            adam.step(params, grads, model_cfg.encoder.freeze);
            loss_sum += lb.total * static_cast<double>(n);
            ce_sum += lb.cross_entropy * static_cast<double>(n);
            sc_sum += lb.supcon * static_cast<double>(n);
        }
        EpochLog log;
        log.epoch = epoch;
        const double total = static_cast<double>(order.size());
        log.train_loss = loss_sum / total;
        log.train_cross_entropy = ce_sum / total;
        log.train_supcon = sc_sum / total;
        if (cfg.track_train_accuracy) log.train_accuracy = evaluate(params, model_cfg, train_split).accuracy;
        const SplitLoss vl = split_loss(params, model_cfg, val_split, cfg);
        log.val_loss = vl.total;
        log.val_accuracy = vl.accuracy;
        if (vl.accuracy > best_val) {
            best_val = vl.accuracy;
            best = params;
            manifest.best_epoch = epoch;
        }
        manifest.epochs.push_back(log);
    }

    manifest.reports["train"] = evaluate(best, model_cfg, train_split);
    manifest.reports["val"] = evaluate(best, model_cfg, val_split);
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(best), std::move(manifest)};
}

ordered_json RepeatedReport::to_json() const {
    ordered_json j;
    j["runs"] = runs.size();
    for (const auto& [metric, s] : summary) {
        j[metric] = {{"mean", optional_json(s.mean)},
                     {"sd", optional_json(s.sd)},
                     {"min", optional_json(s.min)},
                     {"max", optional_json(s.max)}};
    }
    ordered_json per_run = ordered_json::array();
    for (const auto& r : runs) per_run.push_back(r.to_json());
    j["per_run"] = std::move(per_run);
    return j;
}

RepeatedReport summarize_runs(std::vector<EvalReport> runs) {
    RepeatedReport rep;
    rep.runs = std::move(runs);
    const std::pair<const char*, std::optional<double> (*)(const EvalReport&)> metrics[] = {
        {"accuracy", [](const EvalReport& r) { return std::optional<double>(r.accuracy); }},
        {"precision", [](const EvalReport& r) { return r.precision; }},
        {"recall", [](const EvalReport& r) { return r.recall; }},
        {"f1", [](const EvalReport& r) { return r.f1; }},
    };
    for (const auto& [name, get] : metrics) {
        std::vector<double> vals;
        for (const auto& r : rep.runs) {
            if (auto v = get(r)) vals.push_back(*v);
        }
        MetricSummary s;
        if (!vals.empty()) {
            const double n = static_cast<double>(vals.size());
            const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
            double ss = 0.0;
            for (double v : vals) ss += (v - mean) * (v - mean);
            s.mean = mean;
            s.sd = vals.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            s.min = *std::min_element(vals.begin(), vals.end());
            s.max = *std::max_element(vals.begin(), vals.end());
        }
        rep.summary[name] = s;
    }
    return rep;
}

RepeatedReport run_repeated(const LabeledSplit& train_split, const LabeledSplit& val_split,
                            const LabeledSplit& test_split, const ModelConfig& model_cfg,
                            const TrainConfig& cfg, bool vary_seed) {
    cfg.validate();
    std::vector<EvalReport> runs;
    for (int r = 0; r < cfg.num_runs; ++r) {
        TrainConfig run_cfg = cfg;
        run_cfg.seed = vary_seed ? cfg.seed + static_cast<std::uint64_t>(r) : cfg.seed;
        ModelConfig mc = model_cfg;
        ModelParams init = init_model(mc, run_cfg.seed);
        TrainResult result = train(train_split, val_split, std::move(init), mc, run_cfg);
        runs.push_back(evaluate(result.params, mc, test_split));
    }
    return summarize_runs(std::move(runs));
}

Matrix principal_projection_2d(const Matrix& features) {
    const Index n = features.rows();
    Matrix out = Matrix::Zero(n, 2);
    if (n == 0) return out;
    const RowVector mean = features.colwise().mean();
    const Matrix centered = features.rowwise() - mean;
    if (n < 2) return out;
    const Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    // Eigenvalues come back ascending.
    const Index d = cov.rows();
    for (Index axis = 0; axis < std::min<Index>(2, d); ++axis) {
        Vector v = solver.eigenvectors().col(d - 1 - axis);
        Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        out.col(axis) = centered * v;
    }
    return out;
}

std::vector<EmbeddingRow> export_embeddings(const ModelParams& params, const ModelConfig& cfg,
                                            const LabeledSplit& split, std::size_t n_per_class,
                                            std::uint64_t seed, std::vector<std::string>* warnings) {
    Rng rng(derive_seed(seed, 3));
    std::vector<std::size_t> chosen;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < split.size(); ++i) {
            if (split.labels[i] == cls) idx.push_back(i);
        }
        if (idx.empty()) {
            if (warnings != nullptr) {
                warnings->push_back("class " + std::to_string(cls) + " absent from split; exporting the other class only");
            }
            continue;
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        if (idx.size() > n_per_class) idx.resize(n_per_class);
        std::sort(idx.begin(), idx.end());
        chosen.insert(chosen.end(), idx.begin(), idx.end());
    }
    std::vector<EmbeddingRow> rows;
    if (chosen.empty()) return rows;
    Matrix feats(static_cast<Index>(chosen.size()), cfg.d());
    for (std::size_t r = 0; r < chosen.size(); ++r) {
        feats.row(static_cast<Index>(r)) = forward(params, cfg, split.bundles[chosen[r]]).f_u.transpose();
    }
    const Matrix xy = principal_projection_2d(feats);
    for (std::size_t r = 0; r < chosen.size(); ++r) {
        const Index i = static_cast<Index>(r);
        rows.push_back({split.ids[chosen[r]], split.labels[chosen[r]], xy(i, 0), xy(i, 1)});
    }
    return rows;
}

void write_embeddings_csv(const std::filesystem::path& path, std::span<const EmbeddingRow> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "id,label,x,y\n";
    out.precision(17);
    for (const auto& r : rows) out << r.id << ',' << r.label << ',' << r.x << ',' << r.y << '\n';
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
    std::filesystem::create_directories(dir);
    ModelParams params = ckpt.params;
    const auto views = param_views(params);
    save_tensors(dir / "params.bin", views);

    ordered_json model;
    model["model"] = ckpt.model.to_json();
    model["train"] = ckpt.train.to_json();
    std::ofstream(dir / "model.json") << model.dump(2) << '\n';
    if (ckpt.tokenizer) std::ofstream(dir / "tokenizer.json") << ckpt.tokenizer->to_json().dump() << '\n';
    std::ofstream(dir / "normalizer.json") << ckpt.normalizer.to_json().dump(2) << '\n';
    if (ckpt.manifest) std::ofstream(dir / "manifest.json") << ckpt.manifest->to_json().dump(2) << '\n';
}

namespace {

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing checkpoint file " + path.string());
    return json::parse(in);
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw std::runtime_error("checkpoint directory " + dir.string() + " does not exist");
    }
    Checkpoint c;
    const json model = read_json_file(dir / "model.json");
    c.model = ModelConfig::from_json(model.at("model"));
    c.train = TrainConfig::from_json(model.at("train"));
    // Shapes only; weights are overwritten below.
    ModelConfig shape_cfg = c.model;
    shape_cfg.encoder.kind = EncoderKind::small_trainable;
    c.params = init_model(shape_cfg, 0);
    auto views = param_views(c.params);
    load_tensors(dir / "params.bin", views);
    c.tokenizer = tokenizer_from_json(read_json_file(dir / "tokenizer.json"));
    c.normalizer = Normalizer::from_json(read_json_file(dir / "normalizer.json"));
    return c;
}

}  // namespace imac
