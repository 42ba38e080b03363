#include "cli.hpp"

#include "imac/baselines.hpp"
#include "imac/bibliometrics.hpp"
#include "imac/corpus.hpp"
#include "imac/pipeline.hpp"
#include "imac/synthetic.hpp"
#include "imac/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace imac::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

class CliError : public std::runtime_error {
public:
    CliError(const std::string& message, std::string hint = {})
        : std::runtime_error(message), hint_(std::move(hint)) {}
    const std::string& hint() const { return hint_; }

private:
    std::string hint_;
};

fs::path checkpoint_path(const std::string& p) {
    fs::path path(p);
    if (path.is_relative()) {
        if (const char* root = std::getenv("IMAC_CHECKPOINT_ROOT"); root != nullptr && *root != '\0') {
            return fs::path(root) / path;
        }
    }
    return path;
}

void require_file(const fs::path& p, const std::string& what, const std::string& producer) {
    if (!fs::exists(p)) {
        throw CliError(what + " '" + p.string() + "' not found", "produce it with `imac " + producer + "`");
    }
}

std::vector<ArticleRecord> read_corpus(const fs::path& p, const std::string& producer) {
    require_file(p, "corpus", producer);
    IngestResult r = ingest(p);
    if (!r.rejections.empty()) {
        const auto& first = r.rejections.front();
        std::ostringstream msg;
        msg << p.string() << " line " << first.line << ": " << first.reason;
        if (r.rejections.size() > 1) msg << " (and " << r.rejections.size() - 1 << " more)";
        throw CliError(msg.str(), "clean the file with `imac ingest`");
    }
    return std::move(r.records);
}

void require_labels(std::span<const ArticleRecord> records, Task task, const fs::path& p) {
    for (const auto& r : records) {
        if (!r.label(task)) {
            throw CliError("record '" + r.id + "' in " + p.string() + " has no " + std::string(to_string(task)) +
                               " label",
                           "label the corpus with `imac label` before `imac split`");
        }
    }
}

Checkpoint read_checkpoint(const fs::path& dir) {
    require_file(dir / "model.json", "checkpoint", "train");
    return load_checkpoint(dir);
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw CliError("cannot write " + p.string());
    out << text;
}

void write_json(const fs::path& p, const ordered_json& j) { write_text(p, j.dump(2) + "\n"); }

ordered_json rejections_json(std::span<const Rejection> rejections) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rejections) arr.push_back({{"line", r.line}, {"reason", r.reason}});
    return arr;
}

PipelineConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    require_file(path, "config", "synth (configs/synthetic.json is an example)");
    return PipelineConfig::load(path);
}

struct Common {
    std::string config;
    std::optional<std::string> task;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON config; flags override its values");
    sub->add_option("--task", c.task, "journal_impact or article_impact");
}

PipelineConfig resolve_config(const Common& c) {
    PipelineConfig cfg = load_config(c.config);
    if (c.task) cfg.train.task = parse_task(*c.task);
    return cfg;
}

// ---- commands ----------------------------------------------------------

struct IngestArgs {
    std::string input, out, rejections;
};

void cmd_ingest(const IngestArgs& a, std::ostream& out) {
    if (!fs::exists(a.input)) throw CliError("input '" + a.input + "' not found");
    IngestResult r = ingest(a.input);
    write_jsonl(a.out, r.records);
    ordered_json summary;
    summary["accepted"] = r.records.size();
    summary["rejected"] = r.rejections.size();
    summary["rejections"] = rejections_json(r.rejections);
    summary["warnings"] = r.warnings;
    if (!a.rejections.empty()) write_json(a.rejections, summary["rejections"]);
    out << summary.dump(2) << '\n';
}

struct LabelArgs {
    Common common;
    std::string corpus, journals, out;
    std::optional<double> d, cits_m;
};

void cmd_label(const LabelArgs& a, std::ostream& out) {
    PipelineConfig cfg = resolve_config(a.common);
    const auto records = read_corpus(a.corpus, "ingest");
    if (!fs::exists(a.journals)) throw CliError("journal table '" + a.journals + "' not found");
    const auto journals = read_journals(a.journals);
    AifParams params;
    params.d = a.d.value_or(cfg.aif_d);
    if (a.cits_m) {
        params.cits_m = *a.cits_m;
    } else if (cfg.cits_m) {
        params.cits_m = *cfg.cits_m;
    } else {
        params.cits_m = median_citations(records);
        if (!(params.cits_m > 0.0)) {
            throw CliError("median citation count of the corpus is 0", "pass --cits-m explicitly");
        }
    }
    params.validate();
    const LabelResult result = label_corpus(records, journals, params);
    write_jsonl(a.out, result.records);
    ordered_json summary;
    summary["d"] = params.d;
    summary["cits_m"] = params.cits_m;
    summary["balance"] = class_balance(result.records);
    summary["rejected"] = result.rejections.size();
    summary["rejections"] = rejections_json(result.rejections);
    out << summary.dump(2) << '\n';
}

struct SplitArgs {
    Common common;
    std::string corpus, out;
    std::optional<double> train, val, test;
    std::optional<std::uint64_t> seed;
    bool no_stratify = false;
};

void cmd_split(const SplitArgs& a, std::ostream& out) {
    PipelineConfig cfg = resolve_config(a.common);
    SplitSpec spec = cfg.split;
    if (a.train) spec.train_fraction = *a.train;
    if (a.val) spec.val_fraction = *a.val;
    if (a.test) spec.test_fraction = *a.test;
    if (a.seed) spec.seed = *a.seed;
    spec.validate();
    const auto records = read_corpus(a.corpus, "label");
    std::optional<Task> stratify;
    if (!a.no_stratify) {
        require_labels(records, cfg.train.task, a.corpus);
        stratify = cfg.train.task;
    }
    const Splits s = split(records, spec, stratify);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    ordered_json summary;
    for (const auto& [name, part] : {std::pair{"train", &s.train}, {"val", &s.val}, {"test", &s.test}}) {
        write_jsonl(dir / (std::string(name) + ".jsonl"), *part);
        write_ids(dir / (std::string(name) + ".ids"), *part);
        summary[name] = class_balance(*part);
    }
    out << summary.dump(2) << '\n';
}

struct TrainArgs {
    Common common;
    std::string splits, out;
    std::optional<int> epochs, runs;
    std::optional<std::uint64_t> seed;
    std::optional<double> lr, alpha;
    std::optional<std::size_t> batch_size;
    std::optional<std::string> ablation;
    bool repeated = false;
};

void cmd_train(const TrainArgs& a, std::ostream& out) {
    PipelineConfig cfg = resolve_config(a.common);
    if (a.epochs) cfg.train.epochs = *a.epochs;
    if (a.seed) cfg.train.seed = *a.seed;
    if (a.lr) cfg.train.learning_rate = *a.lr;
    if (a.alpha) cfg.train.loss.alpha = *a.alpha;
    if (a.batch_size) cfg.train.batch_size = *a.batch_size;
    if (a.runs) cfg.train.num_runs = *a.runs;
    if (a.ablation) apply_ablation(*a.ablation, cfg.model, cfg.train);
    cfg.train.validate();

    const fs::path dir(a.splits);
    const auto train_records = read_corpus(dir / "train.jsonl", "split");
    const auto val_records = read_corpus(dir / "val.jsonl", "split");
    require_labels(train_records, cfg.train.task, dir / "train.jsonl");
    require_labels(val_records, cfg.train.task, dir / "val.jsonl");

    TrainedModel tm = train_model(train_records, val_records, cfg);
    const fs::path ckpt_dir = checkpoint_path(a.out);
    save_checkpoint(ckpt_dir, tm.checkpoint);

    ordered_json metrics;
    metrics["task"] = to_string(cfg.train.task);
    metrics["seed"] = cfg.train.seed;
    metrics["best_epoch"] = tm.checkpoint.manifest->best_epoch;
    for (const auto& [name, report] : tm.checkpoint.manifest->reports) metrics[name] = report.to_json();

    if (a.repeated) {
        const auto test_records = read_corpus(dir / "test.jsonl", "split");
        require_labels(test_records, cfg.train.task, dir / "test.jsonl");
        std::vector<EvalReport> runs;
        runs.push_back(evaluate(tm.checkpoint.params, tm.checkpoint.model,
                                labeled_split(tm.checkpoint, test_records)));
        for (int r = 1; r < cfg.train.num_runs; ++r) {
            PipelineConfig run_cfg = cfg;
            run_cfg.train.seed = cfg.train.seed + static_cast<std::uint64_t>(r);
            TrainedModel extra = train_model(train_records, val_records, run_cfg);
            runs.push_back(evaluate(extra.checkpoint.params, extra.checkpoint.model,
                                    labeled_split(extra.checkpoint, test_records)));
        }
        const RepeatedReport rep = summarize_runs(std::move(runs));
        write_json(ckpt_dir / "repeated.json", rep.to_json());
        metrics["repeated_test"] = rep.to_json();
    }
    write_json(ckpt_dir / "metrics.json", metrics);
    out << metrics.dump(2) << '\n';
}

struct EvaluateArgs {
    std::string checkpoint, data, out;
};

void cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const Checkpoint ckpt = read_checkpoint(checkpoint_path(a.checkpoint));
    const auto records = read_corpus(a.data, "split");
    require_labels(records, ckpt.train.task, a.data);
    const EvalReport report = evaluate(ckpt.params, ckpt.model, labeled_split(ckpt, records));
    const ordered_json j = report.to_json();
    if (!a.out.empty()) write_json(a.out, j);
    out << j.dump(2) << '\n';
}

struct BaselinesArgs {
    Common common;
    std::string splits, out;
    std::optional<std::size_t> k;
};

void cmd_baselines(const BaselinesArgs& a, std::ostream& out, std::ostream& err) {
    PipelineConfig cfg = resolve_config(a.common);
    if (a.k) cfg.baseline.k = *a.k;
    const Task task = cfg.train.task;
    const fs::path dir(a.splits);
    const auto train_records = read_corpus(dir / "train.jsonl", "split");
    const auto test_records = read_corpus(dir / "test.jsonl", "split");
    require_labels(train_records, task, dir / "train.jsonl");
    require_labels(test_records, task, dir / "test.jsonl");

    std::vector<std::string> warnings;
    const BaselineVocab vocab = build_vocab(train_records, cfg.baseline_vocab, &warnings);
    const Normalizer norm = Normalizer::fit(train_records);
    const auto train_x = make_examples(train_records, task, vocab, norm);
    const auto test_x = make_examples(test_records, task, vocab, norm);

    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);
    ordered_json table;
    table["task"] = to_string(task);
    table["models"] = ordered_json::object();
    for (BaselineKind kind : kAllBaselines) {
        BaselineModel model(kind, cfg.baseline);
        model.fit(train_x, &warnings);
        const ordered_json j = evaluate(model, test_x).to_json();
        write_json(out_dir / (std::string(to_string(kind)) + ".json"), j);
        table["models"][std::string(to_string(kind))] = j;
    }
    write_json(out_dir / "comparison.json", table);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    out << table.dump(2) << '\n';
}

struct PredictArgs {
    std::string checkpoint, article, json_text;
};

void cmd_predict(const PredictArgs& a, std::ostream& out) {
    if (a.json_text.empty() && a.article.empty()) throw CliError("predict needs --article or --json");
    const Checkpoint ckpt = read_checkpoint(checkpoint_path(a.checkpoint));
    json j;
    try {
        if (!a.json_text.empty()) {
            j = json::parse(a.json_text);
        } else {
            if (!fs::exists(a.article)) throw CliError("article file '" + a.article + "' not found");
            std::ifstream in(a.article);
            j = json::parse(in);
        }
    } catch (const json::parse_error& e) {
        throw ValidationError({std::string("article is not valid JSON: ") + e.what()});
    }
    ValidationOptions opts;
    opts.require_outcome = false;
    const ArticleRecord r = parse_article(j, opts);
    const FeatureBundle bundle = make_bundle(r, *ckpt.tokenizer, ckpt.normalizer, ckpt.model);
    const ForwardTrace t = forward(ckpt.params, ckpt.model, bundle);
    ordered_json o;
    o["id"] = r.id;
    o["task"] = to_string(ckpt.train.task);
    o["label"] = to_string(predict_label(t) == 1 ? ImpactLabel::high_impact : ImpactLabel::others);
    o["p"] = {t.p[0], t.p[1]};
    out << o.dump() << '\n';
}

struct ExportArgs {
    std::string checkpoint, data, out;
    std::size_t n_per_class = 1000;
    std::optional<std::uint64_t> seed;
};

void cmd_export(const ExportArgs& a, std::ostream& out, std::ostream& err) {
    const Checkpoint ckpt = read_checkpoint(checkpoint_path(a.checkpoint));
    const auto records = read_corpus(a.data, "split");
    require_labels(records, ckpt.train.task, a.data);
    std::vector<std::string> warnings;
    const auto rows = export_embeddings(ckpt.params, ckpt.model, labeled_split(ckpt, records), a.n_per_class,
                                        a.seed.value_or(ckpt.train.seed), &warnings);
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    write_embeddings_csv(a.out, rows);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    out << ordered_json{{"rows", rows.size()}, {"path", a.out}}.dump() << '\n';
}

struct CorrelationArgs {
    std::string corpus, method = "pearson", out;
};

void cmd_correlations(const CorrelationArgs& a, std::ostream& out) {
    const auto records = read_corpus(a.corpus, "label");
    for (const auto& r : records) {
        if (!r.jif || !r.aif) {
            throw CliError("record '" + r.id + "' has no jif/aif", "label the corpus with `imac label`");
        }
    }
    const CorrelationMatrix m = correlation_matrix(records, parse_correlation_method(a.method));
    const ordered_json j = m.to_json();
    if (!a.out.empty()) write_json(a.out, j);
    out << j.dump(2) << '\n';
}

struct StabilityArgs {
    std::string histories, out;
    std::int64_t threshold = 0;
};

void cmd_stability(const StabilityArgs& a, std::ostream& out) {
    if (!fs::exists(a.histories)) {
        throw CliError("citation histories '" + a.histories + "' not found",
                       "supply a CSV with header article_id,cits_4y,cits_8y or create one with `imac synth`");
    }
    const auto rows = read_citation_histories(a.histories);
    const ordered_json j = stability_report(rows, a.threshold).to_json();
    if (!a.out.empty()) write_json(a.out, j);
    out << j.dump(2) << '\n';
}

struct SensitivityArgs {
    std::string histories;
    double jif = 1.0, d = 0.4, cits_m = 29.0;
};

void cmd_sensitivity(const SensitivityArgs& a, std::ostream& out) {
    if (!fs::exists(a.histories)) throw CliError("citation histories '" + a.histories + "' not found");
    const auto rows = read_citation_histories(a.histories);
    const AifParams params{a.d, a.cits_m};
    params.validate();
    std::int64_t changed = 0, violations = 0;
    for (const auto& h : rows) {
        if (h.cits_4y == h.cits_8y) continue;
        ++changed;
        const SensitivityGap g = sensitivity_gap(h, params, a.jif);
        if (!(g.aif_side < g.citation_side)) ++violations;
    }
    out << ordered_json{{"histories", rows.size()}, {"changed", changed}, {"violations", violations}}.dump(2)
        << '\n';
}

struct SynthArgs {
    std::string out;
    SyntheticSpec spec;
    std::size_t histories = 1000;
    std::uint64_t history_seed = 4;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
    const SyntheticCorpus c = generate_corpus(a.spec);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_jsonl(dir / "articles.jsonl", c.articles);
    write_journals(dir / "journals.jsonl", c.journals);
    write_citation_histories(dir / "citation_histories.csv", generate_histories(a.histories, a.history_seed));
    out << ordered_json{{"articles", c.articles.size()}, {"journals", c.journals.size()}, {"histories", a.histories}}
               .dump(2)
        << '\n';
}

void report_error(std::ostream& err, const std::string& command, const std::string& message,
                  const std::string& hint, const std::vector<std::string>& problems = {}) {
    ordered_json e;
    e["command"] = command;
    e["message"] = message;
    if (!hint.empty()) e["hint"] = hint;
    if (!problems.empty()) e["problems"] = problems;
    err << ordered_json{{"error", e}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Scholarly impact classification toolkit", "imac"};
    app.require_subcommand(1);

    IngestArgs ingest_a;
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate a raw JSONL corpus");
    ingest_cmd->add_option("--input", ingest_a.input, "raw JSONL")->required();
    ingest_cmd->add_option("--out", ingest_a.out, "validated JSONL")->required();
    ingest_cmd->add_option("--rejections", ingest_a.rejections, "write the rejection report here");

    LabelArgs label_a;
    auto* label_cmd = app.add_subcommand("label", "Attach JIF, AIF and impact labels");
    add_common(label_cmd, label_a.common);
    label_cmd->add_option("--corpus", label_a.corpus, "validated JSONL")->required();
    label_cmd->add_option("--journals", label_a.journals, "journal table JSONL")->required();
    label_cmd->add_option("--out", label_a.out, "labeled JSONL")->required();
    label_cmd->add_option("--d", label_a.d, "citation/venue balance in (0, 0.5)");
    label_cmd->add_option("--cits-m", label_a.cits_m, "median citation count (default: corpus median)");

    SplitArgs split_a;
    auto* split_cmd = app.add_subcommand("split", "Stratified train/val/test split");
    add_common(split_cmd, split_a.common);
    split_cmd->add_option("--corpus", split_a.corpus, "labeled JSONL")->required();
    split_cmd->add_option("--out", split_a.out, "output directory")->required();
    split_cmd->add_option("--train", split_a.train);
    split_cmd->add_option("--val", split_a.val);
    split_cmd->add_option("--test", split_a.test);
    split_cmd->add_option("--seed", split_a.seed);
    split_cmd->add_flag("--no-stratify", split_a.no_stratify);

    TrainArgs train_a;
    auto* train_cmd = app.add_subcommand("train", "Train the network and save a checkpoint");
    add_common(train_cmd, train_a.common);
    train_cmd->add_option("--splits", train_a.splits, "directory written by `imac split`")->required();
    train_cmd->add_option("--out", train_a.out, "checkpoint directory (relative to $IMAC_CHECKPOINT_ROOT)")
        ->required();
    train_cmd->add_option("--epochs", train_a.epochs);
    train_cmd->add_option("--seed", train_a.seed);
    train_cmd->add_option("--lr", train_a.lr);
    train_cmd->add_option("--alpha", train_a.alpha, "contrastive loss weight");
    train_cmd->add_option("--batch-size", train_a.batch_size);
    train_cmd->add_option("--ablation", train_a.ablation, "full, no_fusion or no_supcon");
    train_cmd->add_flag("--repeated", train_a.repeated, "also run the multi-seed protocol on the test split");
    train_cmd->add_option("--runs", train_a.runs, "number of runs for --repeated");

    EvaluateArgs eval_a;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a labeled split");
    eval_cmd->add_option("--checkpoint", eval_a.checkpoint)->required();
    eval_cmd->add_option("--data", eval_a.data, "labeled JSONL, e.g. <splits>/test.jsonl")->required();
    eval_cmd->add_option("--out", eval_a.out, "metrics JSON");

    BaselinesArgs base_a;
    auto* base_cmd = app.add_subcommand("baselines", "Fit and evaluate knn, svm, lr and zeror");
    add_common(base_cmd, base_a.common);
    base_cmd->add_option("--splits", base_a.splits, "directory written by `imac split`")->required();
    base_cmd->add_option("--out", base_a.out, "output directory")->required();
    base_cmd->add_option("--k", base_a.k, "knn neighbours");

    PredictArgs pred_a;
    auto* pred_cmd = app.add_subcommand("predict", "Classify one article");
    pred_cmd->add_option("--checkpoint", pred_a.checkpoint)->required();
    auto* article_opt = pred_cmd->add_option("--article", pred_a.article, "JSON file with one article");
    auto* json_opt = pred_cmd->add_option("--json", pred_a.json_text, "the article as a JSON string");
    article_opt->excludes(json_opt);

    ExportArgs exp_a;
    auto* exp_cmd = app.add_subcommand("export-embeddings", "2-D projection of fused features");
    exp_cmd->add_option("--checkpoint", exp_a.checkpoint)->required();
    exp_cmd->add_option("--data", exp_a.data, "labeled JSONL")->required();
    exp_cmd->add_option("--out", exp_a.out, "CSV path")->required();
    exp_cmd->add_option("--n-per-class", exp_a.n_per_class);
    exp_cmd->add_option("--seed", exp_a.seed);

    auto* analyze_cmd = app.add_subcommand("analyze", "Bibliometric analyses");
    analyze_cmd->require_subcommand(1);
    CorrelationArgs corr_a;
    auto* corr_cmd = analyze_cmd->add_subcommand("correlations", "Indicator/feature correlation table");
    corr_cmd->add_option("--corpus", corr_a.corpus, "labeled JSONL")->required();
    corr_cmd->add_option("--method", corr_a.method, "pearson or spearman");
    corr_cmd->add_option("--out", corr_a.out);
    StabilityArgs stab_a;
    auto* stab_cmd = analyze_cmd->add_subcommand("stability", "Label flips between 4- and 8-year horizons");
    stab_cmd->add_option("--histories", stab_a.histories, "CSV article_id,cits_4y,cits_8y")->required();
    stab_cmd->add_option("--threshold", stab_a.threshold, "impactful iff citations exceed this")->required();
    stab_cmd->add_option("--out", stab_a.out);
    SensitivityArgs sens_a;
    auto* sens_cmd = analyze_cmd->add_subcommand("sensitivity", "AIF vs raw-citation sensitivity check");
    sens_cmd->add_option("--histories", sens_a.histories)->required();
    sens_cmd->add_option("--jif", sens_a.jif);
    sens_cmd->add_option("--d", sens_a.d);
    sens_cmd->add_option("--cits-m", sens_a.cits_m);

    SynthArgs synth_a;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus, journal table and histories");
    synth_cmd->add_option("--out", synth_a.out, "output directory")->required();
    synth_cmd->add_option("--articles", synth_a.spec.articles);
    synth_cmd->add_option("--seed", synth_a.spec.seed);
    synth_cmd->add_option("--histories", synth_a.histories);
    synth_cmd->add_option("--history-seed", synth_a.history_seed);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    std::string command = "imac";
    for (const auto* sub : app.get_subcommands()) {
        command = sub->get_name();
        for (const auto* inner : sub->get_subcommands()) command += " " + inner->get_name();
    }
    try {
        if (ingest_cmd->parsed()) cmd_ingest(ingest_a, out);
        else if (label_cmd->parsed()) cmd_label(label_a, out);
        else if (split_cmd->parsed()) cmd_split(split_a, out);
        else if (train_cmd->parsed()) cmd_train(train_a, out);
        else if (eval_cmd->parsed()) cmd_evaluate(eval_a, out);
        else if (base_cmd->parsed()) cmd_baselines(base_a, out, err);
        else if (pred_cmd->parsed()) cmd_predict(pred_a, out);
        else if (exp_cmd->parsed()) cmd_export(exp_a, out, err);
        else if (corr_cmd->parsed()) cmd_correlations(corr_a, out);
        else if (stab_cmd->parsed()) cmd_stability(stab_a, out);
        else if (sens_cmd->parsed()) cmd_sensitivity(sens_a, out);
        else if (synth_cmd->parsed()) cmd_synth(synth_a, out);
    } catch (const CliError& e) {
        report_error(err, command, e.what(), e.hint());
        return 1;
    } catch (const ValidationError& e) {
        report_error(err, command, e.what(), "", e.problems());
        return 1;
    } catch (const std::exception& e) {
        report_error(err, command, e.what(), "");
        return 1;
    }
    return 0;
}

}  // namespace imac::cli
