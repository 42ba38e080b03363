#include "cli.hpp"

#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace imac {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
    int code = 0;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Runs ingest, label and split once and trains a small two-epoch model.
class Pipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = testing::scratch_dir("cli_pipeline");
        const fs::path data = testing::synthetic_dir();
        for (const char* f : {"articles.jsonl", "journals.jsonl", "citation_histories.csv"}) {
            before_[f] = slurp(data / f);
        }

        json cfg = json::parse(slurp(testing::source_dir() / "configs" / "synthetic.json"));
        cfg["model"]["encoder"]["d"] = 16;
        cfg["model"]["encoder"]["layers"] = 1;
        cfg["train"]["epochs"] = 2;
        cfg["train"]["num_runs"] = 2;
        std::ofstream(dir_ / "config.json") << cfg.dump(2);

        const auto start = std::chrono::steady_clock::now();
        steps_.push_back(cli({"ingest", "--input", (data / "articles.jsonl").string(), "--out", s("clean.jsonl")}));
        steps_.push_back(cli({"label", "--corpus", s("clean.jsonl"), "--journals", (data / "journals.jsonl").string(),
                              "--out", s("labeled.jsonl")}));
        steps_.push_back(cli({"split", "--corpus", s("labeled.jsonl"), "--out", s("splits"), "--config", s("config.json")}));
        steps_.push_back(cli({"train", "--splits", s("splits"), "--out", s("ckpt"), "--config", s("config.json")}));
        seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    static std::string s(const std::string& name) { return (dir_ / name).string(); }

    static inline fs::path dir_;
    static inline std::vector<Result> steps_;
    static inline std::map<std::string, std::string> before_;
    static inline double seconds_ = 0.0;
};

TEST_F(Pipeline, EndToEndSucceedsQuickly) {
    for (const auto& r : steps_) EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_LT(seconds_, 300.0);
    for (const char* f : {"params.bin", "model.json", "tokenizer.json", "normalizer.json", "manifest.json",
                          "metrics.json"}) {
        EXPECT_TRUE(fs::exists(dir_ / "ckpt" / f)) << f;
    }
    const json metrics = json::parse(slurp(dir_ / "ckpt" / "metrics.json"));
    EXPECT_TRUE(metrics.contains("best_epoch"));
    EXPECT_TRUE(metrics.contains("val"));
}

TEST_F(Pipeline, LabelIsByteIdenticalOnRerun) {
    const fs::path data = testing::synthetic_dir();
    const Result r = cli({"label", "--corpus", s("clean.jsonl"), "--journals", (data / "journals.jsonl").string(),
                          "--out", s("labeled2.jsonl")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir_ / "labeled.jsonl"), slurp(dir_ / "labeled2.jsonl"));
    EXPECT_EQ(r.out, steps_[1].out);
}

TEST_F(Pipeline, EvaluateReportsAllMetrics) {
    const Result r = cli({"evaluate", "--checkpoint", s("ckpt"), "--data", s("splits/test.jsonl")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    for (const char* k : {"accuracy", "precision", "recall", "f1"}) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_GE(j["accuracy"].get<double>(), 0.0);
    EXPECT_LE(j["accuracy"].get<double>(), 1.0);
}

TEST_F(Pipeline, BaselinesWriteOneFilePerModel) {
    const Result r = cli({"baselines", "--splits", s("splits"), "--out", s("baselines")});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"knn.json", "svm.json", "lr.json", "zeror.json"}) {
        EXPECT_TRUE(fs::exists(dir_ / "baselines" / f)) << f;
    }
}

TEST_F(Pipeline, PredictIsANormalizedDistribution) {
    std::ifstream in(dir_ / "splits" / "test.jsonl");
    std::string line;
    std::getline(in, line);
    const Result a = cli({"predict", "--checkpoint", s("ckpt"), "--json", line});
    ASSERT_EQ(a.code, 0) << a.err;
    const json j = json::parse(a.out);
    EXPECT_NEAR(j["p"][0].get<double>() + j["p"][1].get<double>(), 1.0, 1e-12);
    EXPECT_EQ(cli({"predict", "--checkpoint", s("ckpt"), "--json", line}).out, a.out);

    json broken = json::parse(line);
    broken.erase("abstract");
    const Result bad = cli({"predict", "--checkpoint", s("ckpt"), "--json", broken.dump()});
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(bad.err.find("abstract"), std::string::npos) << bad.err;
}

TEST_F(Pipeline, ExportEmbeddingsWritesCsv) {
    const Result r = cli({"export-embeddings", "--checkpoint", s("ckpt"), "--data", s("splits/train.jsonl"), "--out",
                          s("emb.csv"), "--n-per-class", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(dir_ / "emb.csv");
    std::string l;
    int lines = 0;
    while (std::getline(in, l)) ++lines;
    EXPECT_EQ(lines, 21);
}

TEST_F(Pipeline, CorrelationTableShape) {
    const Result r = cli({"analyze", "correlations", "--corpus", s("labeled.jsonl")});
    ASSERT_EQ(r.code, 0) << r.err;
    const json c = json::parse(r.out)["coefficients"];
    EXPECT_EQ(c.size(), 3u);
    for (const auto& [name, row] : c.items()) EXPECT_EQ(row.size(), 6u) << name;
}

TEST_F(Pipeline, TrainingMetricsAreDeterministic) {
    const Result r = cli({"train", "--splits", s("splits"), "--out", s("ckpt2"), "--config", s("config.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir_ / "ckpt" / "metrics.json"), slurp(dir_ / "ckpt2" / "metrics.json"));
    EXPECT_EQ(slurp(dir_ / "ckpt" / "params.bin"), slurp(dir_ / "ckpt2" / "params.bin"));
}

TEST_F(Pipeline, CheckpointRootIsHonoured) {
    ::setenv("IMAC_CHECKPOINT_ROOT", dir_.c_str(), 1);
    const Result r = cli({"evaluate", "--checkpoint", "ckpt", "--data", s("splits/val.jsonl")});
    ::unsetenv("IMAC_CHECKPOINT_ROOT");
    EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(Pipeline, InputsAreNotModified) {
    const fs::path data = testing::synthetic_dir();
    for (const auto& [f, content] : before_) EXPECT_EQ(slurp(data / f), content) << f;
}

TEST(Cli, MissingArtifactNamesTheProducer) {
    const auto dir = testing::scratch_dir("cli_missing");
    const Result r = cli({"evaluate", "--checkpoint", (dir / "none").string(), "--data", (dir / "x.jsonl").string()});
    EXPECT_EQ(r.code, 1);
    const json e = json::parse(r.err)["error"];
    EXPECT_NE(e["hint"].get<std::string>().find("imac train"), std::string::npos);

    const Result s = cli({"train", "--splits", (dir / "nowhere").string(), "--out", (dir / "c").string()});
    EXPECT_EQ(s.code, 1);
    EXPECT_NE(json::parse(s.err)["error"]["hint"].get<std::string>().find("imac split"), std::string::npos);
}

TEST(Cli, StabilityAndSensitivity) {
    const fs::path h = testing::synthetic_dir() / "citation_histories.csv";
    const Result st = cli({"analyze", "stability", "--histories", h.string(), "--threshold", "100"});
    ASSERT_EQ(st.code, 0) << st.err;
    const Result se = cli({"analyze", "sensitivity", "--histories", h.string()});
    ASSERT_EQ(se.code, 0) << se.err;
    EXPECT_EQ(json::parse(se.out)["violations"], 0);
}

TEST(Cli, UnknownCommandFails) {
    EXPECT_NE(cli({"frobnicate"}).code, 0);
}

}  // namespace
}  // namespace imac
