#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "ocreval/adapters.hpp"
#include "ocreval/cli.hpp"
#include "ocreval/dataset.hpp"
#include "stub_server.hpp"

using namespace ocreval;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ocreval_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "ocreval");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
  }

  fs::path write(const std::string& name, const std::string& content) {
    auto p = dir_ / name;
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

  // n scene lines with local images img<i>.png holding distinct bytes.
  fs::path manifest(std::size_t n) {
    std::string lines;
    for (std::size_t i = 0; i < n; ++i) {
      write("img" + std::to_string(i) + ".png", "bytes-" + std::to_string(i));
      json r = {{"id", "s" + std::to_string(i)},
                {"image", "img" + std::to_string(i) + ".png"},
                {"ground_truth", "line number " + std::to_string(i)},
                {"scenario", "scene"},
                {"language", i % 2 ? "zh" : "en"},
                {"granularity", "line"}};
      lines += r.dump() + "\n";
    }
    return write("manifest.jsonl", lines);
  }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

json report_json(const fs::path& dir) { return json::parse(slurp(dir / "report.json")); }

}  // namespace

TEST_F(Cli, ValidateAcceptsGoodManifest) {
  auto m = manifest(4);
  auto r = run({"validate", "--manifest", m.string()});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("4 samples"), std::string::npos);
  EXPECT_NE(r.out.find("scene/en: 2"), std::string::npos);
  EXPECT_NE(r.out.find("scene/zh: 2"), std::string::npos);

  r = run({"validate", "--manifest", m.string(), "--stratify", "granularity"});
  EXPECT_NE(r.out.find("line: 4"), std::string::npos);
}

TEST_F(Cli, ValidateReportsDuplicateOnBothLines) {
  write("a.png", "x");
  auto m = write("m.jsonl",
                 R"({"id":"s1","image":"a.png","ground_truth":"a","scenario":"scene","language":"en","granularity":"line"})"
                 "\n"
                 R"({"id":"s2","image":"a.png","ground_truth":"b","scenario":"scene","language":"en","granularity":"line"})"
                 "\n"
                 R"({"id":"s1","image":"a.png","ground_truth":"c","scenario":"scene","language":"en","granularity":"line"})"
                 "\n");
  auto r = run({"validate", "--manifest", m.string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("s1"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("1, 3"), std::string::npos) << r.err;
}

TEST_F(Cli, ValidateNamesMissingImage) {
  auto m = write("m.jsonl",
                 R"({"id":"s1","image":"nowhere/missing.png","ground_truth":"a","scenario":"scene","language":"en","granularity":"line"})"
                 "\n");
  auto r = run({"validate", "--manifest", m.string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("missing.png"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find(":1:"), std::string::npos) << r.err;
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"validate", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"validate"}).code, cli::kExitUsage);
  auto m = manifest(1);
  EXPECT_EQ(run({"validate", "--manifest", m.string(), "--stratify", "colour"}).code, cli::kExitUsage);
  auto bad = write("bad.json", R"({"unknown_key": 1})");
  EXPECT_EQ(run({"validate", "--config", bad.string(), "--manifest", m.string()}).code, cli::kExitUsage);
  EXPECT_EQ(run({"simulate", "--sub-rate", "0.8", "--del-rate", "0.5", "--out", p("sim")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"simulate", "--sub-rate", "-0.1", "--out", p("sim")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"simulate", "--scenario", "poetry", "--out", p("sim")}).code, cli::kExitUsage);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
}

TEST_F(Cli, SimulateThenScoreIsDeterministic) {
  for (const char* d : {"a", "b"}) {
    auto r = run({"simulate", "--scenario", "scene", "--count", "20", "--seed", "5", "--sub-rate", "0.1",
                  "--out", p(d)});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  }
  EXPECT_EQ(slurp(dir_ / "a/manifest.jsonl"), slurp(dir_ / "b/manifest.jsonl"));
  EXPECT_EQ(slurp(dir_ / "a/predictions.jsonl"), slurp(dir_ / "b/predictions.jsonl"));

  for (const char* d : {"a", "b"}) {
    auto r = run({"score", "--manifest", p(std::string(d) + "/manifest.jsonl"), "--predictions",
                  p(std::string(d) + "/predictions.jsonl"), "--out", p(std::string(d) + "/scores")});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("## simulated"), std::string::npos);
  }
  for (const char* f : {"report.json", "report.csv", "report.md", "scores.jsonl", "radar.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a/scores" / f), slurp(dir_ / "b/scores" / f)) << f;
  }
  auto rep = report_json(dir_ / "a/scores");
  ASSERT_EQ(rep["rows"].size(), 2u);  // scene/en, scene/zh
  EXPECT_EQ(rep["rows"][0]["count"], 10);
  EXPECT_GT(rep["rows"][0]["mean"]["edit_distance"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(dir_ / "a/scores/effective_config.json"));
}

TEST_F(Cli, IdentityPredictionsScorePerfectly) {
  ASSERT_EQ(run({"simulate", "--scenario", "document", "--count", "4", "--out", p("sim")}).code, cli::kExitOk);
  auto r = run({"score", "--manifest", p("sim/manifest.jsonl"), "--predictions", p("sim/predictions.jsonl"),
                "--out", p("scores")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  for (const auto& row : report_json(dir_ / "scores")["rows"]) {
    EXPECT_EQ(row["mean"]["edit_distance"], 0.0);
    for (const char* m : {"f1", "precision", "recall", "bleu"}) EXPECT_EQ(row["mean"][m], 1.0) << m;
    EXPECT_GT(row["mean"]["meteor"].get<double>(), 0.9);
    EXPECT_EQ(row["failures"], 0);
  }
}

TEST_F(Cli, FailedAndMissingPredictionsScoreWorstCase) {
  auto m = manifest(3);
  std::vector<adapters::Prediction> preds = {
      {"s0", "m", "line number 0", 1, 1, "vision_chat", std::nullopt},
      {"s1", "m", "", 1, 3, "vision_chat", std::string("HTTP 500: injected failure")}};
  adapters::write_predictions(dir_ / "p.jsonl", preds, "");
  auto r = run({"score", "--manifest", m.string(), "--predictions", p("p.jsonl"), "--out", p("o"),
                "--stratify", "scenario"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;

  std::istringstream lines(slurp(dir_ / "o/scores.jsonl"));
  std::string line;
  std::vector<json> scores;
  while (std::getline(lines, line)) scores.push_back(json::parse(line));
  ASSERT_EQ(scores.size(), 3u);
  EXPECT_FALSE(scores[0]["failed"].get<bool>());
  EXPECT_EQ(scores[0]["edit_distance"], 0.0);
  EXPECT_TRUE(scores[1]["failed"].get<bool>());
  EXPECT_EQ(scores[1]["error"], "HTTP 500: injected failure");
  EXPECT_EQ(scores[2]["error"], "missing prediction");
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_EQ(scores[i]["edit_distance"], 1.0);
    EXPECT_EQ(scores[i]["meteor"], 0.0);
  }
  auto rep = report_json(dir_ / "o");
  EXPECT_EQ(rep["model_id"], "m");
  EXPECT_EQ(rep["rows"][0]["failures"], 2);
  EXPECT_NEAR(rep["rows"][0]["mean"]["edit_distance"].get<double>(), 2.0 / 3.0, 1e-15);
}

TEST_F(Cli, UnknownPredictionIdIsInvalid) {
  auto m = manifest(1);
  adapters::write_predictions(dir_ / "p.jsonl", {{"ghost", "m", "x", 0, 1, "replay", std::nullopt}}, "");
  auto r = run({"score", "--manifest", m.string(), "--predictions", p("p.jsonl"), "--out", p("o")});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("ghost"), std::string::npos);
}

TEST_F(Cli, ReplayRunIsByteIdentical) {
  auto m = manifest(5);
  std::vector<adapters::Prediction> canned;
  for (int i = 0; i < 4; ++i) canned.push_back({"s" + std::to_string(i), "old-model", "out " + std::to_string(i), 9, 1, "x", std::nullopt});
  adapters::write_predictions(dir_ / "canned.jsonl", canned, "");
  write("adapter.json", json{{"kind", "replay"}, {"replay_path", p("canned.jsonl")}}.dump());

  for (const char* d : {"r1", "r2"}) {
    auto r = run({"run", "--manifest", m.string(), "--adapter-config", p("adapter.json"), "--out", p(d)});
    ASSERT_EQ(r.code, cli::kExitOk) << r.err;
    EXPECT_NE(r.out.find("5 predictions (1 failed)"), std::string::npos) << r.out;
  }
  EXPECT_EQ(slurp(dir_ / "r1/predictions.jsonl"), slurp(dir_ / "r2/predictions.jsonl"));
  auto file = adapters::read_predictions(dir_ / "r1/predictions.jsonl");
  ASSERT_EQ(file.predictions.size(), 5u);
  EXPECT_EQ(file.predictions[0].model_id, "old-model");
  EXPECT_EQ(file.predictions[4].error, "missing replay output");
  EXPECT_FALSE(file.run_stamp.empty());
  auto meta = json::parse(slurp(dir_ / "r1/run_meta.json"));
  EXPECT_EQ(meta["samples"], 5);
  EXPECT_EQ(meta["failures"], 1);
  EXPECT_TRUE(meta.contains("started_at"));
}

TEST_F(Cli, VisionChatRunAgainstStub) {
  oracle::StubServer::Options opts;
  opts.reply_for = [](const std::string& key) { return "reply " + std::to_string(key.size()); };
  oracle::StubServer stub(opts);
  auto m = manifest(20);
  write("adapter.json", json{{"kind", "vision_chat"},
                             {"endpoint", stub.url("/v1/chat/completions")},
                             {"model_name", "stub-model"},
                             {"max_parallel", 4}}
                            .dump());
  auto r = run({"run", "--manifest", m.string(), "--adapter-config", p("adapter.json"), "--out", p("o")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_LE(stub.peak_in_flight(), 4);
  EXPECT_EQ(stub.requests(), 20);
  auto file = adapters::read_predictions(dir_ / "o/predictions.jsonl");
  ASSERT_EQ(file.predictions.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(file.predictions[i].sample_id, "s" + std::to_string(i));
    EXPECT_EQ(file.predictions[i].model_id, "stub-model");
    EXPECT_FALSE(file.predictions[i].error);
  }

  // --max-parallel overrides the adapter file.
  oracle::StubServer serial;
  write("adapter2.json", json{{"kind", "vision_chat"},
                              {"endpoint", serial.url("/v1/chat/completions")},
                              {"model_name", "stub-model"},
                              {"max_parallel", 8}}
                             .dump());
  r = run({"run", "--manifest", m.string(), "--adapter-config", p("adapter2.json"), "--max-parallel", "1",
           "--out", p("o2")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_EQ(serial.peak_in_flight(), 1);
}

TEST_F(Cli, UnreachableEndpointRecordsFailures) {
  auto m = manifest(3);
  write("adapter.json", json{{"kind", "vision_chat"},
                             {"endpoint", "http://127.0.0.1:9/v1/chat/completions"},
                             {"model_name", "m"},
                             {"max_retries", 2},
                             {"backoff_ms", 1},
                             {"timeout_s", 2}}
                            .dump());
  auto r = run({"run", "--manifest", m.string(), "--adapter-config", p("adapter.json"), "--out", p("o")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  auto file = adapters::read_predictions(dir_ / "o/predictions.jsonl");
  ASSERT_EQ(file.predictions.size(), 3u);
  for (const auto& pr : file.predictions) {
    EXPECT_EQ(pr.attempt, 3);
    EXPECT_TRUE(pr.error);
  }
}

TEST_F(Cli, MissingCredentialIsConfigError) {
  oracle::StubServer stub;
  auto m = manifest(2);
  write("adapter.json", json{{"kind", "vision_chat"},
                             {"endpoint", stub.url("/v1/chat/completions")},
                             {"model_name", "m"},
                             {"auth_env", "OCREVAL_TEST_SURELY_UNSET"}}
                            .dump());
  auto r = run({"run", "--manifest", m.string(), "--adapter-config", p("adapter.json"), "--out", p("o")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("OCREVAL_TEST_SURELY_UNSET"), std::string::npos);
  EXPECT_EQ(stub.requests(), 0);
}

TEST_F(Cli, ReportConvertsAndCompares) {
  ASSERT_EQ(run({"simulate", "--scenario", "scene", "--count", "4", "--sub-rate", "0.2", "--out", p("sim")}).code, 0);
  ASSERT_EQ(run({"score", "--manifest", p("sim/manifest.jsonl"), "--predictions", p("sim/predictions.jsonl"),
                 "--out", p("a")})
                .code,
            0);
  ASSERT_EQ(run({"score", "--manifest", p("sim/manifest.jsonl"), "--predictions", p("sim/predictions.jsonl"),
                 "--out", p("b"), "--model-id", "other"})
                .code,
            0);

  auto r = run({"report", "--input", p("a/report.json"), "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(dir_ / "a/report.csv"));
  r = run({"report", "--input", p("a/report.csv"), "--format", "markdown"});
  EXPECT_EQ(r.out, slurp(dir_ / "a/report.md"));
  r = run({"report", "--input", p("a/report.csv"), "--format", "structured", "--output", p("rt.json")});
  EXPECT_EQ(slurp(dir_ / "rt.json"), slurp(dir_ / "a/report.json"));
  r = run({"report", "--input", p("a/report.json"), "--format", "radar"});
  EXPECT_EQ(r.out, slurp(dir_ / "a/radar.csv"));

  r = run({"report", "--input", p("a/report.json"), "--input", p("b/report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("simulated"), std::string::npos);
  EXPECT_NE(r.out.find("other"), std::string::npos);

  EXPECT_EQ(run({"report", "--input", p("a/report.json"), "--format", "pdf"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"report", "--input", p("nope.json")}).code, cli::kExitInvalid);
}
