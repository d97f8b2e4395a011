#include <gtest/gtest.h>

#include <sys/wait.h>

#include "smdcard/ingest.hpp"
#include "util.hpp"

using testutil::TempDir;
using testutil::read_text;
using testutil::write_text;

namespace {

struct Run {
  int exit_code;
  std::string out;
  std::string err;
};

Run run(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + SMDCARD_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(out), read_text(err)};
}

void make_fixtures(const TempDir& dir) {
  write_text(dir / "recipe.json", R"({"fixture": {"n": 80, "seed": 2}, "defects": [{"kind": "mode_drop"}]})");
  const auto r = run(dir, "fixtures --recipe \"" + (dir / "recipe.json").string() + "\" --out \"" +
                              (dir / "fx").string() + "\"");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  write_text(dir / "config.json", R"({"metrics": {"CosineSimilarity": {}, "Recall": {}, "Coverage": {}},
    "embeddings": {"subgroup_column": "subgroup"}, "seed": 4})");
}

std::string evaluate_args(const TempDir& dir, const std::string& extra) {
  return "evaluate --real \"" + (dir / "fx" / "real.csv").string() + "\" --synthetic \"" +
         (dir / "fx" / "defect0_mode_drop_synthetic.csv").string() + "\" --config \"" +
         (dir / "config.json").string() + "\" " + extra;
}

}  // namespace

TEST(Cli, EvaluateWritesReportAndSummary) {
  TempDir dir;
  make_fixtures(dir);
  const auto r = run(dir, evaluate_args(dir, "--out \"" + (dir / "report.json").string() + "\""));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Coverage: "), std::string::npos) << r.out;
  const auto report = smdcard::read_report(dir / "report.json");
  EXPECT_EQ(report.seed, 4u);
}

TEST(Cli, ValidateConfigOnly) {
  TempDir dir;
  make_fixtures(dir);
  const auto r = run(dir, evaluate_args(dir, "--validate-config"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, "plan ok: 3 metrics\n");
}

TEST(Cli, MissingReferenceExitsTwoWithCode) {
  TempDir dir;
  make_fixtures(dir);
  const auto r = run(dir, "evaluate --synthetic \"" + (dir / "fx" / "defect0_mode_drop_synthetic.csv").string() +
                              "\" --config \"" + (dir / "config.json").string() + "\" --validate-config");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("E203: Recall: binary metric requires reference set (--real)"), std::string::npos) << r.err;
}

TEST(Cli, BadConfigAndUsageErrors) {
  TempDir dir;
  make_fixtures(dir);
  write_text(dir / "config.json", R"({"metrics": {"Recall": {}}, "thresholds": {"good": 50, "moderate": 60}})");
  auto r = run(dir, evaluate_args(dir, "--validate-config"));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("E102: thresholds not ordered"), std::string::npos) << r.err;
  r = run(dir, "evaluate --bogus");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.err.rfind("E100: ", 0), 0u) << r.err;
}

TEST(Cli, CardFromManifestAndReport) {
  TempDir dir;
  make_fixtures(dir);
  ASSERT_EQ(run(dir, evaluate_args(dir, "--out \"" + (dir / "report.json").string() + "\"")).exit_code, 0);
  write_text(dir / "manifest.json", R"({"general": {"Name": "Demo"}})");
  const auto base = "card --manifest \"" + (dir / "manifest.json").string() + "\" --report \"" +
                    (dir / "report.json").string() + "\" ";
  auto r = run(dir, base + "--format md --out \"" + (dir / "card.md").string() + "\"");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(read_text(dir / "card.md").rfind("## 1. ", 0), 0u);
  r = run(dir, base + "--format structured --out \"" + (dir / "card.json").string() + "\"");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  // Re-render from the structured card, which pins the report digest.
  r = run(dir, "card --manifest \"" + (dir / "card.json").string() + "\" --report \"" + (dir / "report.json").string() +
                   "\" --format structured --out \"" + (dir / "card2.json").string() + "\"");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(read_text(dir / "card.json"), read_text(dir / "card2.json"));
  r = run(dir, base + "--format pdf --out \"" + (dir / "x").string() + "\"");
  EXPECT_EQ(r.exit_code, 2);
}

TEST(Cli, StaleReportRejected) {
  TempDir dir;
  make_fixtures(dir);
  ASSERT_EQ(run(dir, evaluate_args(dir, "--out \"" + (dir / "report.json").string() + "\"")).exit_code, 0);
  write_text(dir / "manifest.json", R"({"general": {"Name": "Demo"}})");
  ASSERT_EQ(run(dir, "card --manifest \"" + (dir / "manifest.json").string() + "\" --report \"" +
                         (dir / "report.json").string() + "\" --format structured --out \"" +
                         (dir / "card.json").string() + "\"")
                .exit_code,
            0);
  write_text(dir / "config.json", R"({"metrics": {"CosineSimilarity": {}, "Recall": {}, "Coverage": {}},
    "embeddings": {"subgroup_column": "subgroup"}, "seed": 5})");
  ASSERT_EQ(run(dir, evaluate_args(dir, "--out \"" + (dir / "report.json").string() + "\"")).exit_code, 0);
  const auto r = run(dir, "card --manifest \"" + (dir / "card.json").string() + "\" --report \"" +
                              (dir / "report.json").string() + "\" --out \"" + (dir / "c.md").string() + "\"");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.err.rfind("E301: ", 0), 0u) << r.err;
}

TEST(Cli, CalibrateAndFixtureErrors) {
  TempDir dir;
  make_fixtures(dir);
  auto r = run(dir, "calibrate --real \"" + (dir / "fx" / "real.csv").string() + "\" --config \"" +
                        (dir / "config.json").string() + "\" --out \"" + (dir / "bounds.json").string() + "\"");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(smdcard::parse_json_file(dir / "bounds.json").contains("normalization"));
  write_text(dir / "bad.json", R"({"defects": [{"kind": "explode"}]})");
  r = run(dir, "fixtures --recipe \"" + (dir / "bad.json").string() + "\" --out \"" + (dir / "o").string() + "\"");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.err.rfind("E400: ", 0), 0u) << r.err;
}
