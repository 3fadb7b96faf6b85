// Copyright 2026 The namerec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "namerec/cli.h"

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "fixtures.h"
#include "json.hpp"
#include "namerec/dataset.h"
#include "namerec/text.h"

namespace namerec {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  const int code = dispatch(args, in, out, err);
  return {code, out.str(), err.str()};
}

// Runs the real binary; returns its exit status.
int run_binary(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(NAMEREC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fixtures::scratch_dir("cli_test"));
    const Outcome r = invoke({"build-data", "--synthetic", "--out", (*dir_ / "data").string(), "--countries", "4",
                       "--names-per-country", "24", "--n-templates", "120", "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const Outcome t = invoke({"train", "--train", (*dir_ / "data/train.jsonl").string(), "--checkpoint",
                       (*dir_ / "model.ckpt").string(), "--epochs", "3", "--seed", "2"});
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }

  static fs::path path(const std::string& name) { return *dir_ / name; }

  static fs::path* dir_;
};

fs::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, HelpAndUsageErrors) {
  const Outcome help = invoke({"--help"});
  EXPECT_EQ(help.code, 0);
  for (const char* sub : {"build-data", "train", "evaluate", "predict", "gradcheck", "protocol"}) {
    EXPECT_NE(help.out.find(sub), std::string::npos) << sub;
  }
  EXPECT_EQ(invoke({"train", "--help"}).code, 0);
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"frobnicate"}).code, 1);
  EXPECT_EQ(invoke({"train", "--train", "x.jsonl"}).code, 1);
  EXPECT_EQ(invoke({"train", "--train", "x", "--checkpoint", "y", "--arch", "cnn"}).code, 1);
  EXPECT_EQ(invoke({"build-data", "--out", path("nothing").string()}).code, 1);
}

TEST_F(CliTest, BuildDataOutputsAndDeterminism) {
  for (const char* f : {"train.jsonl", "test.jsonl", "curation_report.json", "names.csv", "templates.jsonl"}) {
    EXPECT_TRUE(fs::exists(path("data") / f)) << f;
  }
  const auto report = nlohmann::json::parse(fixtures::read_file(path("data/curation_report.json")));
  EXPECT_EQ(report["names_in"], 96);
  const Outcome again = invoke({"build-data", "--synthetic", "--out", path("data2").string(), "--countries", "4",
                         "--names-per-country", "24", "--n-templates", "120", "--seed", "5"});
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(fixtures::read_file(path("data/train.jsonl")), fixtures::read_file(path("data2/train.jsonl")));
  EXPECT_EQ(fixtures::read_file(path("data/test.jsonl")), fixtures::read_file(path("data2/test.jsonl")));
  // The files written for the synthetic run feed the file-based path too.
  const Outcome files = invoke({"build-data", "--names", path("data/names.csv").string(), "--templates",
                         path("data/templates.jsonl").string(), "--out", path("data3").string(), "--seed", "5"});
  ASSERT_EQ(files.code, 0) << files.err;
  EXPECT_EQ(fixtures::read_file(path("data/train.jsonl")), fixtures::read_file(path("data3/train.jsonl")));
}

TEST_F(CliTest, MissingAndMalformedInputsAreDataErrors) {
  const Outcome missing = invoke({"build-data", "--names", path("none.csv").string(), "--templates",
                           path("none.jsonl").string(), "--out", path("x").string()});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("none.csv"), std::string::npos) << missing.err;
  fixtures::write_file(path("bad.jsonl"), "{\"tokens\": [\"a\"], \"tags\": [\"Q\"]}\n");
  const Outcome bad = invoke({"evaluate", "--checkpoint", path("model.ckpt").string(), "--test", path("bad.jsonl").string()});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find(":1:"), std::string::npos) << bad.err;
  fixtures::write_file(path("empty.csv"), "");
  fixtures::write_file(path("t.jsonl"), "{\"text\": \"{NAME} called\"}\n");
  EXPECT_EQ(invoke({"build-data", "--names", path("empty.csv").string(), "--templates", path("t.jsonl").string(),
                 "--out", path("y").string()})
                .code,
            2);
}

TEST_F(CliTest, EvaluateWritesReports) {
  const Outcome r = invoke({"evaluate", "--checkpoint", path("model.ckpt").string(), "--test",
                     path("data/test.jsonl").string(), "--report", path("report").string(), "--top-k", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Strict accuracy"), std::string::npos);
  for (const char* f : {"report.json", "summary.md", "countries.csv"}) EXPECT_TRUE(fs::exists(path("report") / f));
  const std::string csv = fixtures::read_file(path("report/countries.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "country,strict_accuracy,partial_accuracy,support");
  const Outcome wrong = invoke({"evaluate", "--checkpoint", path("model.ckpt").string(), "--test",
                         path("data/test.jsonl").string(), "--arch", "word"});
  EXPECT_EQ(wrong.code, 2);
}

TEST_F(CliTest, PredictEmitsJsonLines) {
  const auto train = read_dataset(path("data/train.jsonl"));
  const std::string line = train[0].text();
  const Outcome r = invoke({"predict", "--checkpoint", path("model.ckpt").string()}, line + "\n\nhello there\n");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string l;
  std::vector<nlohmann::json> rows;
  while (std::getline(lines, l)) rows.push_back(nlohmann::json::parse(l));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["text"], line);
  EXPECT_TRUE(rows[0]["names"].is_array());
  for (const auto& n : rows[0]["names"]) {
    EXPECT_LT(n["start"].get<int>(), n["end"].get<int>());
    EXPECT_TRUE(n["text"].is_string());
  }
  EXPECT_TRUE(rows[1]["names"].empty());
  fixtures::write_file(path("input.txt"), line + "\n");
  const Outcome file = invoke({"predict", "--checkpoint", path("model.ckpt").string(), "--input", path("input.txt").string()});
  ASSERT_EQ(file.code, 0);
  EXPECT_EQ(file.out.substr(0, file.out.find('\n')), r.out.substr(0, r.out.find('\n')));
}

TEST_F(CliTest, PredictFindsNameLearnedByToyModel) {
  const std::vector<std::string> templates = {"add {} to my dental plan", "please enroll {} in vision",
                                              "my spouse {} needs coverage", "remove {} from the policy",
                                              "{} moved out last year", "can {} join the medical plan"};
  const std::vector<std::pair<std::string, std::string>> names = {
      {"Erica", "Gupta"}, {"Tomas", "Reyes"}, {"Lena", "Okafor"}, {"Marco", "Ibsen"}};
  std::string jsonl;
  for (const auto& tpl : templates) {
    for (const auto& [first, last] : names) {
      TaggedUtterance u;
      const size_t at = tpl.find("{}");
      for (const auto& w : tokenize(tpl.substr(0, at))) u.tokens.push_back(w), u.tags.push_back(Tag::kOutside);
      u.tokens.insert(u.tokens.end(), {first, last});
      u.tags.insert(u.tags.end(), {Tag::kBegin, Tag::kInside});
      for (const auto& w : tokenize(tpl.substr(at + 2))) u.tokens.push_back(w), u.tags.push_back(Tag::kOutside);
      u.meta.country = "XA";
      jsonl += utterance_to_json_line(u) + "\n";
    }
  }
  fixtures::write_file(path("toy.jsonl"), jsonl);
  const Outcome t = invoke({"train", "--train", path("toy.jsonl").string(), "--checkpoint", path("toy.ckpt").string(),
                            "--epochs", "60", "--lr", "0.01", "--batch-size", "8"});
  ASSERT_EQ(t.code, 0) << t.err;
  const Outcome r = invoke({"predict", "--checkpoint", path("toy.ckpt").string()}, "add Erica Gupta to my dental plan\n");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto row = nlohmann::json::parse(r.out);
  ASSERT_EQ(row["names"].size(), 1u) << r.out;
  EXPECT_EQ(row["names"][0]["text"], "Erica Gupta");
  EXPECT_EQ(row["names"][0]["start"], 1);
  EXPECT_EQ(row["names"][0]["end"], 3);
}

TEST_F(CliTest, DivergentTrainingExitsThree) {
  const Outcome r = invoke({"train", "--train", path("data/train.jsonl").string(), "--checkpoint",
                     path("nan.ckpt").string(), "--epochs", "2", "--lr", "1e300", "--arch", "word"});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_FALSE(fs::exists(path("nan.ckpt")));
}

TEST_F(CliTest, ProtocolWritesTable) {
  const Outcome r = invoke({"protocol", "--train", path("data/train.jsonl").string(), "--test",
                     path("data/test.jsonl").string(), "--n-seeds", "1", "--epochs", "1", "--report",
                     path("protocol").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("protocol/protocol.md")));
  const auto j = nlohmann::json::parse(fixtures::read_file(path("protocol/protocol.json")));
  EXPECT_EQ(j["runs"].size(), 2u);
  EXPECT_NE(r.out.find("| mean | word |"), std::string::npos) << r.out;
}

TEST_F(CliTest, BinaryExitCodes) {
  const fs::path log = path("binary.log");
  EXPECT_EQ(run_binary("--help", log), 0);
  EXPECT_EQ(run_binary("train", log), 1);
  std::string bytes = fixtures::read_file(path("model.ckpt"));
  bytes[bytes.size() / 2] ^= 0x20;
  fixtures::write_file(path("corrupt.ckpt"), bytes);
  EXPECT_EQ(run_binary("evaluate --checkpoint " + path("corrupt.ckpt").string() + " --test " +
                           path("data/test.jsonl").string(),
                       log),
            2);
  fixtures::write_file(path("short.ckpt"), bytes.substr(0, 100));
  EXPECT_EQ(run_binary("predict --checkpoint " + path("short.ckpt").string() + " --input " +
                           path("data/test.jsonl").string(),
                       log),
            2);
}

TEST_F(CliTest, GradcheckPasses) {
  const fs::path log = path("gradcheck.log");
  EXPECT_EQ(run_binary("gradcheck --seed 3", log), 0);
  const std::string text = fixtures::read_file(log);
  EXPECT_NE(text.find("gradcheck passed"), std::string::npos) << text;
  EXPECT_NE(text.find("wordchar  char_lstm.U"), std::string::npos) << text;
}

}  // namespace
}  // namespace namerec
