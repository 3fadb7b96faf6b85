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

#include "namerec/evaluation.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "namerec/errors.h"
#include "namerec/text.h"
#include "oracles.h"

namespace namerec {
namespace {

using enum Tag;

TaggedUtterance make(const std::string& text, std::vector<Tag> tags, const std::string& country = "XA",
                     Gender gender = Gender::kFemale) {
  TaggedUtterance u;
  u.tokens = tokenize(text);
  u.tags = std::move(tags);
  u.meta.country = country;
  u.meta.gender = gender;
  return u;
}

std::vector<Span> spans_of(const std::vector<std::pair<size_t, size_t>>& ranges) {
  std::vector<Span> out;
  for (auto [s, e] : ranges) out.push_back({s, e, ""});
  return out;
}

TEST(ExtractSpansTest, Examples) {
  const std::vector<Tag> a = {kBegin, kInside, kOutside, kOutside, kOutside};
  EXPECT_EQ(extract_spans(a), spans_of({{0, 2}}));
  const std::vector<Tag> none = {kOutside, kOutside, kOutside};
  EXPECT_TRUE(extract_spans(none).empty());
  const std::vector<Tag> orphan = {kOutside, kInside, kInside, kOutside, kBegin};
  EXPECT_EQ(extract_spans(orphan), spans_of({{1, 3}, {4, 5}}));
  const std::vector<Tag> two = {kBegin, kBegin, kInside};
  EXPECT_EQ(extract_spans(two), spans_of({{0, 1}, {1, 3}}));
  const std::vector<Tag> empty;
  EXPECT_TRUE(extract_spans(empty).empty());
}

TEST(ExtractSpansTest, FillsText) {
  const std::vector<std::string> tokens = {"ask", "Kelsey", "Scott", "now"};
  const std::vector<Tag> tags = {kOutside, kBegin, kInside, kOutside};
  const auto spans = extract_spans(tokens, tags);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].text, "Kelsey Scott");
  EXPECT_EQ(spans[0].length(), 2u);
}

TEST(ExtractSpansTest, DisjointOrderedAndCoverNonOutside) {
  Rng rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Tag> tags(rng.below(12));
    for (Tag& t : tags) t = oracle::random_tag(rng);
    const auto spans = extract_spans(tags);
    std::vector<bool> covered(tags.size(), false);
    size_t prev_end = 0;
    for (const Span& s : spans) {
      EXPECT_LT(s.start, s.end);
      EXPECT_LE(prev_end, s.start);
      prev_end = s.end;
      for (size_t i = s.start; i < s.end; ++i) covered[i] = true;
    }
    for (size_t i = 0; i < tags.size(); ++i) EXPECT_EQ(covered[i], tags[i] != kOutside);
    const auto brute = oracle::brute_spans(tags);
    ASSERT_EQ(spans.size(), brute.size());
    for (size_t k = 0; k < spans.size(); ++k) {
      EXPECT_EQ(spans[k].start, brute[k].first);
      EXPECT_EQ(spans[k].end, brute[k].second);
    }
  }
}

class KelseyScottTest : public ::testing::Test {
 protected:
  // "please add my daughter Kelsey Scott so she is covered"
  //   0      1   2  3        4      5     6  7   8  9
  TaggedUtterance gold = make("please add my daughter Kelsey Scott so she is covered",
                              {kOutside, kOutside, kOutside, kOutside, kBegin, kInside, kOutside, kOutside,
                               kOutside, kOutside});

  NameScore score(size_t s, size_t e) {
    const std::vector<Span> p = {{s, e, ""}};
    const auto scores = score_utterance(gold, p);
    EXPECT_EQ(scores.size(), 1u);
    return scores.at(0);
  }
};

TEST_F(KelseyScottTest, ExactIsStrict) {
  const NameScore s = score(4, 6);
  EXPECT_EQ(s.outcome, Outcome::kStrict);
  EXPECT_TRUE(s.first_correct);
  EXPECT_EQ(s.last_correct, true);
}

TEST_F(KelseyScottTest, FirstOnlyIsPartial) {
  const NameScore s = score(4, 5);
  EXPECT_EQ(s.outcome, Outcome::kPartial);
  EXPECT_TRUE(s.first_correct);
  EXPECT_EQ(s.last_correct, false);
}

TEST_F(KelseyScottTest, LeadingNonNameTokenIsMiss) {
  const NameScore s = score(3, 5);
  EXPECT_EQ(s.outcome, Outcome::kMiss);
  EXPECT_FALSE(s.first_correct);
}

TEST_F(KelseyScottTest, TrailingNonNameTokenIsMiss) {
  EXPECT_EQ(score(4, 7).outcome, Outcome::kMiss);
}

TEST_F(KelseyScottTest, LastOnlyIsPartial) {
  const NameScore s = score(5, 6);
  EXPECT_EQ(s.outcome, Outcome::kPartial);
  EXPECT_FALSE(s.first_correct);
  EXPECT_EQ(s.last_correct, true);
}

TEST_F(KelseyScottTest, NothingPredictedIsMiss) {
  const auto scores = score_utterance(gold, {});
  ASSERT_EQ(scores.size(), 1u);
  EXPECT_EQ(scores[0].outcome, Outcome::kMiss);
}

TEST_F(KelseyScottTest, ExactWinsOverAnExtraBadSpan) {
  const std::vector<Span> p = {{2, 3, ""}, {4, 6, ""}};
  EXPECT_EQ(score_utterance(gold, p)[0].outcome, Outcome::kStrict);
}

TEST(ScoreUtteranceTest, MiddleTokenOfThreeIsMiss) {
  const TaggedUtterance gold = make("call Anna Maria Lopez today", {kOutside, kBegin, kInside, kInside, kOutside});
  const std::vector<Span> middle = {{2, 3, ""}};
  EXPECT_EQ(score_utterance(gold, middle)[0].outcome, Outcome::kMiss);
  const std::vector<Span> tail = {{2, 4, ""}};
  const NameScore s = score_utterance(gold, tail)[0];
  EXPECT_EQ(s.outcome, Outcome::kPartial);
  EXPECT_EQ(s.last_correct, true);
  const std::vector<Span> head = {{1, 3, ""}};
  EXPECT_TRUE(score_utterance(gold, head)[0].first_correct);
}

TEST(ScoreUtteranceTest, SingleTokenNameHasNoLastFlag) {
  const TaggedUtterance gold = make("Kelsey needs glasses", {kBegin, kOutside, kOutside});
  const std::vector<Span> p = {{0, 1, ""}};
  const NameScore s = score_utterance(gold, p)[0];
  EXPECT_EQ(s.outcome, Outcome::kStrict);
  EXPECT_FALSE(s.last_correct.has_value());
}

TEST(ScoreUtteranceTest, NoGoldNameIsContractError) {
  const TaggedUtterance gold = make("no name here", {kOutside, kOutside, kOutside});
  EXPECT_THROW(score_utterance(gold, {}), ContractError);
}

TEST(EvaluatePredictionsTest, PerfectAndAllOutside) {
  Rng rng(5);
  std::vector<TaggedUtterance> gold;
  for (int i = 0; i < 30; ++i) gold.push_back(oracle::random_gold(rng));
  std::vector<std::vector<Tag>> perfect, blank;
  for (const auto& u : gold) {
    perfect.push_back(u.tags);
    blank.emplace_back(u.tags.size(), kOutside);
  }
  const EvalReport good = evaluate_predictions(gold, perfect);
  EXPECT_EQ(good.overall.strict_accuracy(), 1.0);
  EXPECT_EQ(good.overall.partial_accuracy(), 1.0);
  for (const auto& [k, g] : good.by_country) EXPECT_EQ(g.strict_accuracy(), 1.0) << k;
  for (const auto& [k, g] : good.by_gender) EXPECT_EQ(g.partial_accuracy(), 1.0) << k;
  EXPECT_TRUE(good.false_positives.empty());
  const EvalReport bad = evaluate_predictions(gold, blank);
  EXPECT_EQ(bad.overall.strict_accuracy(), 0.0);
  EXPECT_EQ(bad.overall.partial_accuracy(), 0.0);
}

void expect_matches_oracle(const std::vector<TaggedUtterance>& gold, const std::vector<std::vector<Tag>>& pred) {
  const EvalReport r = evaluate_predictions(gold, pred);
  const oracle::Counts c = oracle::brute_score(gold, pred);
  EXPECT_EQ(r.overall.strict, c.strict);
  EXPECT_EQ(r.overall.partial, c.partial);
  EXPECT_EQ(r.overall.support, c.support);
  EXPECT_EQ(r.first_last.first_only_n, c.first_only_n);
  EXPECT_EQ(r.first_last.first_only_first_correct, c.first_only_first);
  EXPECT_EQ(r.first_last.full_n, c.full_n);
  EXPECT_EQ(r.first_last.full_first_correct, c.full_first);
  EXPECT_EQ(r.first_last.full_last_correct, c.full_last);
  ASSERT_EQ(r.by_country.size(), c.country.size());
  for (const auto& [k, v] : c.country) {
    EXPECT_EQ(r.by_country.at(k).strict, v.first) << k;
    EXPECT_EQ(r.by_country.at(k).support, v.second) << k;
  }
  for (const auto& [k, v] : c.gender) {
    EXPECT_EQ(r.by_gender.at(k).strict, v.first) << k;
    EXPECT_EQ(r.by_gender.at(k).support, v.second) << k;
  }
}

TEST(EvaluatePredictionsTest, MatchesBruteForceScorer) {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TaggedUtterance> gold;
    std::vector<std::vector<Tag>> pred;
    for (int i = 0; i < 50; ++i) {
      gold.push_back(oracle::random_gold(rng));
      pred.push_back(oracle::random_prediction(rng, gold.back().tags));
    }
    expect_matches_oracle(gold, pred);
  }
}

TEST(EvaluatePredictionsTest, GroupInvariantsAndOrderInvariance) {
  Rng rng(77);
  std::vector<TaggedUtterance> gold;
  std::vector<std::vector<Tag>> pred;
  for (int i = 0; i < 80; ++i) {
    gold.push_back(oracle::random_gold(rng));
    pred.push_back(oracle::random_prediction(rng, gold.back().tags));
  }
  const EvalReport r = evaluate_predictions(gold, pred);
  size_t support = 0;
  for (const auto& [k, g] : r.by_country) {
    support += g.support;
    EXPECT_GE(g.partial, g.strict);
  }
  EXPECT_EQ(support, r.overall.support);
  EXPECT_GE(r.overall.partial_accuracy(), r.overall.strict_accuracy());
  std::vector<size_t> order(gold.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<TaggedUtterance> g2;
  std::vector<std::vector<Tag>> p2;
  for (size_t i : order) {
    g2.push_back(gold[i]);
    p2.push_back(pred[i]);
  }
  const EvalReport r2 = evaluate_predictions(g2, p2);
  EXPECT_EQ(report_to_json(r), report_to_json(r2));
}

TEST(EvaluatePredictionsTest, MultiNameUtteranceCountsEachName) {
  const TaggedUtterance gold =
      make("Ana and Bo Lee met", {kBegin, kOutside, kBegin, kInside, kOutside}, "XB", Gender::kMale);
  const std::vector<TaggedUtterance> g = {gold};
  const std::vector<std::vector<Tag>> p = {{kBegin, kOutside, kBegin, kOutside, kOutside}};
  const EvalReport r = evaluate_predictions(g, p);
  EXPECT_EQ(r.overall.support, 2u);
  EXPECT_EQ(r.overall.strict, 1u);
  EXPECT_EQ(r.overall.partial, 2u);
  EXPECT_EQ(r.by_country.at("XB").support, 2u);
  EXPECT_EQ(r.by_gender.at("M").strict, 1u);
}

TEST(FirstLastTest, HandTabulatedSixUtterances) {
  const std::vector<TaggedUtterance> gold = {
      make("Ana called", {kBegin, kOutside}),
      make("Ana called", {kBegin, kOutside}),
      make("ask Bo Lee", {kOutside, kBegin, kInside}),
      make("ask Bo Lee", {kOutside, kBegin, kInside}),
      make("ask Bo Lee", {kOutside, kBegin, kInside}),
      make("ask Bo Lee", {kOutside, kBegin, kInside}),
  };
  const std::vector<std::vector<Tag>> pred = {
      {kBegin, kOutside},            // first-only hit
      {kOutside, kOutside},          // first-only miss
      {kOutside, kBegin, kInside},   // both
      {kOutside, kBegin, kOutside},  // first
      {kOutside, kOutside, kBegin},  // last
      {kBegin, kInside, kInside},    // runs into "ask": nothing
  };
  const EvalReport r = evaluate_predictions(gold, pred);
  EXPECT_EQ(r.first_last, (FirstLastTable{2, 1, 4, 2, 2}));
  EXPECT_EQ(r.overall.strict, 2u);
  EXPECT_EQ(r.overall.partial, 4u);
}

TEST(FirstLastTest, ForcedCases) {
  NameScore full_strict{{0, 2, ""}, Outcome::kStrict, true, true};
  NameScore full_first{{0, 2, ""}, Outcome::kPartial, true, false};
  const std::vector<NameScore> all_strict(3, full_strict);
  EXPECT_EQ(first_last_accuracy(all_strict), (FirstLastTable{0, 0, 3, 3, 3}));
  const std::vector<NameScore> firsts(3, full_first);
  EXPECT_EQ(first_last_accuracy(firsts), (FirstLastTable{0, 0, 3, 3, 0}));
}

TEST(FalsePositiveTest, LondonRanksFirstAndTiesAreLexicographic) {
  std::vector<TaggedUtterance> gold;
  std::vector<std::vector<Tag>> pred;
  for (int i = 0; i < 5; ++i) {
    gold.push_back(make("Ana flew to London", {kBegin, kOutside, kOutside, kOutside}));
    pred.push_back({kBegin, kOutside, kOutside, kBegin});
  }
  gold.push_back(make("Ana saw Paris and Egypt", {kBegin, kOutside, kOutside, kOutside, kOutside}));
  pred.push_back({kBegin, kOutside, kBegin, kOutside, kBegin});
  const auto fp = false_positive_counts(gold, pred, 10);
  ASSERT_EQ(fp.size(), 3u);
  EXPECT_EQ(fp[0], (std::pair<std::string, size_t>{"London", 5}));
  EXPECT_EQ(fp[1].first, "Egypt");
  EXPECT_EQ(fp[2].first, "Paris");
  EXPECT_EQ(false_positive_counts(gold, pred, 1).size(), 1u);
  EXPECT_THROW(evaluate_predictions(gold, pred, 0), ContractError);
}

TEST(FalsePositiveTest, SpanTouchingGoldIsNotFalsePositive) {
  const std::vector<TaggedUtterance> gold = {make("my daughter Kelsey", {kOutside, kOutside, kBegin})};
  const std::vector<std::vector<Tag>> pred = {{kOutside, kBegin, kInside}};
  EXPECT_TRUE(false_positive_counts(gold, pred, 5).empty());
}

TEST(EvaluatePredictionsTest, NamelessUtterancesOnlyFeedFalsePositives) {
  const std::vector<TaggedUtterance> gold = {make("Ana called", {kBegin, kOutside}),
                                             make("see London", {kOutside, kOutside}, "None")};
  const std::vector<std::vector<Tag>> pred = {{kBegin, kOutside}, {kOutside, kBegin}};
  const EvalReport r = evaluate_predictions(gold, pred);
  EXPECT_EQ(r.utterances, 2u);
  EXPECT_EQ(r.nameless_utterances, 1u);
  EXPECT_EQ(r.overall.support, 1u);
  EXPECT_EQ(r.by_country.count("None"), 0u);
  ASSERT_EQ(r.false_positives.size(), 1u);
  EXPECT_EQ(r.false_positives[0].first, "London");
}

TEST(EvaluatePredictionsTest, LengthMismatchIsContractError) {
  const std::vector<TaggedUtterance> gold = {make("Ana called", {kBegin, kOutside})};
  const std::vector<std::vector<Tag>> short_pred = {{kBegin}};
  EXPECT_THROW(evaluate_predictions(gold, short_pred), ContractError);
  EXPECT_THROW(evaluate_predictions(gold, {}), ContractError);
}

TEST(ReportTest, RenderingAndFiles) {
  const std::vector<TaggedUtterance> gold = {make("Ana called", {kBegin, kOutside}, "XA"),
                                             make("Bo called", {kBegin, kOutside}, "XB, Inc")};
  const std::vector<std::vector<Tag>> pred = {{kBegin, kOutside}, {kOutside, kOutside}};
  const EvalReport r = evaluate_predictions(gold, pred);
  const std::string csv = render_country_csv(r);
  EXPECT_EQ(csv, "country,strict_accuracy,partial_accuracy,support\nXA,1.0000,1.0000,1\n\"XB, Inc\",0.0000,0.0000,1\n");
  const auto j = nlohmann::json::parse(report_to_json(r));
  EXPECT_EQ(j["overall"]["support"], 2);
  EXPECT_DOUBLE_EQ(j["overall"]["strict_accuracy"].get<double>(), 0.5);
  EXPECT_EQ(j["first_last"]["first_only"]["n"], 2);
  const std::string md = render_summary_markdown(r);
  EXPECT_NE(md.find("0.5000"), std::string::npos) << md;
  const auto dir = std::filesystem::temp_directory_path() / "namerec_eval_report_test";
  std::filesystem::remove_all(dir);
  write_report(r, dir);
  for (const char* f : {"report.json", "summary.md", "countries.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "countries.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), csv);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace namerec
