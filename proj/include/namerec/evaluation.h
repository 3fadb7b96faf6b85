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

// Span-level name metrics.
//
// Every gold name is scored on its own:
//   Strict   a predicted span equals the gold span.
//   Partial  no exact match, but a predicted span lying inside the gold span
//            covers the first-name token or all last-name tokens.
//   Miss     otherwise. A prediction that runs past the gold span into
//            non-name tokens earns nothing.
// Partial accuracy counts Strict and Partial names together.

#ifndef NAMEREC_EVALUATION_H_
#define NAMEREC_EVALUATION_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "namerec/dataset.h"

namespace namerec {

struct Span {
  size_t start = 0;
  size_t end = 0;  // exclusive
  std::string text;

  size_t length() const { return end - start; }
  bool operator==(const Span&) const = default;
};

// Runs opened by B-PER and extended through following I-PER tags. An
// I-PER after O (or at position 0) opens a span of its own.
std::vector<Span> extract_spans(std::span<const Tag> tags);
// Same, with `text` filled from the tokens.
std::vector<Span> extract_spans(const std::vector<std::string>& tokens, std::span<const Tag> tags);

enum class Outcome { kStrict, kPartial, kMiss };
std::string_view to_string(Outcome o);

struct NameScore {
  Span gold;
  Outcome outcome = Outcome::kMiss;
  bool first_correct = false;
  // Present only for gold names of two or more tokens.
  std::optional<bool> last_correct;
};

// One score per gold span of `gold`, in order. Throws ContractError when
// `gold` has no tagged name.
std::vector<NameScore> score_utterance(const TaggedUtterance& gold, std::span<const Span> predicted);

struct GroupScore {
  size_t strict = 0;
  size_t partial = 0;  // includes strict
  size_t support = 0;  // gold names

  double strict_accuracy() const { return support ? static_cast<double>(strict) / support : 0.0; }
  double partial_accuracy() const { return support ? static_cast<double>(partial) / support : 0.0; }
  bool operator==(const GroupScore&) const = default;
};

struct FirstLastTable {
  size_t first_only_n = 0;
  size_t first_only_first_correct = 0;
  size_t full_n = 0;
  size_t full_first_correct = 0;
  size_t full_last_correct = 0;

  bool operator==(const FirstLastTable&) const = default;
};

struct EvalReport {
  size_t utterances = 0;
  // Utterances without a gold name; they only feed the false positives.
  size_t nameless_utterances = 0;
  GroupScore overall;
  std::map<std::string, GroupScore> by_country;
  std::map<std::string, GroupScore> by_gender;  // keyed F, M, U
  FirstLastTable first_last;
  std::vector<std::pair<std::string, size_t>> false_positives;
};

// Tallies first/last-name accuracy. Gold names of one token are first-only;
// longer ones are full names.
FirstLastTable first_last_accuracy(std::span<const NameScore> scores);

// Predicted spans that share no token with any gold span, counted by text,
// sorted by count descending and then text ascending, truncated to top_k.
std::vector<std::pair<std::string, size_t>> false_positive_counts(std::span<const TaggedUtterance> gold,
                                                                  std::span<const std::vector<Tag>> predicted,
                                                                  size_t top_k);

// Scores predicted tag sequences against the gold utterances. Group
// metrics use the utterance's meta country and gender for every gold name
// it contains. Throws ContractError on a length mismatch or top_k == 0.
EvalReport evaluate_predictions(std::span<const TaggedUtterance> gold, std::span<const std::vector<Tag>> predicted,
                                size_t top_k = 20);

std::string report_to_json(const EvalReport& report);
// Headline table plus first/last, gender and false-positive sections.
std::string render_summary_markdown(const EvalReport& report);
// country,strict_accuracy,partial_accuracy,support
std::string render_country_csv(const EvalReport& report);
// Writes report.json, summary.md and countries.csv into `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace namerec

#endif  // NAMEREC_EVALUATION_H_
