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

// Corpus curation: turns a pool of first/last names and a set of utterance
// templates into leak-free train/test splits in which every utterance text
// is unique and no tagged name appears on both sides.
//
// Pipeline (run_curation):
//   load_name_pool -> filter_names -> build_full_names
//   load_templates -> fill_template (one name per utterance)
//   -> cross_tag_multi_names -> split_train_test

#ifndef NAMEREC_CURATION_H_
#define NAMEREC_CURATION_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "namerec/dataset.h"

namespace namerec {

inline constexpr std::string_view kNamePlaceholder = "{NAME}";

struct LineProblem {
  size_t line = 0;
  std::string message;
};

struct NamePoolLoad {
  std::vector<NameRecord> records;
  // Rows that were skipped, with 1-based line numbers.
  std::vector<LineProblem> rejected_rows;
};

// CSV with header `name,kind,gender,country` (any column order). Throws
// FormatError for an empty file or a header missing a required column.
NamePoolLoad parse_name_pool(std::string_view csv_text);
NamePoolLoad load_name_pool(const std::filesystem::path& path);
void write_name_pool(const std::filesystem::path& path, std::span<const NameRecord> records);

enum class RejectReason {
  kEmpty,
  kDiacritic,     // Latin letter with an accent, or a combining mark
  kNonLatin,      // any other non-ASCII script
  kDigit,
  kWhitespace,
  kSpecialCharacter,
  kBadStart,      // hyphen or apostrophe in first position
  kDisallowedPunctuation,
};

std::string_view to_string(RejectReason r);

struct FilterPolicy {
  bool allow_hyphen = true;
  bool allow_apostrophe = true;
};

struct RejectedName {
  NameRecord record;
  RejectReason reason;
};

struct FilterResult {
  std::vector<NameRecord> kept;
  std::vector<RejectedName> rejected;
};

// Keeps names matching ^[A-Za-z][A-Za-z'\-]*$ (subject to the policy).
// The reason given is the first offending character's class.
FilterResult filter_names(std::span<const NameRecord> pool, const FilterPolicy& policy = {});

// Deduplicates name strings across the whole pool (first occurrence in
// file order wins, whatever its kind), shuffles the first names with the
// seed and gives floor(n/2) of them a distinct last name, preferring one
// from the same country. Throws CurationError with the counts when fewer
// than two first names or no last names remain.
std::vector<FullName> build_full_names(std::span<const NameRecord> pool, uint64_t seed);

// An utterance with exactly one {NAME} placeholder standing alone as a
// token (start/whitespace before it; end, whitespace or terminal
// punctuation after it).
class Template {
 public:
  // Throws FormatError when the placeholder rule is violated.
  Template(std::string text, std::string source);

  const std::string& text() const { return text_; }
  const std::string& source() const { return source_; }
  std::string_view prefix() const;
  std::string_view suffix() const;

  bool operator==(const Template&) const = default;

 private:
  std::string text_;
  std::string source_;
  size_t placeholder_ = 0;
};

// JSON Lines {"text": ..., "source": ...}. Throws FormatError naming the
// line of the first bad template.
std::vector<Template> load_templates(const std::filesystem::path& path);
void write_templates(const std::filesystem::path& path, std::span<const Template> templates);

// Turns a sourced utterance into a template by replacing the first
// (longest, case-insensitive, whole-word) dependent mention such as
// "my daughter" with {NAME}. Returns nullopt when there is none.
std::optional<Template> templatize(std::string_view utterance, std::string source);

// Substitutes the name, tokenizes and tags the name tokens B-PER, I-PER...
// A name token that also occurs among the template's own tokens is
// reported through `warnings` (the utterance is still produced).
TaggedUtterance fill_template(const Template& tpl, const FullName& name,
                              std::vector<std::string>* warnings = nullptr);

// Every tagged span's text across the dataset.
std::set<std::string> collect_tagged_names(std::span<const TaggedUtterance> data);

// Tags untagged token spans whose text exactly equals a known name
// (case-sensitive). Overlapping candidates resolve longest first, then
// leftmost. Existing tags are never removed. `spans_added` receives the
// number of new spans.
std::vector<TaggedUtterance> cross_tag_multi_names(std::span<const TaggedUtterance> data,
                                                   const std::set<std::string>& known_names,
                                                   size_t* spans_added = nullptr);

struct DatasetSplit {
  std::vector<TaggedUtterance> train;
  std::vector<TaggedUtterance> test;
};

struct SplitReport {
  size_t duplicates_dropped = 0;
  // Utterances grouped with at least one other because they share a name.
  size_t linked = 0;
  size_t train_size = 0;
  size_t test_size = 0;
  std::vector<std::string> warnings;
};

// Country-stratified split. Utterances that share any tagged name string or
// name token are kept on the same side, so the split is leak-free by
// construction. Repeated utterance texts keep their first occurrence.
// Countries with a single utterance go to train with a warning.
DatasetSplit split_train_test(std::span<const TaggedUtterance> data, double test_fraction, uint64_t seed,
                              SplitReport* report = nullptr);

struct CurationConfig {
  double test_fraction = 0.2;
  uint64_t seed = 42;
  // Also emit utterances without any name (template filled with a
  // dependent phrase), this many per named utterance.
  bool allow_nameless = false;
  double nameless_ratio = 0.25;
  FilterPolicy filter;
};

struct CurationReport {
  size_t names_in = 0;
  size_t names_rejected = 0;
  size_t full_names = 0;
  size_t first_only_names = 0;
  size_t utterances = 0;
  size_t nameless_utterances = 0;
  size_t cross_tagged = 0;
  SplitReport split;
  std::vector<std::string> warnings;
};

// Each full name fills one template; templates are used in a seeded
// order and recycled only when there are more names than templates.
DatasetSplit run_curation(std::span<const NameRecord> pool, std::span<const Template> templates,
                          const CurationConfig& config, CurationReport* report = nullptr);

struct SyntheticSpec {
  size_t n_templates = 3000;
  size_t n_names_per_country = 300;
  size_t countries = 12;
  uint64_t seed = 42;
};

struct SyntheticCorpus {
  std::vector<Template> templates;
  std::vector<NameRecord> names;
};

// Benefits-domain and news-style templates plus synthetic names. Each
// country draws its names from its own syllable inventory and its own set
// of 3-letter endings, so names carry a per-country character pattern.
// Per country the records cycle female first, male first, last.
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

// Two-letter user-assigned ISO 3166 style labels: XA..XZ, QM..QZ, AA, ZZ,
// then C43, C44, ...
std::string synthetic_country_label(size_t index);

}  // namespace namerec

#endif  // NAMEREC_CURATION_H_
