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

// Shared record types for names, templates and tagged utterances, plus the
// JSON Lines readers and writers for dataset files.

#ifndef NAMEREC_DATASET_H_
#define NAMEREC_DATASET_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace namerec {

enum class Gender { kFemale, kMale, kUnknown };
enum class NameKind { kFirst, kLast };

// Values double as label ids: O=0, B-PER=1, I-PER=2.
enum class Tag { kOutside = 0, kBegin = 1, kInside = 2 };
inline constexpr int kNumTags = 3;

std::string_view to_string(Gender g);
std::string_view to_string(NameKind k);
std::string_view to_string(Tag t);
// Throw FormatError on unknown spellings.
Gender parse_gender(std::string_view s);
NameKind parse_name_kind(std::string_view s);
Tag parse_tag(std::string_view s);

struct NameRecord {
  std::string text;
  NameKind kind = NameKind::kFirst;
  Gender gender = Gender::kUnknown;
  std::string country = "Unknown";

  bool operator==(const NameRecord&) const = default;
};

struct FullName {
  std::string first;
  std::optional<std::string> last;
  Gender gender = Gender::kUnknown;
  std::string country = "Unknown";

  std::string text() const { return last ? first + " " + *last : first; }
  bool operator==(const FullName&) const = default;
};

struct UtteranceMeta {
  std::string country = "Unknown";
  Gender gender = Gender::kUnknown;
  std::string name_first;
  std::optional<std::string> name_last;
  std::string source;

  bool operator==(const UtteranceMeta&) const = default;
};

struct TaggedUtterance {
  std::vector<std::string> tokens;
  std::vector<Tag> tags;
  UtteranceMeta meta;

  std::string text() const;
  bool operator==(const TaggedUtterance&) const = default;
};

// True when every I-PER follows B-PER or I-PER and lengths agree.
bool has_valid_bio(const TaggedUtterance& u);
bool has_name(const TaggedUtterance& u);

// Dataset JSON Lines: one utterance per line with tokens, tags and meta.
std::string utterance_to_json_line(const TaggedUtterance& u);
TaggedUtterance utterance_from_json_line(std::string_view line);

void write_dataset(const std::filesystem::path& path, const std::vector<TaggedUtterance>& data);
// Throws FormatError with the line number of the first bad record.
std::vector<TaggedUtterance> read_dataset(const std::filesystem::path& path);

}  // namespace namerec

#endif  // NAMEREC_DATASET_H_
