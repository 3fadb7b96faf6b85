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

#include "namerec/dataset.h"

#include <fstream>

#include "json.hpp"
#include "namerec/errors.h"
#include "namerec/text.h"

namespace namerec {

using Json = nlohmann::ordered_json;

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::kFemale:
      return "F";
    case Gender::kMale:
      return "M";
    case Gender::kUnknown:
      break;
  }
  return "U";
}

std::string_view to_string(NameKind k) { return k == NameKind::kFirst ? "first" : "last"; }

std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::kBegin:
      return "B-PER";
    case Tag::kInside:
      return "I-PER";
    case Tag::kOutside:
      break;
  }
  return "O";
}

Gender parse_gender(std::string_view s) {
  if (s == "F") return Gender::kFemale;
  if (s == "M") return Gender::kMale;
  if (s == "U") return Gender::kUnknown;
  throw FormatError("unknown gender '" + std::string(s) + "' (expected F, M or U)");
}

NameKind parse_name_kind(std::string_view s) {
  if (s == "first") return NameKind::kFirst;
  if (s == "last") return NameKind::kLast;
  throw FormatError("unknown name kind '" + std::string(s) + "' (expected first or last)");
}

Tag parse_tag(std::string_view s) {
  if (s == "O") return Tag::kOutside;
  if (s == "B-PER") return Tag::kBegin;
  if (s == "I-PER") return Tag::kInside;
  throw FormatError("unknown tag label '" + std::string(s) + "'");
}

std::string TaggedUtterance::text() const { return join_tokens(tokens); }

bool has_valid_bio(const TaggedUtterance& u) {
  if (u.tokens.size() != u.tags.size()) return false;
  for (size_t i = 0; i < u.tags.size(); ++i) {
    if (u.tags[i] == Tag::kInside && (i == 0 || u.tags[i - 1] == Tag::kOutside)) return false;
  }
  return true;
}

bool has_name(const TaggedUtterance& u) {
  for (Tag t : u.tags) {
    if (t == Tag::kBegin) return true;
  }
  return false;
}

std::string utterance_to_json_line(const TaggedUtterance& u) {
  Json tags = Json::array();
  for (Tag t : u.tags) tags.push_back(std::string(to_string(t)));
  Json meta = {{"country", u.meta.country},
               {"gender", std::string(to_string(u.meta.gender))},
               {"name_first", u.meta.name_first},
               {"name_last", u.meta.name_last ? Json(*u.meta.name_last) : Json(nullptr)},
               {"source", u.meta.source}};
  Json line = {{"tokens", u.tokens}, {"tags", std::move(tags)}, {"meta", std::move(meta)}};
  return line.dump();
}

TaggedUtterance utterance_from_json_line(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  try {
    TaggedUtterance u;
    u.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& t : j.at("tags")) u.tags.push_back(parse_tag(t.get<std::string>()));
    if (u.tokens.size() != u.tags.size()) {
      throw FormatError("tokens and tags differ in length (" + std::to_string(u.tokens.size()) + " vs " +
                        std::to_string(u.tags.size()) + ")");
    }
    if (j.contains("meta")) {
      const Json& m = j.at("meta");
      u.meta.country = m.value("country", "Unknown");
      u.meta.gender = parse_gender(m.value("gender", "U"));
      u.meta.name_first = m.value("name_first", "");
      if (m.contains("name_last") && !m.at("name_last").is_null()) {
        u.meta.name_last = m.at("name_last").get<std::string>();
      }
      u.meta.source = m.value("source", "");
    }
    return u;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad dataset record: ") + e.what());
  }
}

void write_dataset(const std::filesystem::path& path, const std::vector<TaggedUtterance>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& u : data) out << utterance_to_json_line(u) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<TaggedUtterance> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<TaggedUtterance> data;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    try {
      data.push_back(utterance_from_json_line(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return data;
}

}  // namespace namerec
