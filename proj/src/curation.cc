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

#include "namerec/curation.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "namerec/errors.h"
#include "namerec/rng.h"
#include "namerec/text.h"

namespace namerec {

using Json = nlohmann::ordered_json;

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_terminal_punct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One CSV record per physical line; quoted fields may contain commas and
// doubled quotes but not newlines.
std::vector<std::string> split_csv_line(std::string_view line, bool* ok) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  *ok = true;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) *ok = false;
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool is_latin_accented(char32_t cp) {
  return (cp >= 0x00C0 && cp <= 0x024F && cp != 0x00D7 && cp != 0x00F7) || (cp >= 0x1E00 && cp <= 0x1EFF) ||
         (cp >= 0x0300 && cp <= 0x036F);
}

bool is_ascii_letter(char32_t cp) { return (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z'); }

std::optional<RejectReason> classify_name(std::string_view text, const FilterPolicy& policy) {
  if (text.empty()) return RejectReason::kEmpty;
  const std::u32string cps = decode_utf8(text);
  for (size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (is_ascii_letter(cp)) continue;
    if (cp >= 0x80) return is_latin_accented(cp) ? RejectReason::kDiacritic : RejectReason::kNonLatin;
    if (cp >= '0' && cp <= '9') return RejectReason::kDigit;
    if (is_space(static_cast<char>(cp))) return RejectReason::kWhitespace;
    if (cp == '-' || cp == '\'') {
      if (i == 0) return RejectReason::kBadStart;
      const bool allowed = cp == '-' ? policy.allow_hyphen : policy.allow_apostrophe;
      if (!allowed) return RejectReason::kDisallowedPunctuation;
      continue;
    }
    return RejectReason::kSpecialCharacter;
  }
  return std::nullopt;
}

// Words replaced by {NAME} when turning a sourced utterance into a
// template, longest first so "my youngest daughter" beats "my daughter".
const std::vector<std::string>& dependent_phrases() {
  static const std::vector<std::string> phrases = [] {
    std::vector<std::string> p = {
        "my daughter",  "my son",        "my wife",     "my husband",         "my spouse",
        "my child",     "my kid",        "my partner",  "my dependent",       "my mother",
        "my father",    "my stepson",    "my stepdaughter", "my newborn",     "my baby",
        "my youngest daughter", "my youngest son", "my oldest daughter", "my oldest son",
        "my domestic partner",
    };
    std::stable_sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    return p;
  }();
  return phrases;
}

// Fillers for nameless utterances.
const std::vector<std::string>& nameless_fillers() {
  static const std::vector<std::string> fillers = {"my daughter", "my son",   "my wife", "my husband",
                                                   "my spouse",   "my child", "my partner"};
  return fillers;
}

std::string capitalize_first(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

class DisjointSets {
 public:
  explicit DisjointSets(size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), size_t{0}); }
  size_t find(size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // Keeps the smaller index as the root so components are named by their
  // earliest member.
  void unite(size_t a, size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<size_t> parent_;
};

struct TokenRange {
  size_t start;
  size_t end;
};

std::vector<TokenRange> tagged_spans(const TaggedUtterance& u) {
  std::vector<TokenRange> spans;
  for (size_t i = 0; i < u.tags.size(); ++i) {
    if (u.tags[i] == Tag::kOutside) continue;
    const bool opens = u.tags[i] == Tag::kBegin || i == 0 || u.tags[i - 1] == Tag::kOutside;
    if (opens) {
      spans.push_back({i, i + 1});
    } else {
      spans.back().end = i + 1;
    }
  }
  return spans;
}

}  // namespace

// ---------------------------------------------------------------------------
// Name pool

NamePoolLoad parse_name_pool(std::string_view csv_text) {
  std::vector<std::string> lines;
  {
    std::string current;
    for (char c : csv_text) {
      if (c == '\n') {
        lines.push_back(std::move(current));
        current.clear();
      } else {
        current += c;
      }
    }
    if (!current.empty()) lines.push_back(std::move(current));
  }
  for (auto& line : lines) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  size_t header_line = 0;
  while (header_line < lines.size() && normalize_whitespace(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) throw FormatError("name pool is empty");

  std::string header = lines[header_line];
  if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
  bool ok = true;
  const std::vector<std::string> columns = split_csv_line(header, &ok);
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < columns.size(); ++i) index.emplace(to_lower(normalize_whitespace(columns[i])), i);
  std::vector<std::string> missing;
  for (const char* required : {"name", "kind", "gender", "country"}) {
    if (!index.count(required)) missing.emplace_back(required);
  }
  if (!missing.empty()) {
    std::string msg = "name pool header lacks column(s):";
    for (const auto& m : missing) msg += " " + m;
    throw FormatError(msg + " (expected name,kind,gender,country)");
  }

  NamePoolLoad result;
  for (size_t li = header_line + 1; li < lines.size(); ++li) {
    const size_t line_no = li + 1;
    if (normalize_whitespace(lines[li]).empty()) continue;
    std::vector<std::string> fields = split_csv_line(lines[li], &ok);
    if (!ok) {
      result.rejected_rows.push_back({line_no, "unterminated quote"});
      continue;
    }
    if (fields.size() < columns.size()) {
      result.rejected_rows.push_back({line_no, "expected " + std::to_string(columns.size()) + " fields, got " +
                                                   std::to_string(fields.size())});
      continue;
    }
    try {
      NameRecord r;
      r.text = normalize_whitespace(fields[index["name"]]);
      if (r.text.empty()) throw FormatError("empty name");
      r.kind = parse_name_kind(normalize_whitespace(fields[index["kind"]]));
      r.gender = parse_gender(normalize_whitespace(fields[index["gender"]]));
      r.country = normalize_whitespace(fields[index["country"]]);
      if (r.country.empty()) r.country = "Unknown";
      result.records.push_back(std::move(r));
    } catch (const FormatError& e) {
      result.rejected_rows.push_back({line_no, e.what()});
    }
  }
  return result;
}

NamePoolLoad load_name_pool(const std::filesystem::path& path) {
  try {
    return parse_name_pool(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_name_pool(const std::filesystem::path& path, std::span<const NameRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "name,kind,gender,country\n";
  for (const auto& r : records) {
    out << csv_escape(r.text) << ',' << to_string(r.kind) << ',' << to_string(r.gender) << ','
        << csv_escape(r.country) << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Filtering and full names

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kEmpty:
      return "empty";
    case RejectReason::kDiacritic:
      return "diacritic";
    case RejectReason::kNonLatin:
      return "non_latin";
    case RejectReason::kDigit:
      return "digit";
    case RejectReason::kWhitespace:
      return "whitespace";
    case RejectReason::kSpecialCharacter:
      return "special_character";
    case RejectReason::kBadStart:
      return "bad_start";
    case RejectReason::kDisallowedPunctuation:
      return "disallowed_punctuation";
  }
  return "unknown";
}

FilterResult filter_names(std::span<const NameRecord> pool, const FilterPolicy& policy) {
  FilterResult result;
  for (const auto& r : pool) {
    if (auto reason = classify_name(r.text, policy)) {
      result.rejected.push_back({r, *reason});
    } else {
      result.kept.push_back(r);
    }
  }
  return result;
}

std::vector<FullName> build_full_names(std::span<const NameRecord> pool, uint64_t seed) {
  std::unordered_set<std::string> seen;
  std::vector<const NameRecord*> firsts;
  std::vector<const NameRecord*> lasts;
  for (const auto& r : pool) {
    if (!seen.insert(r.text).second) continue;
    (r.kind == NameKind::kFirst ? firsts : lasts).push_back(&r);
  }
  if (firsts.size() < 2 || lasts.empty()) {
    throw CurationError("need at least 2 distinct first names and 1 last name, got " +
                        std::to_string(firsts.size()) + " first and " + std::to_string(lasts.size()) + " last");
  }
  Rng rng(seed);
  rng.shuffle(firsts);
  rng.shuffle(lasts);

  std::map<std::string, std::vector<size_t>> lasts_by_country;
  for (size_t i = 0; i < lasts.size(); ++i) lasts_by_country[lasts[i]->country].push_back(i);
  std::map<std::string, size_t> country_cursor;
  std::vector<bool> used(lasts.size(), false);
  size_t global_cursor = 0;

  const size_t with_last = std::min(firsts.size() / 2, lasts.size());
  std::vector<FullName> names;
  names.reserve(firsts.size());
  for (size_t i = 0; i < firsts.size(); ++i) {
    const NameRecord& f = *firsts[i];
    FullName name{f.text, std::nullopt, f.gender, f.country};
    if (i < with_last) {
      std::optional<size_t> pick;
      auto it = lasts_by_country.find(f.country);
      if (it != lasts_by_country.end()) {
        size_t& cur = country_cursor[f.country];
        while (cur < it->second.size() && used[it->second[cur]]) ++cur;
        if (cur < it->second.size()) pick = it->second[cur];
      }
      if (!pick) {
        while (used[global_cursor]) ++global_cursor;
        pick = global_cursor;
      }
      used[*pick] = true;
      name.last = lasts[*pick]->text;
    }
    names.push_back(std::move(name));
  }
  return names;
}

// ---------------------------------------------------------------------------
// Templates

Template::Template(std::string text, std::string source) : text_(std::move(text)), source_(std::move(source)) {
  const size_t pos = text_.find(kNamePlaceholder);
  if (pos == std::string::npos) throw FormatError("template has no {NAME} placeholder: \"" + text_ + "\"");
  if (text_.find(kNamePlaceholder, pos + 1) != std::string::npos) {
    throw FormatError("template has more than one {NAME} placeholder: \"" + text_ + "\"");
  }
  if (pos > 0 && !is_space(text_[pos - 1])) {
    throw FormatError("{NAME} must start a token: \"" + text_ + "\"");
  }
  size_t after = pos + kNamePlaceholder.size();
  while (after < text_.size() && is_terminal_punct(text_[after])) ++after;
  if (after < text_.size() && !is_space(text_[after])) {
    throw FormatError("{NAME} must end a token: \"" + text_ + "\"");
  }
  placeholder_ = pos;
}

std::string_view Template::prefix() const { return std::string_view(text_).substr(0, placeholder_); }

std::string_view Template::suffix() const {
  return std::string_view(text_).substr(placeholder_ + kNamePlaceholder.size());
}

std::vector<Template> load_templates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Template> templates;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw FormatError(where + "invalid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j.at("text").is_string()) {
      throw FormatError(where + "template record needs a string \"text\" field");
    }
    std::string source = j.contains("source") && j.at("source").is_string() ? j.at("source").get<std::string>() : "";
    try {
      templates.emplace_back(j.at("text").get<std::string>(), std::move(source));
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
  return templates;
}

void write_templates(const std::filesystem::path& path, std::span<const Template> templates) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& t : templates) {
    Json j = {{"text", t.text()}, {"source", t.source()}};
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::optional<Template> templatize(std::string_view utterance, std::string source) {
  const std::string lower = to_lower(utterance);
  std::optional<std::pair<size_t, size_t>> best;  // position, length
  for (const auto& phrase : dependent_phrases()) {
    size_t pos = lower.find(phrase);
    while (pos != std::string::npos) {
      const size_t end = pos + phrase.size();
      const bool starts = pos == 0 || is_space(lower[pos - 1]);
      size_t after = end;
      while (after < lower.size() && is_terminal_punct(lower[after])) ++after;
      const bool ends = after == lower.size() || is_space(lower[after]);
      if (starts && ends) {
        if (!best || pos < best->first || (pos == best->first && phrase.size() > best->second)) {
          best = {pos, phrase.size()};
        }
        break;
      }
      pos = lower.find(phrase, pos + 1);
    }
  }
  if (!best) return std::nullopt;
  std::string text(utterance);
  text.replace(best->first, best->second, kNamePlaceholder);
  if (text.find(kNamePlaceholder, best->first + kNamePlaceholder.size()) != std::string::npos) return std::nullopt;
  return Template(std::move(text), std::move(source));
}

TaggedUtterance fill_template(const Template& tpl, const FullName& name, std::vector<std::string>* warnings) {
  const std::string name_text = name.text();
  const std::vector<std::string> name_tokens = tokenize(name_text);
  const std::vector<std::string> prefix_tokens = tokenize(tpl.prefix());
  const std::vector<std::string> suffix_tokens = tokenize(tpl.suffix());
  if (name_tokens.empty()) throw CurationError("empty name for template \"" + tpl.text() + "\"");

  TaggedUtterance u;
  u.tokens = tokenize(std::string(tpl.prefix()) + name_text + std::string(tpl.suffix()));
  const size_t start = prefix_tokens.size();
  const size_t end = start + name_tokens.size();
  if (u.tokens.size() < end || !std::equal(name_tokens.begin(), name_tokens.end(), u.tokens.begin() + start)) {
    throw CurationError("name \"" + name_text + "\" does not tokenize cleanly in \"" + tpl.text() + "\"");
  }
  u.tags.assign(u.tokens.size(), Tag::kOutside);
  u.tags[start] = Tag::kBegin;
  for (size_t i = start + 1; i < end; ++i) u.tags[i] = Tag::kInside;

  if (warnings) {
    for (const auto& nt : name_tokens) {
      const bool collides = std::find(prefix_tokens.begin(), prefix_tokens.end(), nt) != prefix_tokens.end() ||
                            std::find(suffix_tokens.begin(), suffix_tokens.end(), nt) != suffix_tokens.end();
      if (collides) warnings->push_back("name token \"" + nt + "\" also occurs in template \"" + tpl.text() + "\"");
    }
  }
  u.meta.country = name.country;
  u.meta.gender = name.gender;
  u.meta.name_first = name.first;
  u.meta.name_last = name.last;
  u.meta.source = tpl.source();
  return u;
}

// ---------------------------------------------------------------------------
// Cross-tagging

std::set<std::string> collect_tagged_names(std::span<const TaggedUtterance> data) {
  std::set<std::string> names;
  for (const auto& u : data) {
    for (const TokenRange& s : tagged_spans(u)) names.insert(join_tokens(u.tokens, s.start, s.end));
  }
  return names;
}

std::vector<TaggedUtterance> cross_tag_multi_names(std::span<const TaggedUtterance> data,
                                                   const std::set<std::string>& known_names,
                                                   size_t* spans_added) {
  size_t max_len = 0;
  for (const auto& n : known_names) max_len = std::max(max_len, tokenize(n).size());
  size_t added = 0;
  std::vector<TaggedUtterance> out(data.begin(), data.end());
  for (auto& u : out) {
    const size_t n = u.tokens.size();
    std::vector<TokenRange> candidates;
    for (size_t s = 0; s < n; ++s) {
      for (size_t len = 1; len <= max_len && s + len <= n; ++len) {
        if (u.tags[s + len - 1] != Tag::kOutside) break;
        if (known_names.count(join_tokens(u.tokens, s, s + len))) candidates.push_back({s, s + len});
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const TokenRange& a, const TokenRange& b) {
      if (a.end - a.start != b.end - b.start) return a.end - a.start > b.end - b.start;
      return a.start < b.start;
    });
    std::vector<bool> taken(n, false);
    for (const TokenRange& c : candidates) {
      bool free = true;
      for (size_t i = c.start; i < c.end; ++i) free = free && !taken[i];
      if (!free) continue;
      for (size_t i = c.start; i < c.end; ++i) {
        taken[i] = true;
        u.tags[i] = i == c.start ? Tag::kBegin : Tag::kInside;
      }
      ++added;
    }
  }
  if (spans_added) *spans_added = added;
  return out;
}

// ---------------------------------------------------------------------------
// Split

DatasetSplit split_train_test(std::span<const TaggedUtterance> data, double test_fraction, uint64_t seed,
                              SplitReport* report) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ContractError("test_fraction must lie in (0, 1), got " + std::to_string(test_fraction));
  }
  SplitReport local;
  SplitReport& rep = report ? *report : local;
  rep = SplitReport{};

  std::vector<const TaggedUtterance*> items;
  {
    std::unordered_set<std::string> texts;
    for (const auto& u : data) {
      if (texts.insert(u.text()).second) {
        items.push_back(&u);
      } else {
        ++rep.duplicates_dropped;
      }
    }
  }
  const size_t n = items.size();

  // Group utterances that share a tagged span or any token inside one.
  DisjointSets sets(n);
  std::unordered_map<std::string, size_t> owner;
  auto link = [&](const std::string& key, size_t i) {
    auto [it, inserted] = owner.emplace(key, i);
    if (!inserted) sets.unite(it->second, i);
  };
  for (size_t i = 0; i < n; ++i) {
    const TaggedUtterance& u = *items[i];
    for (const TokenRange& s : tagged_spans(u)) {
      link("S" + join_tokens(u.tokens, s.start, s.end), i);
      for (size_t t = s.start; t < s.end; ++t) link("T" + u.tokens[t], i);
    }
  }
  std::map<size_t, std::vector<size_t>> components;
  for (size_t i = 0; i < n; ++i) components[sets.find(i)].push_back(i);

  std::map<std::string, std::vector<size_t>> by_country;  // country -> component roots
  std::map<std::string, size_t> country_size;
  for (const auto& [root, members] : components) {
    if (members.size() > 1) rep.linked += members.size();
    const std::string& country = items[root]->meta.country;
    by_country[country].push_back(root);
    country_size[country] += members.size();
  }

  // Largest-remainder test quotas, at least one train utterance per country.
  const size_t target = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::map<std::string, size_t> quota;
  std::vector<std::pair<double, std::string>> remainders;
  size_t assigned = 0;
  for (const auto& [country, size] : country_size) {
    const double ideal = test_fraction * static_cast<double>(size);
    size_t q = static_cast<size_t>(std::floor(ideal));
    if (size > 0) q = std::min(q, size - 1);
    quota[country] = q;
    assigned += q;
    remainders.emplace_back(ideal - std::floor(ideal), country);
    if (size == 1) rep.warnings.push_back("country " + country + " has a single utterance; placed in train");
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [rem, country] : remainders) {
    if (assigned >= target) break;
    if (quota[country] + 1 < country_size[country]) {
      ++quota[country];
      ++assigned;
    }
  }

  Rng rng(seed);
  std::vector<bool> in_test(n, false);
  for (auto& [country, roots] : by_country) {
    rng.shuffle(roots);
    size_t taken = 0;
    for (size_t root : roots) {
      const auto& members = components[root];
      if (taken + members.size() > quota[country]) continue;
      for (size_t m : members) in_test[m] = true;
      taken += members.size();
    }
    if (taken < quota[country]) {
      rep.warnings.push_back("country " + country + ": test quota " + std::to_string(quota[country]) +
                             " not reachable with linked groups, took " + std::to_string(taken));
    }
  }

  DatasetSplit split;
  for (size_t i = 0; i < n; ++i) (in_test[i] ? split.test : split.train).push_back(*items[i]);
  rep.train_size = split.train.size();
  rep.test_size = split.test.size();
  return split;
}

// ---------------------------------------------------------------------------
// Pipeline

DatasetSplit run_curation(std::span<const NameRecord> pool, std::span<const Template> templates,
                          const CurationConfig& config, CurationReport* report) {
  if (templates.empty()) throw CurationError("no templates supplied");
  CurationReport local;
  CurationReport& rep = report ? *report : local;
  rep = CurationReport{};
  rep.names_in = pool.size();

  const FilterResult filtered = filter_names(pool, config.filter);
  rep.names_rejected = filtered.rejected.size();
  const std::vector<FullName> names = build_full_names(filtered.kept, config.seed);
  for (const auto& n : names) ++(n.last ? rep.full_names : rep.first_only_names);

  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<size_t> order(templates.size());
  std::iota(order.begin(), order.end(), size_t{0});
  rng.shuffle(order);

  std::vector<TaggedUtterance> utterances;
  utterances.reserve(names.size());
  for (size_t k = 0; k < names.size(); ++k) {
    utterances.push_back(fill_template(templates[order[k % order.size()]], names[k], &rep.warnings));
  }

  if (config.allow_nameless) {
    const size_t count = static_cast<size_t>(std::floor(config.nameless_ratio * static_cast<double>(names.size())));
    for (size_t k = 0; k < count; ++k) {
      const Template& tpl = templates[order[(names.size() + k) % order.size()]];
      std::string filler = nameless_fillers()[rng.below(nameless_fillers().size())];
      if (normalize_whitespace(tpl.prefix()).empty()) filler = capitalize_first(filler);
      TaggedUtterance u;
      u.tokens = tokenize(std::string(tpl.prefix()) + filler + std::string(tpl.suffix()));
      u.tags.assign(u.tokens.size(), Tag::kOutside);
      u.meta.country = "None";
      u.meta.source = tpl.source();
      utterances.push_back(std::move(u));
    }
    rep.nameless_utterances = count;
  }

  utterances = cross_tag_multi_names(utterances, collect_tagged_names(utterances), &rep.cross_tagged);
  DatasetSplit split = split_train_test(utterances, config.test_fraction, config.seed, &rep.split);
  rep.utterances = split.train.size() + split.test.size();
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

std::string synthetic_country_label(size_t index) {
  if (index < 26) return std::string("X") + static_cast<char>('A' + index);
  index -= 26;
  if (index < 14) return std::string("Q") + static_cast<char>('M' + index);
  index -= 14;
  if (index == 0) return "AA";
  if (index == 1) return "ZZ";
  return "C" + std::to_string(index + 41);
}

namespace {

struct Frame {
  const char* text;
  const char* source;
};

// Slots: {PLAN}, {PLACE}, {WHEN}, {THING}. Every frame has exactly one
// {NAME}.
const std::vector<Frame>& frames() {
  static const std::vector<Frame> f = {
      {"add {NAME} to my {PLAN} plan {WHEN}", "synthetic-benefits"},
      {"please add {NAME} to my {PLAN} coverage", "synthetic-benefits"},
      {"I need to remove {NAME} from my {PLAN} plan {WHEN}", "synthetic-benefits"},
      {"can {NAME} be added to the {PLAN} plan {WHEN}?", "synthetic-benefits"},
      {"is {NAME} covered under my {PLAN} plan?", "synthetic-benefits"},
      {"I want to enroll {NAME} in {PLAN} insurance {WHEN}", "synthetic-benefits"},
      {"{NAME} needs {THING} {WHEN}", "synthetic-benefits"},
      {"does my {PLAN} plan pay for {THING} for {NAME}?", "synthetic-benefits"},
      {"{NAME} just turned 26 {WHEN}, what happens to the {PLAN} plan?", "synthetic-benefits"},
      {"how do I drop {NAME} from {PLAN} coverage {WHEN}?", "synthetic-benefits"},
      {"my dependent {NAME} needs {THING}", "synthetic-benefits"},
      {"update the {PLAN} beneficiary to {NAME} {WHEN}", "synthetic-benefits"},
      {"{NAME} got married {WHEN} and needs {PLAN} coverage", "synthetic-benefits"},
      {"we had a baby named {NAME} {WHEN}, add her to my {PLAN} plan", "synthetic-benefits"},
      {"will {NAME} lose {PLAN} coverage {WHEN}?", "synthetic-benefits"},
      {"who pays for {THING} for {NAME} under the {PLAN} plan?", "synthetic-benefits"},
      {"{NAME} moved to {PLACE} {WHEN}, is the {PLAN} plan still valid?", "synthetic-benefits"},
      {"switch {NAME} to the {PLAN} plan {WHEN}", "synthetic-benefits"},
      {"{NAME} visited {PLACE} {WHEN}.", "synthetic-news"},
      {"officials in {PLACE} met with {NAME} {WHEN}.", "synthetic-news"},
      {"{NAME} said talks with {PLACE} would resume {WHEN}.", "synthetic-news"},
      {"the envoy {NAME} left {PLACE} {WHEN}.", "synthetic-news"},
      {"reporters in {PLACE} questioned {NAME} {WHEN}.", "synthetic-news"},
      {"{NAME} will lead the delegation to {PLACE} {WHEN}.", "synthetic-news"},
      {"protesters in {PLACE} called for {NAME} to resign {WHEN}.", "synthetic-news"},
      {"{NAME} arrived in {PLACE} {WHEN} for the summit.", "synthetic-news"},
      {"the minister {NAME} criticised {PLACE} {WHEN}.", "synthetic-news"},
      {"according to {NAME}, {PLACE} rejected the offer {WHEN}.", "synthetic-news"},
      {"a spokesman for {PLACE} thanked {NAME} {WHEN}.", "synthetic-news"},
      {"{NAME} won the election in {PLACE} {WHEN}.", "synthetic-news"},
  };
  return f;
}

const std::map<std::string, std::vector<std::string>>& slot_values() {
  static const std::map<std::string, std::vector<std::string>> v = {
      {"{PLAN}", {"dental", "vision", "medical", "life", "disability", "accident", "hospital", "HSA", "FSA",
                  "wellness", "family", "basic", "premium", "supplemental"}},
      {"{PLACE}", {"London", "Paris", "Iran", "Syria", "Russia", "Egypt", "Berlin", "Texas", "Ohio", "Kenya",
                   "Brazil", "Tokyo", "Madrid", "Iraq", "Chicago", "Moscow"}},
      {"{WHEN}", {"today", "yesterday", "last week", "next month", "on Monday", "this year", "in January",
                  "last night", "tomorrow", "in March", "on Friday", "this morning"}},
      {"{THING}", {"glasses", "braces", "a checkup", "surgery", "an MRI", "physical therapy", "a new inhaler",
                   "contact lenses", "a hearing aid", "stitches"}},
  };
  return v;
}

// Expands every slot combination of one frame.
void expand_frame(const std::string& text, const std::string& source, std::vector<Template>& out) {
  for (const auto& [slot, values] : slot_values()) {
    const size_t pos = text.find(slot);
    if (pos == std::string::npos) continue;
    for (const auto& value : values) {
      std::string filled = text;
      filled.replace(pos, slot.size(), value);
      expand_frame(filled, source, out);
    }
    return;
  }
  out.emplace_back(text, source);
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.n_templates < 1 || spec.n_names_per_country < 1 || spec.countries < 1) {
    throw ContractError("synthetic corpus counts must all be >= 1");
  }
  Rng rng(spec.seed);
  SyntheticCorpus corpus;

  std::vector<Template> all_templates;
  for (const auto& f : frames()) expand_frame(f.text, f.source, all_templates);
  if (spec.n_templates > all_templates.size()) {
    throw ContractError("at most " + std::to_string(all_templates.size()) + " synthetic templates available, " +
                        std::to_string(spec.n_templates) + " requested");
  }
  rng.shuffle(all_templates);
  corpus.templates.assign(all_templates.begin(), all_templates.begin() + static_cast<long>(spec.n_templates));

  // Words that a generated name must not equal, so names never collide with
  // template vocabulary.
  std::unordered_set<std::string> reserved;
  for (const auto& t : all_templates) {
    for (const auto& tok : tokenize(t.text())) reserved.insert(to_lower(tok));
  }

  const std::string consonants = "bcdfghklmnprstvz";
  const std::string vowels = "aeiou";
  std::vector<std::string> endings;
  for (char c1 : consonants) {
    for (char v : vowels) {
      for (char c2 : consonants) endings.push_back({c1, v, c2});
    }
  }
  for (char v1 : vowels) {
    for (char c : consonants) {
      for (char v2 : vowels) endings.push_back({v1, c, v2});
    }
  }
  std::vector<std::string> syllables;
  for (char c : consonants) {
    for (char v : vowels) syllables.push_back({c, v});
  }
  rng.shuffle(endings);

  // Each (country, kind) group owns a disjoint block of endings.
  const size_t groups = spec.countries * 3;
  const size_t per_group = std::min<size_t>(24, endings.size() / groups);
  if (per_group < 2) {
    throw ContractError("too many synthetic countries (" + std::to_string(spec.countries) + ")");
  }
  constexpr size_t kOnsetsPerCountry = 6;

  std::unordered_set<std::string> used;
  const Gender genders[3] = {Gender::kFemale, Gender::kMale, Gender::kUnknown};
  const NameKind kinds[3] = {NameKind::kFirst, NameKind::kFirst, NameKind::kLast};
  for (size_t c = 0; c < spec.countries; ++c) {
    const std::string country = synthetic_country_label(c);
    std::vector<std::string> onsets = syllables;
    rng.shuffle(onsets);
    onsets.resize(kOnsetsPerCountry);
    for (size_t i = 0; i < spec.n_names_per_country; ++i) {
      const size_t kind = i % 3;
      const size_t block = (c * 3 + kind) * per_group;
      std::string name;
      for (size_t attempt = 0;; ++attempt) {
        if (attempt > 10000) throw CurationError("synthetic name space exhausted for country " + country);
        std::string candidate = onsets[rng.below(onsets.size())];
        const uint64_t extra = rng.below(3);
        for (uint64_t e = 0; e < extra; ++e) candidate += onsets[rng.below(onsets.size())];
        candidate += endings[block + rng.below(per_group)];
        candidate = capitalize_first(candidate);
        if (reserved.count(to_lower(candidate)) || used.count(candidate)) continue;
        name = std::move(candidate);
        break;
      }
      used.insert(name);
      corpus.names.push_back({name, kinds[kind], genders[kind], country});
    }
  }
  return corpus;
}

}  // namespace namerec
