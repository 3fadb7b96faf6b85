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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "namerec/errors.h"
#include "namerec/text.h"

namespace namerec {

using Json = nlohmann::ordered_json;

namespace {

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

std::string percent(size_t num, size_t den) {
  if (den == 0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * static_cast<double>(num) / static_cast<double>(den));
  return buf;
}

void add_score(GroupScore& g, const NameScore& s) {
  ++g.support;
  if (s.outcome == Outcome::kStrict) ++g.strict;
  if (s.outcome != Outcome::kMiss) ++g.partial;
}

Json group_json(const GroupScore& g) {
  return {{"strict_accuracy", g.strict_accuracy()},
          {"partial_accuracy", g.partial_accuracy()},
          {"strict", g.strict},
          {"partial", g.partial},
          {"support", g.support}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

std::vector<Span> extract_spans(std::span<const Tag> tags) {
  std::vector<Span> spans;
  for (size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == Tag::kOutside) continue;
    const bool continues = tags[i] == Tag::kInside && i > 0 && tags[i - 1] != Tag::kOutside;
    if (continues) {
      spans.back().end = i + 1;
    } else {
      spans.push_back({i, i + 1, {}});
    }
  }
  return spans;
}

std::vector<Span> extract_spans(const std::vector<std::string>& tokens, std::span<const Tag> tags) {
  if (tokens.size() != tags.size()) {
    throw ContractError("extract_spans: " + std::to_string(tokens.size()) + " tokens but " +
                        std::to_string(tags.size()) + " tags");
  }
  std::vector<Span> spans = extract_spans(tags);
  for (auto& s : spans) s.text = join_tokens(tokens, s.start, s.end);
  return spans;
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::kStrict:
      return "strict";
    case Outcome::kPartial:
      return "partial";
    case Outcome::kMiss:
      break;
  }
  return "miss";
}

std::vector<NameScore> score_utterance(const TaggedUtterance& gold, std::span<const Span> predicted) {
  const std::vector<Span> gold_spans = extract_spans(gold.tokens, gold.tags);
  if (gold_spans.empty()) throw ContractError("score_utterance: gold utterance has no tagged name");
  std::vector<NameScore> scores;
  for (const Span& g : gold_spans) {
    NameScore s;
    s.gold = g;
    const bool full = g.length() >= 2;
    if (full) s.last_correct = false;
    bool exact = false;
    for (const Span& p : predicted) {
      if (p.start == g.start && p.end == g.end) exact = true;
      if (p.start < g.start || p.end > g.end || p.start >= p.end) continue;
      // p lies inside g.
      if (p.start == g.start) s.first_correct = true;
      if (full && p.start <= g.start + 1 && p.end == g.end) s.last_correct = true;
    }
    if (exact) {
      s.outcome = Outcome::kStrict;
    } else if (s.first_correct || s.last_correct.value_or(false)) {
      s.outcome = Outcome::kPartial;
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

FirstLastTable first_last_accuracy(std::span<const NameScore> scores) {
  FirstLastTable t;
  for (const auto& s : scores) {
    if (s.gold.length() >= 2) {
      ++t.full_n;
      if (s.first_correct) ++t.full_first_correct;
      if (s.last_correct.value_or(false)) ++t.full_last_correct;
    } else {
      ++t.first_only_n;
      if (s.first_correct) ++t.first_only_first_correct;
    }
  }
  return t;
}

std::vector<std::pair<std::string, size_t>> false_positive_counts(std::span<const TaggedUtterance> gold,
                                                                  std::span<const std::vector<Tag>> predicted,
                                                                  size_t top_k) {
  if (top_k == 0) throw ContractError("top_k must be >= 1");
  if (gold.size() != predicted.size()) throw ContractError("false_positive_counts: size mismatch");
  std::map<std::string, size_t> counts;
  for (size_t i = 0; i < gold.size(); ++i) {
    const auto& u = gold[i];
    std::vector<bool> is_gold(u.tokens.size(), false);
    for (size_t t = 0; t < u.tags.size(); ++t) is_gold[t] = u.tags[t] != Tag::kOutside;
    for (const Span& p : extract_spans(u.tokens, predicted[i])) {
      bool touches = false;
      for (size_t t = p.start; t < p.end; ++t) touches = touches || is_gold[t];
      if (!touches) ++counts[p.text];
    }
  }
  std::vector<std::pair<std::string, size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

EvalReport evaluate_predictions(std::span<const TaggedUtterance> gold, std::span<const std::vector<Tag>> predicted,
                                size_t top_k) {
  if (gold.size() != predicted.size()) {
    throw ContractError("evaluate: " + std::to_string(gold.size()) + " gold utterances but " +
                        std::to_string(predicted.size()) + " predictions");
  }
  EvalReport report;
  report.utterances = gold.size();
  std::vector<NameScore> all_scores;
  for (size_t i = 0; i < gold.size(); ++i) {
    const TaggedUtterance& u = gold[i];
    if (predicted[i].size() != u.tokens.size()) {
      throw ContractError("evaluate: utterance " + std::to_string(i) + " has " + std::to_string(u.tokens.size()) +
                          " tokens but " + std::to_string(predicted[i].size()) + " predicted tags");
    }
    if (!has_name(u)) {
      ++report.nameless_utterances;
      continue;
    }
    const std::vector<Span> spans = extract_spans(u.tokens, predicted[i]);
    for (const NameScore& s : score_utterance(u, spans)) {
      add_score(report.overall, s);
      add_score(report.by_country[u.meta.country], s);
      add_score(report.by_gender[std::string(to_string(u.meta.gender))], s);
      all_scores.push_back(s);
    }
  }
  report.first_last = first_last_accuracy(all_scores);
  report.false_positives = false_positive_counts(gold, predicted, top_k);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  Json j;
  j["utterances"] = report.utterances;
  j["nameless_utterances"] = report.nameless_utterances;
  j["overall"] = group_json(report.overall);
  Json countries = Json::object();
  for (const auto& [c, g] : report.by_country) countries[c] = group_json(g);
  j["by_country"] = countries;
  Json genders = Json::object();
  for (const auto& [k, g] : report.by_gender) genders[k] = group_json(g);
  j["by_gender"] = genders;
  const FirstLastTable& t = report.first_last;
  j["first_last"] = {
      {"first_only", {{"n", t.first_only_n}, {"first_correct", t.first_only_first_correct}}},
      {"full", {{"n", t.full_n}, {"first_correct", t.full_first_correct}, {"last_correct", t.full_last_correct}}}};
  Json fps = Json::array();
  for (const auto& [text, count] : report.false_positives) fps.push_back({{"text", text}, {"count", count}});
  j["false_positives"] = fps;
  return j.dump(2) + "\n";
}

std::string render_summary_markdown(const EvalReport& report) {
  std::ostringstream md;
  const GroupScore& o = report.overall;
  md << "| Names | Strict accuracy | Partial accuracy |\n";
  md << "|---|---|---|\n";
  md << "| " << o.support << " | " << fixed4(o.strict_accuracy()) << " | " << fixed4(o.partial_accuracy())
     << " |\n\n";

  const FirstLastTable& t = report.first_last;
  md << "| Name type | Count | First name correct | Last name correct |\n";
  md << "|---|---|---|---|\n";
  md << "| First only | " << t.first_only_n << " | " << t.first_only_first_correct << " ("
     << percent(t.first_only_first_correct, t.first_only_n) << ") | - |\n";
  md << "| First and last | " << t.full_n << " | " << t.full_first_correct << " ("
     << percent(t.full_first_correct, t.full_n) << ") | " << t.full_last_correct << " ("
     << percent(t.full_last_correct, t.full_n) << ") |\n\n";

  md << "| Gender | Support | Strict accuracy |\n";
  md << "|---|---|---|\n";
  for (const auto& [g, s] : report.by_gender) {
    md << "| " << g << " | " << s.support << " | " << fixed4(s.strict_accuracy()) << " |\n";
  }
  md << "\n";

  md << "| False positive | Count |\n";
  md << "|---|---|\n";
  for (const auto& [text, count] : report.false_positives) md << "| " << text << " | " << count << " |\n";
  return md.str();
}

std::string render_country_csv(const EvalReport& report) {
  std::ostringstream csv;
  csv << "country,strict_accuracy,partial_accuracy,support\n";
  for (const auto& [country, g] : report.by_country) {
    const bool quote = country.find_first_of(",\"") != std::string::npos;
    std::string name = country;
    if (quote) {
      name.clear();
      for (char c : country) {
        if (c == '"') name += '"';
        name += c;
      }
      name = "\"" + name + "\"";
    }
    csv << name << ',' << fixed4(g.strict_accuracy()) << ',' << fixed4(g.partial_accuracy()) << ',' << g.support
        << '\n';
  }
  return csv.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create report directory " + dir.string() + ": " + ec.message());
  write_text(dir / "report.json", report_to_json(report));
  write_text(dir / "summary.md", render_summary_markdown(report));
  write_text(dir / "countries.csv", render_country_csv(report));
}

}  // namespace namerec
