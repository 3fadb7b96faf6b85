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

#include "namerec/encoding.h"

#include <algorithm>

#include "json.hpp"
#include "namerec/errors.h"
#include "namerec/text.h"

namespace namerec {

namespace {

const std::string kPadSymbol = "<PAD>";
const std::string kUnkSymbol = "<UNK>";

}  // namespace

Vocab::Vocab(std::vector<std::string> symbols) {
  for (const auto& s : symbols) {
    if (contains(s)) throw FormatError("duplicate vocabulary symbol '" + s + "'");
    add(s);
  }
}

int Vocab::add(const std::string& symbol) {
  auto it = ids_.find(symbol);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(symbols_.size()) + 2;
  symbols_.push_back(symbol);
  ids_.emplace(symbol, id);
  return id;
}

int Vocab::id(std::string_view symbol) const {
  auto it = ids_.find(std::string(symbol));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view symbol) const { return ids_.count(std::string(symbol)) > 0; }

const std::string& Vocab::symbol(int id) const {
  if (id == kPadId) return kPadSymbol;
  if (id == kUnkId) return kUnkSymbol;
  if (id < 0 || static_cast<size_t>(id) >= size()) {
    throw IndexError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return symbols_[static_cast<size_t>(id) - 2];
}

Vocabs build_vocabs(std::span<const TaggedUtterance> train) {
  if (train.empty()) throw ContractError("build_vocabs: empty training set");
  Vocabs v;
  for (const auto& u : train) {
    for (const auto& token : u.tokens) {
      v.words.add(token);
      for (const auto& ch : utf8_chars(token)) v.chars.add(ch);
    }
  }
  return v;
}

std::string vocabs_to_json(const Vocabs& vocabs) {
  nlohmann::ordered_json j;
  j["words"] = vocabs.words.symbols();
  j["chars"] = vocabs.chars.symbols();
  j["labels"] = {to_string(Tag::kOutside), to_string(Tag::kBegin), to_string(Tag::kInside)};
  return j.dump();
}

Vocabs vocabs_from_json(std::string_view json) {
  try {
    const auto j = nlohmann::json::parse(json);
    const auto labels = j.at("labels").get<std::vector<std::string>>();
    if (labels.size() != static_cast<size_t>(kNumTags)) throw FormatError("label inventory must be O, B-PER, I-PER");
    for (size_t i = 0; i < labels.size(); ++i) {
      if (parse_tag(labels[i]) != static_cast<Tag>(i)) throw FormatError("label inventory out of order");
    }
    Vocabs v;
    v.words = Vocab(j.at("words").get<std::vector<std::string>>());
    v.chars = Vocab(j.at("chars").get<std::vector<std::string>>());
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad vocabulary JSON: ") + e.what());
  }
}

uint64_t vocab_hash(const Vocabs& vocabs) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : vocabs_to_json(vocabs)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

EncodedUtterance encode_tokens(const Vocabs& vocabs, const std::vector<std::string>& tokens,
                               size_t max_word_len) {
  if (max_word_len < 1) throw ContractError("encode: max_word_len must be >= 1");
  EncodedUtterance e;
  const size_t t = tokens.size();
  e.max_word_len = max_word_len;
  e.word_ids.reserve(t);
  e.char_ids.assign(t * max_word_len, kPadId);
  e.word_lengths.reserve(t);
  for (size_t i = 0; i < t; ++i) {
    e.word_ids.push_back(vocabs.words.id(tokens[i]));
    const auto chars = utf8_chars(tokens[i]);
    const size_t len = std::min(chars.size(), max_word_len);
    for (size_t k = 0; k < len; ++k) e.char_ids[i * max_word_len + k] = vocabs.chars.id(chars[k]);
    e.word_lengths.push_back(static_cast<int>(len));
  }
  e.tag_ids.assign(t, static_cast<int>(Tag::kOutside));
  e.mask.assign(t, true);
  return e;
}

EncodedUtterance encode_utterance(const Vocabs& vocabs, const TaggedUtterance& u, size_t max_word_len) {
  if (u.tokens.size() != u.tags.size()) throw DataError("encode: tokens and tags differ in length");
  EncodedUtterance e = encode_tokens(vocabs, u.tokens, max_word_len);
  for (size_t i = 0; i < u.tags.size(); ++i) e.tag_ids[i] = static_cast<int>(u.tags[i]);
  return e;
}

std::vector<Tag> decode_tags(std::span<const int> tag_ids) {
  std::vector<Tag> tags;
  tags.reserve(tag_ids.size());
  for (int id : tag_ids) {
    if (id < 0 || id >= kNumTags) throw DataError("tag id " + std::to_string(id) + " outside label set");
    tags.push_back(static_cast<Tag>(id));
  }
  return tags;
}

Batch pad_batch(std::span<const EncodedUtterance> encoded) {
  if (encoded.empty()) throw ContractError("pad_batch: empty batch");
  Batch b;
  b.batch_size = encoded.size();
  bool chars = true;
  for (const auto& e : encoded) {
    b.max_len = std::max(b.max_len, e.length());
    b.lengths.push_back(e.length());
    chars = chars && e.has_chars();
    for (int len : e.word_lengths) b.word_width = std::max(b.word_width, static_cast<size_t>(len));
  }
  if (!chars) b.word_width = 0;
  const size_t n = b.positions();
  b.word_ids.assign(n, kPadId);
  b.word_lengths.assign(n, 0);
  b.tag_ids.assign(n, static_cast<int>(Tag::kOutside));
  b.mask.assign(n, false);
  b.char_ids.assign(n * b.word_width, kPadId);
  for (size_t u = 0; u < encoded.size(); ++u) {
    const auto& e = encoded[u];
    for (size_t i = 0; i < e.length(); ++i) {
      const size_t p = u * b.max_len + i;
      b.word_ids[p] = e.word_ids[i];
      b.word_lengths[p] = e.word_lengths[i];
      b.tag_ids[p] = e.tag_ids[i];
      b.mask[p] = e.mask[i];
      for (size_t k = 0; k < b.word_width && k < e.max_word_len && !e.char_ids.empty(); ++k) {
        b.char_ids[p * b.word_width + k] = e.char_ids[i * e.max_word_len + k];
      }
    }
  }
  return b;
}

}  // namespace namerec
