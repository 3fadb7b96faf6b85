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

#ifndef NAMEREC_ENCODING_H_
#define NAMEREC_ENCODING_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "namerec/dataset.h"

namespace namerec {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr size_t kDefaultMaxWordLen = 25;

// Insertion-ordered symbol table. Ids 0 and 1 are PAD and UNK; real
// symbols start at 2.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> symbols);

  // Returns the id of `symbol`, inserting it if new.
  int add(const std::string& symbol);
  // UNK for unknown symbols.
  int id(std::string_view symbol) const;
  bool contains(std::string_view symbol) const;
  const std::string& symbol(int id) const;

  // Including PAD and UNK.
  size_t size() const { return symbols_.size() + 2; }
  // Real symbols only; index = id - 2.
  const std::vector<std::string>& symbols() const { return symbols_; }

  bool operator==(const Vocab& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> ids_;
};

struct Vocabs {
  Vocab words;
  Vocab chars;

  bool operator==(const Vocabs&) const = default;
};

// Built from training utterances only; throws ContractError when empty.
Vocabs build_vocabs(std::span<const TaggedUtterance> train);

// {"words": [...], "chars": [...], "labels": ["O", "B-PER", "I-PER"]}.
// Word and char arrays are indexed by id - 2; labels by tag id.
std::string vocabs_to_json(const Vocabs& vocabs);
Vocabs vocabs_from_json(std::string_view json);
// FNV-1a 64 over vocabs_to_json().
uint64_t vocab_hash(const Vocabs& vocabs);

struct EncodedUtterance {
  std::vector<int> word_ids;
  // Row-major [t × max_word_len], PAD beyond each word's length. Empty when
  // encoded without characters.
  std::vector<int> char_ids;
  size_t max_word_len = 0;
  std::vector<int> word_lengths;
  std::vector<int> tag_ids;
  std::vector<bool> mask;

  size_t length() const { return word_ids.size(); }
  bool has_chars() const { return !char_ids.empty() || word_ids.empty(); }
};

// Words longer than max_word_len keep their first max_word_len characters.
EncodedUtterance encode_utterance(const Vocabs& vocabs, const TaggedUtterance& u,
                                  size_t max_word_len = kDefaultMaxWordLen);
// Same as encode_utterance with every tag O, for raw text.
EncodedUtterance encode_tokens(const Vocabs& vocabs, const std::vector<std::string>& tokens,
                               size_t max_word_len = kDefaultMaxWordLen);
std::vector<Tag> decode_tags(std::span<const int> tag_ids);

// Utterances padded to the longest one. Position (b, i) lives at flat index
// b * max_len + i. Char rows are trimmed to the longest word in the batch.
struct Batch {
  size_t batch_size = 0;
  size_t max_len = 0;
  size_t word_width = 0;
  std::vector<size_t> lengths;
  std::vector<int> word_ids;
  std::vector<int> char_ids;  // [batch_size × max_len × word_width]
  std::vector<int> word_lengths;  // 0 at padded positions
  std::vector<int> tag_ids;
  std::vector<bool> mask;

  size_t positions() const { return batch_size * max_len; }
  bool has_chars() const { return word_width > 0; }
};

// Throws ContractError on an empty list.
Batch pad_batch(std::span<const EncodedUtterance> encoded);

}  // namespace namerec

#endif  // NAMEREC_ENCODING_H_
