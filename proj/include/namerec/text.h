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

#ifndef NAMEREC_TEXT_H_
#define NAMEREC_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace namerec {

// Splits on ASCII whitespace, then peels trailing . , ! ? ; : off each
// piece as separate single-character tokens. Internal hyphens and
// apostrophes stay inside the token. Case is preserved.
std::vector<std::string> tokenize(std::string_view text);

// Joins tokens with single spaces.
std::string join_tokens(const std::vector<std::string>& tokens, size_t begin, size_t end);
std::string join_tokens(const std::vector<std::string>& tokens);

// Splits UTF-8 text into code points, each returned as its byte sequence.
// Invalid bytes come back as one-byte pieces so nothing is dropped.
std::vector<std::string> utf8_chars(std::string_view text);

// Code point values; invalid bytes decode as U+FFFD.
std::u32string decode_utf8(std::string_view text);

// Collapses runs of whitespace to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

}  // namespace namerec

#endif  // NAMEREC_TEXT_H_
