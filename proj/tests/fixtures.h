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

#ifndef NAMEREC_TESTS_FIXTURES_H_
#define NAMEREC_TESTS_FIXTURES_H_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "namerec/curation.h"
#include "namerec/dataset.h"

namespace namerec::fixtures {

// `n` curated synthetic utterances taken at an even stride through the
// training split, so first-only and full names are both present.
inline std::vector<TaggedUtterance> toy_set(size_t n, uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.n_templates = 400;
  spec.n_names_per_country = 30;
  spec.countries = 6;
  spec.seed = seed;
  const SyntheticCorpus corpus = generate_synthetic_corpus(spec);
  CurationConfig config;
  config.seed = seed;
  const DatasetSplit split = run_curation(corpus.names, corpus.templates, config);
  std::vector<TaggedUtterance> out;
  const size_t stride = std::max<size_t>(1, split.train.size() / n);
  for (size_t i = 0; i < split.train.size() && out.size() < n; i += stride) out.push_back(split.train[i]);
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("namerec_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace namerec::fixtures

#endif  // NAMEREC_TESTS_FIXTURES_H_
