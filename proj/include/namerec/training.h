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

// Training loop, checkpoint files, prediction and the multi-seed
// architecture comparison.
//
// Checkpoint file layout (all integers little-endian):
//
//   offset 0   8 bytes  magic "NAMEREC1"
//   offset 8   u64      header length H
//   offset 16  u64      FNV-1a 64 of the header bytes
//   offset 24  H bytes  JSON header: config, vocabularies and their hash,
//                       loss history, parameter manifest (name, shape,
//                       offset, count) and payload checksum
//   then       float64 parameter arrays in manifest order

#ifndef NAMEREC_TRAINING_H_
#define NAMEREC_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "namerec/dataset.h"
#include "namerec/encoding.h"
#include "namerec/evaluation.h"
#include "namerec/layers.h"

namespace namerec {

struct TrainConfig {
  Architecture architecture = Architecture::kWordChar;
  size_t epochs = 30;
  size_t batch_size = 32;
  AdamConfig adam;
  uint64_t seed = 42;
  bool shuffle = true;
  // Only used when a dev set is given.
  std::optional<size_t> early_stop_patience = 3;
  ModelDims dims;
  size_t max_word_len = kDefaultMaxWordLen;

  // Throws ContractError naming the offending field.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct ModelCheckpoint {
  TrainConfig config;
  ModelParams params;
  Vocabs vocabs;
  // Token-weighted mean loss per epoch.
  std::vector<double> train_loss_history;
  std::vector<double> dev_loss_history;
  // FNV-1a 64 of the training data as JSON Lines.
  uint64_t data_checksum = 0;
};

struct EpochStats {
  Architecture architecture;
  uint64_t seed = 0;
  size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> dev_loss;
  double seconds = 0.0;
};

using EpochObserver = std::function<void(const EpochStats&)>;

// Vocabularies come from `train` only. With a dev set and a patience, the
// parameters of the best dev epoch are returned. Throws NumericalError with
// the epoch and batch when a loss is not finite.
ModelCheckpoint train_model(const TrainConfig& config, std::span<const TaggedUtterance> train,
                            std::span<const TaggedUtterance> dev = {}, const EpochObserver& observer = {});

// Token-weighted mean loss of a model over tagged data.
double dataset_loss(const ModelParams& params, const Vocabs& vocabs, std::span<const TaggedUtterance> data,
                    size_t max_word_len, size_t batch_size = 64);

// Predicted tags per utterance (empty utterances give empty tag lists).
std::vector<std::vector<Tag>> predict_tags(const ModelCheckpoint& ckpt, std::span<const TaggedUtterance> data,
                                           size_t batch_size = 64);
std::vector<std::vector<Tag>> predict_tokens(const ModelCheckpoint& ckpt,
                                             std::span<const std::vector<std::string>> utterances,
                                             size_t batch_size = 64);

EvalReport evaluate(const ModelCheckpoint& ckpt, std::span<const TaggedUtterance> test, size_t top_k = 20);

uint64_t fnv1a64(std::string_view bytes);
uint64_t dataset_checksum(std::span<const TaggedUtterance> data);

std::string config_to_json(const TrainConfig& config);
TrainConfig config_from_json(std::string_view json);

std::string serialize_checkpoint(const ModelCheckpoint& ckpt);
// Throws CheckpointError for truncation, checksum or shape mismatches, or
// when `expected` is given and differs from the stored architecture.
ModelCheckpoint deserialize_checkpoint(std::string_view bytes, std::optional<Architecture> expected = std::nullopt);
void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path,
                                std::optional<Architecture> expected = std::nullopt);

struct GradcheckEntry {
  Architecture architecture;
  std::string parameter;
  size_t size = 0;
  double max_rel_error = 0.0;
};

// Central-difference check of every parameter of both architectures on a
// random 3-token utterance with random tags.
std::vector<GradcheckEntry> run_gradcheck(uint64_t seed, const ModelDims& dims = {}, double eps = kGradcheckStep);

struct ProtocolRun {
  Architecture architecture;
  uint64_t seed = 0;
  EvalReport report;
  double final_train_loss = 0.0;
  size_t epochs_run = 0;
  double seconds = 0.0;
};

struct ProtocolSummary {
  // Word-only runs first, then word+char, each in seed order.
  std::vector<ProtocolRun> runs;
  double word_only_mean_strict = 0.0;
  double word_only_mean_partial = 0.0;
  double word_char_mean_strict = 0.0;
  double word_char_mean_partial = 0.0;
  // Seeds where word+char strict accuracy is higher than word-only.
  size_t word_char_wins = 0;
  size_t n_seeds = 0;
};

// Trains n_seeds models per architecture with seeds base.seed ..
// base.seed + n_seeds - 1 and evaluates each on `test`. Runs execute on up
// to `threads` worker threads; results do not depend on the thread count.
// Errors are rethrown with the architecture and seed prepended.
ProtocolSummary run_protocol(const TrainConfig& base, size_t n_seeds, std::span<const TaggedUtterance> train,
                             std::span<const TaggedUtterance> test, size_t threads = 1,
                             const EpochObserver& observer = {});

// One row per model, then one mean row per architecture.
std::string render_protocol_markdown(const ProtocolSummary& summary);
std::string protocol_to_json(const ProtocolSummary& summary);

}  // namespace namerec

#endif  // NAMEREC_TRAINING_H_
