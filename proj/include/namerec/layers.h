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

// BiLSTM taggers over word embeddings, optionally augmented with a
// per-word character LSTM encoding, and the Adam optimizer that trains
// them.
//
// Model outline for one utterance of t tokens:
//
//   word ids ──embed──┐
//                     ├─concat─► [t × in] ─► fwd LSTM ─┐
//   char ids ─embed─► char LSTM (last state) ┘         ├─concat─► [t × 2H]
//                                  [t × in] ─► bwd LSTM ─┘
//   [t × 2H] ─► dense ─► softmax ─► [t × L]
//
// The char branch exists only for Architecture::kWordChar.

#ifndef NAMEREC_LAYERS_H_
#define NAMEREC_LAYERS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "namerec/encoding.h"
#include "namerec/tensor.h"

namespace namerec {

enum class Architecture { kWordOnly, kWordChar };

// "word" / "wordchar".
std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view s);

// Gate blocks along the 4·hidden axis, in this order.
enum LstmGate : size_t { kInputGate = 0, kForgetGate = 1, kCandidateGate = 2, kOutputGate = 3 };

struct LstmParams {
  Tensor W;  // [input_dim × 4·hidden]
  Tensor U;  // [hidden × 4·hidden]
  Tensor b;  // [4·hidden]
  size_t hidden = 0;

  size_t input_dim() const { return W.shape()[0]; }
};

struct ModelDims {
  size_t word_dim = 64;
  size_t char_dim = 16;
  size_t char_hidden = 20;
  size_t word_hidden = 50;

  bool operator==(const ModelDims&) const = default;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct ModelParams {
  Architecture architecture = Architecture::kWordOnly;
  ModelDims dims;
  Tensor word_embed;                     // [|Vw| × Dw]
  std::optional<Tensor> char_embed;      // [|Vc| × Dc]
  std::optional<LstmParams> char_lstm;   // hidden = char_hidden
  LstmParams fwd_lstm;                   // hidden = word_hidden
  LstmParams bwd_lstm;
  Tensor out_W;                          // [2·word_hidden × L]
  Tensor out_b;                          // [L]

  size_t num_labels() const { return out_b.size(); }

  // Stable names and order used by the optimizer and checkpoints.
  std::vector<NamedTensor> named_parameters() const;
  void zero_grad() const;
  // Throws ContractError if the architecture invariants do not hold.
  void validate() const;
};

// Glorot-uniform weights, zero biases except the forget gate (1.0).
// Vocab sizes include PAD and UNK and must be >= 2.
ModelParams init_params(Architecture architecture, size_t word_vocab_size, size_t char_vocab_size,
                        size_t num_labels, const ModelDims& dims, uint64_t seed);

// Row gather from an embedding table.
Tensor embedding_forward(Tape& tape, const Tensor& table, std::span<const int> ids);

struct LstmState {
  Tensor h;  // [batch × hidden]
  Tensor c;  // [batch × hidden]
};

// One LSTM step for a batch of rows: x [batch × input_dim].
//   z = xW + hU + b, split into i, f, g, o
//   c' = σ(f)⊙c + σ(i)⊙tanh(g);  h' = σ(o)⊙tanh(c')
LstmState lstm_cell_step(Tape& tape, const LstmParams& p, const Tensor& x, const Tensor& h, const Tensor& c);

enum class Direction { kForward, kBackward };

// Runs one sequence xs [t × input_dim] from a zero state. Row i of the
// output always belongs to token i, whichever direction is used.
Tensor lstm_sequence(Tape& tape, const LstmParams& p, const Tensor& xs, Direction direction);

// Encodes each word independently: embed its characters, run the char LSTM
// forward and emit the hidden state after the last real character.
// char_ids is row-major [t × max_word_len]; every length must be in
// [1, max_word_len].
Tensor char_encoder_forward(Tape& tape, const Tensor& char_embed, const LstmParams& char_lstm,
                            std::span<const int> char_ids, size_t max_word_len,
                            std::span<const int> word_lengths);

// Tag distribution per token, [t × L]. WordChar needs char ids.
Tensor model_forward(Tape& tape, const ModelParams& params, const EncodedUtterance& encoded);

// Tag distributions for a padded batch, [(batch_size · max_len) × L] in
// Batch position order. Recurrent state is held fixed across padded
// positions, so every real position matches an unpadded run exactly.
Tensor batch_forward(Tape& tape, const ModelParams& params, const Batch& batch);

// Mean sparse cross-entropy over the unmasked positions of the batch.
Tensor batch_loss(Tape& tape, const ModelParams& params, const Batch& batch);

// Argmax tag id per position; ties go to the lower id.
std::vector<int> argmax_rows(const Tensor& probs);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  AdamConfig config;
  uint64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState make_adam_state(std::span<const NamedTensor> params, const AdamConfig& config);

// One bias-corrected Adam update using each tensor's accumulated gradient
// (a tensor without a gradient counts as zero). Throws NumericalError
// naming the parameter if a gradient is not finite; nothing is updated in
// that case.
void adam_step(std::span<const NamedTensor> params, AdamState& state);

}  // namespace namerec

#endif  // NAMEREC_LAYERS_H_
