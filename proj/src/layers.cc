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

#include "namerec/layers.h"

#include <algorithm>
#include <cmath>

#include "namerec/errors.h"
#include "namerec/rng.h"

namespace namerec {

std::string_view to_string(Architecture a) { return a == Architecture::kWordOnly ? "word" : "wordchar"; }

Architecture parse_architecture(std::string_view s) {
  if (s == "word") return Architecture::kWordOnly;
  if (s == "wordchar") return Architecture::kWordChar;
  throw FormatError("unknown architecture '" + std::string(s) + "' (expected word or wordchar)");
}

std::vector<NamedTensor> ModelParams::named_parameters() const {
  std::vector<NamedTensor> out;
  out.push_back({"word_embed", word_embed});
  if (char_embed) out.push_back({"char_embed", *char_embed});
  auto add_lstm = [&out](const std::string& prefix, const LstmParams& p) {
    out.push_back({prefix + ".W", p.W});
    out.push_back({prefix + ".U", p.U});
    out.push_back({prefix + ".b", p.b});
  };
  if (char_lstm) add_lstm("char_lstm", *char_lstm);
  add_lstm("fwd_lstm", fwd_lstm);
  add_lstm("bwd_lstm", bwd_lstm);
  out.push_back({"out_W", out_W});
  out.push_back({"out_b", out_b});
  return out;
}

void ModelParams::zero_grad() const {
  for (const auto& p : named_parameters()) p.tensor.zero_grad();
}

namespace {

void check_shape(const Tensor& t, const Shape& expected, const std::string& what) {
  if (t.shape() != expected) {
    throw ContractError(what + " has shape " + shape_to_string(t.shape()) + ", expected " +
                        shape_to_string(expected));
  }
}

void check_lstm(const LstmParams& p, size_t input_dim, size_t hidden, const std::string& what) {
  if (p.hidden != hidden) throw ContractError(what + " hidden size " + std::to_string(p.hidden));
  check_shape(p.W, {input_dim, 4 * hidden}, what + ".W");
  check_shape(p.U, {hidden, 4 * hidden}, what + ".U");
  check_shape(p.b, {4 * hidden}, what + ".b");
}

}  // namespace

void ModelParams::validate() const {
  const bool with_chars = architecture == Architecture::kWordChar;
  if (with_chars != char_embed.has_value() || with_chars != char_lstm.has_value()) {
    throw ContractError(std::string("architecture ") + std::string(to_string(architecture)) +
                        (with_chars ? " requires" : " forbids") + " char embedding and char LSTM");
  }
  if (word_embed.rank() != 2 || word_embed.shape()[1] != dims.word_dim) {
    throw ContractError("word_embed has shape " + shape_to_string(word_embed.shape()));
  }
  size_t input_dim = dims.word_dim;
  if (with_chars) {
    if (char_embed->rank() != 2 || char_embed->shape()[1] != dims.char_dim) {
      throw ContractError("char_embed has shape " + shape_to_string(char_embed->shape()));
    }
    check_lstm(*char_lstm, dims.char_dim, dims.char_hidden, "char_lstm");
    input_dim += dims.char_hidden;
  }
  check_lstm(fwd_lstm, input_dim, dims.word_hidden, "fwd_lstm");
  check_lstm(bwd_lstm, input_dim, dims.word_hidden, "bwd_lstm");
  if (out_W.rank() != 2 || out_W.shape()[0] != 2 * dims.word_hidden || out_b.shape() != Shape{out_W.shape()[1]}) {
    throw ContractError("output layer shapes " + shape_to_string(out_W.shape()) + " / " +
                        shape_to_string(out_b.shape()));
  }
}

ModelParams init_params(Architecture architecture, size_t word_vocab_size, size_t char_vocab_size,
                        size_t num_labels, const ModelDims& dims, uint64_t seed) {
  if (word_vocab_size < 2) throw ContractError("init_params: word vocabulary needs PAD and one symbol");
  if (architecture == Architecture::kWordChar && char_vocab_size < 2) {
    throw ContractError("init_params: char vocabulary needs PAD and one symbol");
  }
  if (num_labels < 1 || dims.word_dim < 1 || dims.word_hidden < 1 ||
      (architecture == Architecture::kWordChar && (dims.char_dim < 1 || dims.char_hidden < 1))) {
    throw ContractError("init_params: dimensions must be positive");
  }
  Rng rng(seed);
  auto glorot = [&rng](size_t fan_in, size_t fan_out) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> data(fan_in * fan_out);
    for (double& v : data) v = rng.uniform(-s, s);
    return Tensor({fan_in, fan_out}, std::move(data), true);
  };
  auto lstm = [&glorot](size_t input_dim, size_t hidden) {
    LstmParams p;
    p.hidden = hidden;
    p.W = glorot(input_dim, 4 * hidden);
    p.U = glorot(hidden, 4 * hidden);
    std::vector<double> bias(4 * hidden, 0.0);
    std::fill(bias.begin() + static_cast<std::ptrdiff_t>(kForgetGate * hidden),
              bias.begin() + static_cast<std::ptrdiff_t>((kForgetGate + 1) * hidden), 1.0);
    p.b = Tensor({4 * hidden}, std::move(bias), true);
    return p;
  };

  ModelParams m;
  m.architecture = architecture;
  m.dims = dims;
  m.word_embed = glorot(word_vocab_size, dims.word_dim);
  size_t input_dim = dims.word_dim;
  if (architecture == Architecture::kWordChar) {
    m.char_embed = glorot(char_vocab_size, dims.char_dim);
    m.char_lstm = lstm(dims.char_dim, dims.char_hidden);
    input_dim += dims.char_hidden;
  }
  m.fwd_lstm = lstm(input_dim, dims.word_hidden);
  m.bwd_lstm = lstm(input_dim, dims.word_hidden);
  m.out_W = glorot(2 * dims.word_hidden, num_labels);
  m.out_b = Tensor::zeros({num_labels}, true);
  return m;
}

Tensor embedding_forward(Tape& tape, const Tensor& table, std::span<const int> ids) {
  return gather_rows(tape, table, ids);
}

namespace {

// Cell step where a missing state means the all-zero initial state; the
// hU and f⊙c terms are dropped since they are exactly zero there.
LstmState cell(Tape& tape, const LstmParams& p, const Tensor& x, const LstmState* state) {
  const size_t hd = p.hidden;
  Tensor z = matmul(tape, x, p.W);
  if (state != nullptr) z = add(tape, z, matmul(tape, state->h, p.U));
  z = add_row_vector(tape, z, p.b);
  Tensor i = sigmoid(tape, slice_last_dim(tape, z, kInputGate * hd, (kInputGate + 1) * hd));
  Tensor g = tanh(tape, slice_last_dim(tape, z, kCandidateGate * hd, (kCandidateGate + 1) * hd));
  Tensor o = sigmoid(tape, slice_last_dim(tape, z, kOutputGate * hd, (kOutputGate + 1) * hd));
  Tensor c = mul(tape, i, g);
  if (state != nullptr) {
    Tensor f = sigmoid(tape, slice_last_dim(tape, z, kForgetGate * hd, (kForgetGate + 1) * hd));
    c = add(tape, mul(tape, f, state->c), c);
  }
  Tensor h = mul(tape, o, tanh(tape, c));
  return {std::move(h), std::move(c)};
}

// Advances only the rows where `active` is set; the others keep their
// previous state (zero when there is none yet).
LstmState masked_cell(Tape& tape, const LstmParams& p, const Tensor& x, const std::optional<LstmState>& state,
                      const std::vector<bool>& active) {
  LstmState next = cell(tape, p, x, state ? &*state : nullptr);
  if (std::all_of(active.begin(), active.end(), [](bool a) { return a; })) return next;
  const Tensor prev_h = state ? state->h : Tensor::zeros(next.h.shape());
  const Tensor prev_c = state ? state->c : Tensor::zeros(next.c.shape());
  return {select_rows(tape, active, next.h, prev_h), select_rows(tape, active, next.c, prev_c)};
}

// Char LSTM over N words stored row-major in [N × width]. Zero-length
// words (batch padding) produce zero rows.
Tensor encode_chars(Tape& tape, const Tensor& char_embed, const LstmParams& p, std::span<const int> char_ids,
                    size_t width, std::span<const int> lengths) {
  const size_t n = lengths.size();
  std::optional<LstmState> state;
  std::vector<int> column(n);
  std::vector<bool> active(n);
  for (size_t k = 0; k < width; ++k) {
    bool any = false;
    for (size_t w = 0; w < n; ++w) {
      column[w] = char_ids[w * width + k];
      active[w] = static_cast<size_t>(lengths[w]) > k;
      any = any || active[w];
    }
    if (!any) break;
    Tensor x = embedding_forward(tape, char_embed, column);
    state = masked_cell(tape, p, x, state, active);
  }
  return state ? state->h : Tensor::zeros({n, p.hidden});
}

}  // namespace

LstmState lstm_cell_step(Tape& tape, const LstmParams& p, const Tensor& x, const Tensor& h, const Tensor& c) {
  if (x.rank() != 2 || h.rank() != 2 || c.rank() != 2 || x.shape()[1] != p.input_dim() ||
      h.shape() != Shape{x.shape()[0], p.hidden} || c.shape() != h.shape()) {
    throw DimensionError("lstm_cell_step: x " + shape_to_string(x.shape()) + ", h " + shape_to_string(h.shape()) +
                         ", c " + shape_to_string(c.shape()) + " do not fit W " + shape_to_string(p.W.shape()));
  }
  LstmState state{h, c};
  return cell(tape, p, x, &state);
}

Tensor lstm_sequence(Tape& tape, const LstmParams& p, const Tensor& xs, Direction direction) {
  if (xs.rank() != 2 || xs.shape()[1] != p.input_dim()) {
    throw DimensionError("lstm_sequence: inputs " + shape_to_string(xs.shape()) + " do not fit W " +
                         shape_to_string(p.W.shape()));
  }
  const size_t t = xs.shape()[0];
  if (t == 0) throw ContractError("lstm_sequence: empty sequence");
  std::vector<Tensor> outputs(t);
  std::optional<LstmState> state;
  for (size_t step = 0; step < t; ++step) {
    const size_t i = direction == Direction::kForward ? step : t - 1 - step;
    const int row = static_cast<int>(i);
    Tensor x = gather_rows(tape, xs, std::span<const int>(&row, 1));
    state = cell(tape, p, x, state ? &*state : nullptr);
    outputs[i] = state->h;
  }
  return concat_rows(tape, outputs);
}

Tensor char_encoder_forward(Tape& tape, const Tensor& char_embed, const LstmParams& char_lstm,
                            std::span<const int> char_ids, size_t max_word_len,
                            std::span<const int> word_lengths) {
  if (char_ids.size() != word_lengths.size() * max_word_len) {
    throw DimensionError("char_encoder_forward: " + std::to_string(char_ids.size()) + " char ids for " +
                         std::to_string(word_lengths.size()) + " words of width " + std::to_string(max_word_len));
  }
  for (size_t w = 0; w < word_lengths.size(); ++w) {
    if (word_lengths[w] < 1 || static_cast<size_t>(word_lengths[w]) > max_word_len) {
      throw ContractError("char_encoder_forward: word " + std::to_string(w) + " has length " +
                          std::to_string(word_lengths[w]));
    }
  }
  return encode_chars(tape, char_embed, char_lstm, char_ids, max_word_len, word_lengths);
}

Tensor batch_forward(Tape& tape, const ModelParams& params, const Batch& batch) {
  const size_t nb = batch.batch_size, nt = batch.max_len, np = batch.positions();
  if (np == 0) throw ContractError("batch_forward: empty batch");
  Tensor features = embedding_forward(tape, params.word_embed, batch.word_ids);
  if (params.architecture == Architecture::kWordChar) {
    if (!batch.has_chars()) throw ContractError("batch_forward: wordchar model needs char ids");
    Tensor chars = encode_chars(tape, *params.char_embed, *params.char_lstm, batch.char_ids, batch.word_width,
                                batch.word_lengths);
    features = concat_last_dim(tape, features, chars);
  }

  std::vector<Tensor> inputs(nt);
  std::vector<std::vector<bool>> active(nt, std::vector<bool>(nb));
  std::vector<int> rows(nb);
  for (size_t t = 0; t < nt; ++t) {
    for (size_t b = 0; b < nb; ++b) {
      rows[b] = static_cast<int>(b * nt + t);
      active[t][b] = t < batch.lengths[b];
    }
    inputs[t] = gather_rows(tape, features, rows);
  }

  // Padding sits after the real tokens, so the forward pass never sees it
  // before a real position. The backward pass starts in the padding and
  // has to hold its state there.
  std::vector<Tensor> fwd(nt), bwd(nt);
  std::optional<LstmState> state;
  for (size_t t = 0; t < nt; ++t) {
    state = cell(tape, params.fwd_lstm, inputs[t], state ? &*state : nullptr);
    fwd[t] = state->h;
  }
  state.reset();
  for (size_t step = 0; step < nt; ++step) {
    const size_t t = nt - 1 - step;
    state = masked_cell(tape, params.bwd_lstm, inputs[t], state, active[t]);
    bwd[t] = state->h;
  }

  std::vector<Tensor> per_step(nt);
  for (size_t t = 0; t < nt; ++t) per_step[t] = concat_last_dim(tape, fwd[t], bwd[t]);
  Tensor time_major = concat_rows(tape, per_step);
  std::vector<int> order(np);
  for (size_t b = 0; b < nb; ++b) {
    for (size_t t = 0; t < nt; ++t) order[b * nt + t] = static_cast<int>(t * nb + b);
  }
  Tensor hidden = gather_rows(tape, time_major, order);
  Tensor logits = add_row_vector(tape, matmul(tape, hidden, params.out_W), params.out_b);
  return softmax_rows(tape, logits);
}

Tensor model_forward(Tape& tape, const ModelParams& params, const EncodedUtterance& encoded) {
  if (encoded.length() == 0) throw ContractError("model_forward: empty utterance");
  if (params.architecture == Architecture::kWordChar && !encoded.has_chars()) {
    throw ContractError("model_forward: wordchar model needs char ids");
  }
  const Batch batch = pad_batch(std::span<const EncodedUtterance>(&encoded, 1));
  return batch_forward(tape, params, batch);
}

Tensor batch_loss(Tape& tape, const ModelParams& params, const Batch& batch) {
  Tensor probs = batch_forward(tape, params, batch);
  return sparse_cross_entropy(tape, probs, batch.tag_ids, batch.mask);
}

std::vector<int> argmax_rows(const Tensor& probs) {
  const size_t rows = probs.rows(), cols = probs.cols();
  std::vector<int> out(rows);
  const auto d = probs.data();
  for (size_t i = 0; i < rows; ++i) {
    const double* row = d.data() + i * cols;
    out[i] = static_cast<int>(std::max_element(row, row + cols) - row);
  }
  return out;
}

AdamState make_adam_state(std::span<const NamedTensor> params, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor.size(), 0.0);
    s.v.emplace_back(p.tensor.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<const NamedTensor> params, AdamState& state) {
  if (params.size() != state.m.size()) throw ContractError("adam_step: state does not match parameter list");
  for (size_t k = 0; k < params.size(); ++k) {
    if (params[k].tensor.size() != state.m[k].size()) {
      throw DimensionError("adam_step: moment size mismatch for " + params[k].name);
    }
    for (double g : params[k].tensor.grad()) {
      if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient in parameter " + params[k].name);
    }
  }
  state.t += 1;
  const AdamConfig& c = state.config;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (size_t k = 0; k < params.size(); ++k) {
    Tensor theta = params[k].tensor;
    const auto grad = theta.grad();
    auto data = theta.data();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (size_t i = 0; i < data.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      data[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace namerec
