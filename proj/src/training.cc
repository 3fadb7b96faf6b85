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

#include "namerec/training.h"

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "namerec/errors.h"
#include "namerec/rng.h"

namespace namerec {

using Json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'N', 'A', 'M', 'E', 'R', 'E', 'C', '1'};
constexpr size_t kPreambleBytes = 24;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void put_u64(std::string& out, uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

uint64_t get_u64(std::string_view in, size_t offset) {
  uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return x;
}

std::string hex64(uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

// Encodes every utterance once; the batches reuse these.
std::vector<EncodedUtterance> encode_all(const Vocabs& vocabs, std::span<const TaggedUtterance> data,
                                         size_t max_word_len) {
  std::vector<EncodedUtterance> out;
  out.reserve(data.size());
  for (const auto& u : data) out.push_back(encode_utterance(vocabs, u, max_word_len));
  return out;
}

size_t unmasked(const Batch& b) {
  size_t n = 0;
  for (bool m : b.mask) n += m;
  return n;
}

double encoded_loss(const ModelParams& params, const std::vector<EncodedUtterance>& encoded, size_t batch_size) {
  double total = 0.0;
  size_t tokens = 0;
  std::vector<EncodedUtterance> chunk;
  for (size_t i = 0; i < encoded.size(); i += batch_size) {
    chunk.clear();
    for (size_t j = i; j < std::min(encoded.size(), i + batch_size); ++j) {
      if (encoded[j].length() > 0) chunk.push_back(encoded[j]);
    }
    if (chunk.empty()) continue;
    const Batch batch = pad_batch(chunk);
    Tape tape(false);
    const size_t n = unmasked(batch);
    total += batch_loss(tape, params, batch).item() * static_cast<double>(n);
    tokens += n;
  }
  if (tokens == 0) throw ContractError("loss over an empty dataset");
  return total / static_cast<double>(tokens);
}

std::vector<std::vector<Tag>> predict_encoded(const ModelParams& params, const std::vector<EncodedUtterance>& encoded,
                                              size_t batch_size) {
  if (batch_size == 0) throw ContractError("batch_size must be >= 1");
  std::vector<std::vector<Tag>> out(encoded.size());
  std::vector<size_t> index;
  std::vector<EncodedUtterance> chunk;
  for (size_t i = 0; i < encoded.size();) {
    index.clear();
    chunk.clear();
    for (; i < encoded.size() && chunk.size() < batch_size; ++i) {
      if (encoded[i].length() == 0) continue;
      index.push_back(i);
      chunk.push_back(encoded[i]);
    }
    if (chunk.empty()) continue;
    const Batch batch = pad_batch(chunk);
    Tape tape(false);
    const std::vector<int> ids = argmax_rows(batch_forward(tape, params, batch));
    for (size_t b = 0; b < chunk.size(); ++b) {
      std::vector<Tag>& tags = out[index[b]];
      for (size_t t = 0; t < batch.lengths[b]; ++t) tags.push_back(static_cast<Tag>(ids[b * batch.max_len + t]));
    }
  }
  return out;
}

std::vector<std::vector<double>> snapshot(const ModelParams& params) {
  std::vector<std::vector<double>> values;
  for (const auto& p : params.named_parameters()) {
    values.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  }
  return values;
}

void restore(const ModelParams& params, const std::vector<std::vector<double>>& values) {
  const auto named = params.named_parameters();
  for (size_t i = 0; i < named.size(); ++i) {
    Tensor t = named[i].tensor;
    std::copy(values[i].begin(), values[i].end(), t.data().begin());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("epochs must be >= 1");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (!(adam.lr > 0.0) || !std::isfinite(adam.lr)) throw ContractError("lr must be a positive number");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ContractError("beta1 must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ContractError("beta2 must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ContractError("eps must be > 0");
  if (dims.word_dim < 1 || dims.char_dim < 1) throw ContractError("embedding dims must be >= 1");
  if (dims.char_hidden < 1 || dims.word_hidden < 1) throw ContractError("hidden sizes must be >= 1");
  if (max_word_len < 1) throw ContractError("max_word_len must be >= 1");
  if (early_stop_patience && *early_stop_patience < 1) throw ContractError("early_stop_patience must be >= 1");
}

ModelCheckpoint train_model(const TrainConfig& config, std::span<const TaggedUtterance> train,
                            std::span<const TaggedUtterance> dev, const EpochObserver& observer) {
  config.validate();
  if (train.empty()) throw ContractError("train_model: empty training set");

  ModelCheckpoint ckpt;
  ckpt.config = config;
  ckpt.vocabs = build_vocabs(train);
  ckpt.data_checksum = dataset_checksum(train);
  ckpt.params = init_params(config.architecture, ckpt.vocabs.words.size(), ckpt.vocabs.chars.size(), kNumTags,
                            config.dims, config.seed);
  const ModelParams& params = ckpt.params;
  const std::vector<NamedTensor> named = params.named_parameters();
  AdamState adam = make_adam_state(named, config.adam);

  std::vector<EncodedUtterance> train_enc;
  for (auto& e : encode_all(ckpt.vocabs, train, config.max_word_len)) {
    if (e.length() > 0) train_enc.push_back(std::move(e));
  }
  if (train_enc.empty()) throw ContractError("train_model: every training utterance is empty");
  const std::vector<EncodedUtterance> dev_enc = encode_all(ckpt.vocabs, dev, config.max_word_len);
  const bool early_stop = !dev_enc.empty() && config.early_stop_patience.has_value();

  Rng rng(config.seed ^ 0xD1B54A32D192ED03ULL);
  std::vector<size_t> order(train_enc.size());
  std::iota(order.begin(), order.end(), size_t{0});

  double best_dev = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_params;
  size_t epochs_without_gain = 0;
  std::vector<EncodedUtterance> chunk;

  for (size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = Clock::now();
    if (config.shuffle) rng.shuffle(order);
    double total = 0.0;
    size_t tokens = 0;
    for (size_t first = 0, batch_no = 1; first < order.size(); first += config.batch_size, ++batch_no) {
      chunk.clear();
      for (size_t j = first; j < std::min(order.size(), first + config.batch_size); ++j) {
        chunk.push_back(train_enc[order[j]]);
      }
      const Batch batch = pad_batch(chunk);
      Tape tape;
      const Tensor loss = batch_loss(tape, params, batch);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_no));
      }
      params.zero_grad();
      backward(loss, tape);
      adam_step(named, adam);
      const size_t n = unmasked(batch);
      total += value * static_cast<double>(n);
      tokens += n;
    }
    EpochStats stats;
    stats.architecture = config.architecture;
    stats.seed = config.seed;
    stats.epoch = epoch;
    stats.train_loss = total / static_cast<double>(tokens);
    if (!std::isfinite(stats.train_loss)) {
      throw NumericalError("non-finite mean training loss at epoch " + std::to_string(epoch));
    }
    ckpt.train_loss_history.push_back(stats.train_loss);
    if (!dev_enc.empty()) {
      stats.dev_loss = encoded_loss(params, dev_enc, 64);
      ckpt.dev_loss_history.push_back(*stats.dev_loss);
    }
    stats.seconds = seconds_since(start);
    if (observer) observer(stats);
    if (early_stop) {
      if (*stats.dev_loss < best_dev) {
        best_dev = *stats.dev_loss;
        best_params = snapshot(params);
        epochs_without_gain = 0;
      } else if (++epochs_without_gain >= *config.early_stop_patience) {
        break;
      }
    }
  }
  if (early_stop && !best_params.empty()) restore(params, best_params);
  params.zero_grad();
  return ckpt;
}

double dataset_loss(const ModelParams& params, const Vocabs& vocabs, std::span<const TaggedUtterance> data,
                    size_t max_word_len, size_t batch_size) {
  if (batch_size == 0) throw ContractError("batch_size must be >= 1");
  return encoded_loss(params, encode_all(vocabs, data, max_word_len), batch_size);
}

std::vector<std::vector<Tag>> predict_tags(const ModelCheckpoint& ckpt, std::span<const TaggedUtterance> data,
                                           size_t batch_size) {
  return predict_encoded(ckpt.params, encode_all(ckpt.vocabs, data, ckpt.config.max_word_len), batch_size);
}

std::vector<std::vector<Tag>> predict_tokens(const ModelCheckpoint& ckpt,
                                             std::span<const std::vector<std::string>> utterances,
                                             size_t batch_size) {
  std::vector<EncodedUtterance> encoded;
  encoded.reserve(utterances.size());
  for (const auto& tokens : utterances) encoded.push_back(encode_tokens(ckpt.vocabs, tokens, ckpt.config.max_word_len));
  return predict_encoded(ckpt.params, encoded, batch_size);
}

EvalReport evaluate(const ModelCheckpoint& ckpt, std::span<const TaggedUtterance> test, size_t top_k) {
  if (test.empty()) throw ContractError("evaluate: empty test set");
  const auto predicted = predict_tags(ckpt, test);
  return evaluate_predictions(test, predicted, top_k);
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t dataset_checksum(std::span<const TaggedUtterance> data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& u : data) {
    for (unsigned char c : utterance_to_json_line(u) + "\n") {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

Json config_json(const TrainConfig& c) {
  return {{"architecture", std::string(to_string(c.architecture))},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"eps", c.adam.eps},
          {"seed", c.seed},
          {"shuffle", c.shuffle},
          {"early_stop_patience", c.early_stop_patience ? Json(*c.early_stop_patience) : Json(nullptr)},
          {"dims",
           {{"word_dim", c.dims.word_dim},
            {"char_dim", c.dims.char_dim},
            {"char_hidden", c.dims.char_hidden},
            {"word_hidden", c.dims.word_hidden}}},
          {"max_word_len", c.max_word_len}};
}

TrainConfig config_from(const Json& j) {
  TrainConfig c;
  c.architecture = parse_architecture(j.at("architecture").get<std::string>());
  c.epochs = j.at("epochs").get<size_t>();
  c.batch_size = j.at("batch_size").get<size_t>();
  c.adam.lr = j.at("lr").get<double>();
  c.adam.beta1 = j.at("beta1").get<double>();
  c.adam.beta2 = j.at("beta2").get<double>();
  c.adam.eps = j.at("eps").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.shuffle = j.at("shuffle").get<bool>();
  if (j.at("early_stop_patience").is_null()) {
    c.early_stop_patience.reset();
  } else {
    c.early_stop_patience = j.at("early_stop_patience").get<size_t>();
  }
  const Json& d = j.at("dims");
  c.dims.word_dim = d.at("word_dim").get<size_t>();
  c.dims.char_dim = d.at("char_dim").get<size_t>();
  c.dims.char_hidden = d.at("char_hidden").get<size_t>();
  c.dims.word_hidden = d.at("word_hidden").get<size_t>();
  c.max_word_len = j.at("max_word_len").get<size_t>();
  return c;
}

}  // namespace

std::string config_to_json(const TrainConfig& config) { return config_json(config).dump(); }

TrainConfig config_from_json(std::string_view json) {
  try {
    TrainConfig c = config_from(Json::parse(json));
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("bad training config: ") + e.what());
  }
}

std::string serialize_checkpoint(const ModelCheckpoint& ckpt) {
  ckpt.params.validate();
  std::string payload;
  Json manifest = Json::array();
  for (const auto& p : ckpt.params.named_parameters()) {
    manifest.push_back({{"name", p.name},
                        {"shape", p.tensor.shape()},
                        {"offset", payload.size()},
                        {"count", p.tensor.size()}});
    for (double x : p.tensor.data()) put_u64(payload, std::bit_cast<uint64_t>(x));
  }
  Json header;
  header["format"] = "namerec-checkpoint";
  header["version"] = 1;
  header["config"] = config_json(ckpt.config);
  header["vocabs"] = Json::parse(vocabs_to_json(ckpt.vocabs));
  header["vocab_hash"] = hex64(vocab_hash(ckpt.vocabs));
  header["train_loss_history"] = ckpt.train_loss_history;
  header["dev_loss_history"] = ckpt.dev_loss_history;
  header["data_checksum"] = hex64(ckpt.data_checksum);
  header["num_labels"] = ckpt.params.num_labels();
  header["parameters"] = manifest;
  header["payload_bytes"] = payload.size();
  header["payload_checksum"] = hex64(fnv1a64(payload));
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_u64(out, header_text.size());
  put_u64(out, fnv1a64(header_text));
  out += header_text;
  out += payload;
  return out;
}

ModelCheckpoint deserialize_checkpoint(std::string_view bytes, std::optional<Architecture> expected) {
  if (bytes.size() < kPreambleBytes) throw CheckpointError("checkpoint truncated: only " + std::to_string(bytes.size()) + " bytes");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw CheckpointError("not a namerec checkpoint (bad magic)");
  const uint64_t header_len = get_u64(bytes, 8);
  const uint64_t header_sum = get_u64(bytes, 16);
  if (header_len > bytes.size() - kPreambleBytes) throw CheckpointError("checkpoint truncated inside the header");
  const std::string_view header_text = bytes.substr(kPreambleBytes, header_len);
  if (fnv1a64(header_text) != header_sum) throw CheckpointError("checkpoint header checksum mismatch");
  const std::string_view payload = bytes.substr(kPreambleBytes + header_len);

  ModelCheckpoint ckpt;
  try {
    const Json header = Json::parse(header_text);
    if (header.at("format") != "namerec-checkpoint" || header.at("version") != 1) {
      throw CheckpointError("unsupported checkpoint format");
    }
    if (header.at("payload_bytes").get<uint64_t>() != payload.size()) {
      throw CheckpointError("checkpoint payload is " + std::to_string(payload.size()) + " bytes, header says " +
                            std::to_string(header.at("payload_bytes").get<uint64_t>()) + " (truncated?)");
    }
    if (header.at("payload_checksum").get<std::string>() != hex64(fnv1a64(payload))) {
      throw CheckpointError("checkpoint payload checksum mismatch");
    }
    ckpt.config = config_from(header.at("config"));
    ckpt.config.validate();
    if (expected && *expected != ckpt.config.architecture) {
      throw CheckpointError("architecture mismatch: checkpoint holds a " +
                            std::string(to_string(ckpt.config.architecture)) + " model, " +
                            std::string(to_string(*expected)) + " was requested");
    }
    ckpt.vocabs = vocabs_from_json(header.at("vocabs").dump());
    if (header.at("vocab_hash").get<std::string>() != hex64(vocab_hash(ckpt.vocabs))) {
      throw CheckpointError("vocabulary hash mismatch");
    }
    ckpt.train_loss_history = header.at("train_loss_history").get<std::vector<double>>();
    ckpt.dev_loss_history = header.at("dev_loss_history").get<std::vector<double>>();
    ckpt.data_checksum = std::stoull(header.at("data_checksum").get<std::string>(), nullptr, 16);
    const size_t num_labels = header.at("num_labels").get<size_t>();
    if (num_labels != static_cast<size_t>(kNumTags)) {
      throw CheckpointError("checkpoint has " + std::to_string(num_labels) + " labels, expected " +
                            std::to_string(kNumTags));
    }

    ckpt.params = init_params(ckpt.config.architecture, ckpt.vocabs.words.size(),
                              std::max<size_t>(2, ckpt.vocabs.chars.size()), num_labels, ckpt.config.dims, 0);
    const std::vector<NamedTensor> named = ckpt.params.named_parameters();
    const Json& manifest = header.at("parameters");
    std::map<std::string, const Json*> entries;
    for (const auto& e : manifest) entries[e.at("name").get<std::string>()] = &e;
    for (const auto& [name, entry] : entries) {
      const bool known = std::any_of(named.begin(), named.end(), [&](const auto& p) { return p.name == name; });
      if (!known) throw CheckpointError("unexpected parameter " + name + " in checkpoint");
    }
    for (const auto& p : named) {
      auto it = entries.find(p.name);
      if (it == entries.end()) throw CheckpointError("parameter " + p.name + " missing from checkpoint");
      const Json& e = *it->second;
      const Shape shape = e.at("shape").get<Shape>();
      if (shape != p.tensor.shape()) {
        throw CheckpointError("parameter " + p.name + " has shape " + shape_to_string(shape) + ", expected " +
                              shape_to_string(p.tensor.shape()));
      }
      const uint64_t offset = e.at("offset").get<uint64_t>();
      const uint64_t count = e.at("count").get<uint64_t>();
      if (count != p.tensor.size() || offset % 8 != 0 || offset > payload.size() ||
          count * 8 > payload.size() - offset) {
        throw CheckpointError("parameter " + p.name + " lies outside the payload");
      }
      Tensor t = p.tensor;
      auto data = t.data();
      for (size_t i = 0; i < count; ++i) data[i] = std::bit_cast<double>(get_u64(payload, offset + 8 * i));
      for (double x : data) {
        if (!std::isfinite(x)) throw CheckpointError("parameter " + p.name + " holds a non-finite value");
      }
    }
    ckpt.params.validate();
  } catch (const Json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  } catch (const FormatError& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const ContractError& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path, std::optional<Architecture> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_checkpoint(ss.str(), expected);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Gradient check

std::vector<GradcheckEntry> run_gradcheck(uint64_t seed, const ModelDims& dims, double eps) {
  Rng rng(seed);
  TaggedUtterance u;
  const std::string letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
  for (int i = 0; i < 3; ++i) {
    std::string word;
    const size_t len = 1 + rng.below(6);
    for (size_t k = 0; k < len; ++k) word += letters[rng.below(letters.size())];
    u.tokens.push_back(word);
  }
  // A random valid BIO sequence.
  for (int i = 0; i < 3; ++i) {
    const uint64_t pick = rng.below(3);
    Tag t = static_cast<Tag>(pick);
    if (t == Tag::kInside && (i == 0 || u.tags.back() == Tag::kOutside)) t = Tag::kBegin;
    u.tags.push_back(t);
  }
  const std::vector<TaggedUtterance> data = {u};
  const Vocabs vocabs = build_vocabs(data);
  const std::vector<EncodedUtterance> encoded = {encode_utterance(vocabs, u)};
  const Batch batch = pad_batch(encoded);

  std::vector<GradcheckEntry> entries;
  for (Architecture arch : {Architecture::kWordOnly, Architecture::kWordChar}) {
    const ModelParams params = init_params(arch, vocabs.words.size(), vocabs.chars.size(), kNumTags, dims, seed);
    // Nonzero biases so their gradients are exercised away from the init.
    for (const auto& p : params.named_parameters()) {
      Tensor t = p.tensor;
      for (double& x : t.data()) x += rng.uniform(-0.1, 0.1);
    }
    const ScalarFn loss = [&](Tape& tape) { return batch_loss(tape, params, batch); };
    for (const auto& p : params.named_parameters()) {
      params.zero_grad();
      entries.push_back({arch, p.name, p.tensor.size(), finite_diff_check(loss, p.tensor, eps, kGradcheckStencil)});
    }
  }
  return entries;
}

// ---------------------------------------------------------------------------
// Protocol

namespace {

[[noreturn]] void rethrow_tagged(const std::string& tag) {
  try {
    throw;
  } catch (const NumericalError& e) {
    throw NumericalError(tag + e.what());
  } catch (const CheckpointError& e) {
    throw CheckpointError(tag + e.what());
  } catch (const CurationError& e) {
    throw CurationError(tag + e.what());
  } catch (const FormatError& e) {
    throw FormatError(tag + e.what());
  } catch (const DataError& e) {
    throw DataError(tag + e.what());
  } catch (const ContractError& e) {
    throw ContractError(tag + e.what());
  } catch (const Error& e) {
    throw Error(tag + e.what());
  }
}

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

}  // namespace

ProtocolSummary run_protocol(const TrainConfig& base, size_t n_seeds, std::span<const TaggedUtterance> train,
                             std::span<const TaggedUtterance> test, size_t threads, const EpochObserver& observer) {
  if (n_seeds < 1) throw ContractError("n_seeds must be >= 1");
  base.validate();
  if (test.empty()) throw ContractError("run_protocol: empty test set");

  ProtocolSummary summary;
  summary.n_seeds = n_seeds;
  for (Architecture arch : {Architecture::kWordOnly, Architecture::kWordChar}) {
    for (size_t s = 0; s < n_seeds; ++s) {
      ProtocolRun run;
      run.architecture = arch;
      run.seed = base.seed + s;
      summary.runs.push_back(run);
    }
  }

  std::mutex observer_mutex;
  EpochObserver locked_observer;
  if (observer) {
    locked_observer = [&](const EpochStats& st) {
      std::lock_guard<std::mutex> lock(observer_mutex);
      observer(st);
    };
  }
  std::vector<std::exception_ptr> errors(summary.runs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < summary.runs.size(); i = next++) {
      ProtocolRun& run = summary.runs[i];
      try {
        const auto start = Clock::now();
        TrainConfig config = base;
        config.architecture = run.architecture;
        config.seed = run.seed;
        const ModelCheckpoint ckpt = train_model(config, train, {}, locked_observer);
        run.report = evaluate(ckpt, test);
        run.final_train_loss = ckpt.train_loss_history.back();
        run.epochs_run = ckpt.train_loss_history.size();
        run.seconds = seconds_since(start);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const size_t n_threads = std::max<size_t>(1, std::min(threads, summary.runs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    const std::string tag = std::string(to_string(summary.runs[i].architecture)) + " seed " +
                            std::to_string(summary.runs[i].seed) + ": ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (...) {
      rethrow_tagged(tag);
    }
  }

  for (size_t s = 0; s < n_seeds; ++s) {
    const EvalReport& w = summary.runs[s].report;
    const EvalReport& wc = summary.runs[n_seeds + s].report;
    summary.word_only_mean_strict += w.overall.strict_accuracy();
    summary.word_only_mean_partial += w.overall.partial_accuracy();
    summary.word_char_mean_strict += wc.overall.strict_accuracy();
    summary.word_char_mean_partial += wc.overall.partial_accuracy();
    if (wc.overall.strict_accuracy() > w.overall.strict_accuracy()) ++summary.word_char_wins;
  }
  const double n = static_cast<double>(n_seeds);
  summary.word_only_mean_strict /= n;
  summary.word_only_mean_partial /= n;
  summary.word_char_mean_strict /= n;
  summary.word_char_mean_partial /= n;
  return summary;
}

std::string render_protocol_markdown(const ProtocolSummary& summary) {
  std::ostringstream md;
  md << "| Model | Architecture | Seed | Strict accuracy | Partial accuracy |\n";
  md << "|---|---|---|---|---|\n";
  for (size_t i = 0; i < summary.runs.size(); ++i) {
    const ProtocolRun& r = summary.runs[i];
    const std::string label = r.architecture == Architecture::kWordOnly ? "word" : "word + character";
    md << "| " << (i % summary.n_seeds) + 1 << " | " << label << " | " << r.seed << " | "
       << fixed4(r.report.overall.strict_accuracy()) << " | " << fixed4(r.report.overall.partial_accuracy())
       << " |\n";
  }
  md << "| mean | word | - | " << fixed4(summary.word_only_mean_strict) << " | "
     << fixed4(summary.word_only_mean_partial) << " |\n";
  md << "| mean | word + character | - | " << fixed4(summary.word_char_mean_strict) << " | "
     << fixed4(summary.word_char_mean_partial) << " |\n\n";
  md << "Strict accuracy gap (word + character minus word): "
     << fixed4(summary.word_char_mean_strict - summary.word_only_mean_strict) << "; word + character higher in "
     << summary.word_char_wins << " of " << summary.n_seeds << " seeds.\n";
  return md.str();
}

std::string protocol_to_json(const ProtocolSummary& summary) {
  Json runs = Json::array();
  for (const auto& r : summary.runs) {
    runs.push_back({{"architecture", std::string(to_string(r.architecture))},
                    {"seed", r.seed},
                    {"strict_accuracy", r.report.overall.strict_accuracy()},
                    {"partial_accuracy", r.report.overall.partial_accuracy()},
                    {"support", r.report.overall.support},
                    {"final_train_loss", r.final_train_loss},
                    {"epochs_run", r.epochs_run},
                    {"seconds", r.seconds}});
  }
  Json j = {{"n_seeds", summary.n_seeds},
            {"runs", runs},
            {"mean",
             {{"word", {{"strict_accuracy", summary.word_only_mean_strict},
                        {"partial_accuracy", summary.word_only_mean_partial}}},
              {"wordchar", {{"strict_accuracy", summary.word_char_mean_strict},
                            {"partial_accuracy", summary.word_char_mean_partial}}}}},
            {"wordchar_wins", summary.word_char_wins}};
  return j.dump(2) + "\n";
}

}  // namespace namerec
