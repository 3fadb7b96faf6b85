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

#include "namerec/cli.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "namerec/curation.h"
#include "namerec/errors.h"
#include "namerec/text.h"
#include "namerec/training.h"

namespace namerec {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr double kGradcheckTolerance = 1e-4;

struct Options {
  // build-data
  std::string names;
  std::string templates;
  std::string out;
  double test_fraction = 0.2;
  bool allow_nameless = false;
  double nameless_ratio = 0.25;
  bool synthetic = false;
  size_t countries = 12;
  size_t names_per_country = 300;
  size_t n_templates = 2000;
  // training
  std::string train;
  std::string dev;
  std::string test;
  std::string arch = "wordchar";
  size_t epochs = 30;
  size_t batch_size = 32;
  double lr = 0.001;
  size_t patience = 3;
  size_t max_word_len = kDefaultMaxWordLen;
  std::string checkpoint;
  // evaluation / prediction
  std::string report;
  size_t top_k = 20;
  std::string input = "-";
  // protocol
  size_t n_seeds = 5;
  size_t threads = 1;
  // shared
  uint64_t seed = 42;
  double tolerance = kGradcheckTolerance;
};

// Exits with code 2 naming the path when an input is missing.
void require_inputs(std::initializer_list<const std::string*> paths) {
  for (const std::string* p : paths) {
    if (p->empty() || *p == "-") continue;
    if (!fs::exists(*p)) throw DataError("input file not found: " + *p);
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.architecture = parse_architecture(o.arch);
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.adam.lr = o.lr;
  c.seed = o.seed;
  c.early_stop_patience = o.patience;
  c.max_word_len = o.max_word_len;
  c.validate();
  return c;
}

EpochObserver epoch_logger(std::ostream& err) {
  return [&err](const EpochStats& s) {
    char buf[160];
    if (s.dev_loss) {
      std::snprintf(buf, sizeof(buf), "[%s seed %llu] epoch %zu train_loss %.6f dev_loss %.6f (%.1fs)",
                    std::string(to_string(s.architecture)).c_str(), static_cast<unsigned long long>(s.seed), s.epoch,
                    s.train_loss, *s.dev_loss, s.seconds);
    } else {
      std::snprintf(buf, sizeof(buf), "[%s seed %llu] epoch %zu train_loss %.6f (%.1fs)",
                    std::string(to_string(s.architecture)).c_str(), static_cast<unsigned long long>(s.seed), s.epoch,
                    s.train_loss, s.seconds);
    }
    err << buf << std::endl;
  };
}

int run_build_data(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<NameRecord> pool;
  std::vector<Template> templates;
  const fs::path dir(o.out);
  fs::create_directories(dir);
  if (o.synthetic) {
    SyntheticSpec spec;
    spec.countries = o.countries;
    spec.n_names_per_country = o.names_per_country;
    spec.n_templates = o.n_templates;
    spec.seed = o.seed;
    SyntheticCorpus corpus = generate_synthetic_corpus(spec);
    pool = std::move(corpus.names);
    templates = std::move(corpus.templates);
    write_name_pool(dir / "names.csv", pool);
    write_templates(dir / "templates.jsonl", templates);
  } else {
    if (o.names.empty() || o.templates.empty()) {
      throw ContractError("build-data needs --names and --templates (or --synthetic)");
    }
    NamePoolLoad load = load_name_pool(o.names);
    for (const auto& p : load.rejected_rows) err << o.names << ":" << p.line << ": skipped row: " << p.message << "\n";
    pool = std::move(load.records);
    templates = load_templates(o.templates);
  }

  CurationConfig config;
  config.test_fraction = o.test_fraction;
  config.seed = o.seed;
  config.allow_nameless = o.allow_nameless;
  config.nameless_ratio = o.nameless_ratio;
  CurationReport report;
  const DatasetSplit split = run_curation(pool, templates, config, &report);
  write_dataset(dir / "train.jsonl", split.train);
  write_dataset(dir / "test.jsonl", split.test);

  Json j = {{"names_in", report.names_in},
            {"names_rejected", report.names_rejected},
            {"full_names", report.full_names},
            {"first_only_names", report.first_only_names},
            {"utterances", report.utterances},
            {"nameless_utterances", report.nameless_utterances},
            {"cross_tagged_spans", report.cross_tagged},
            {"duplicates_dropped", report.split.duplicates_dropped},
            {"linked_utterances", report.split.linked},
            {"train", report.split.train_size},
            {"test", report.split.test_size},
            {"warnings", report.warnings},
            {"split_warnings", report.split.warnings}};
  write_file(dir / "curation_report.json", j.dump(2) + "\n");
  for (const auto& w : report.split.warnings) err << "warning: " << w << "\n";
  out << "wrote " << split.train.size() << " train and " << split.test.size() << " test utterances to "
      << dir.string() << "\n";
  return kExitOk;
}

int run_train(const Options& o, std::ostream& out, std::ostream& err) {
  require_inputs({&o.train, &o.dev});
  const TrainConfig config = train_config(o);
  const auto train = read_dataset(o.train);
  std::vector<TaggedUtterance> dev;
  if (!o.dev.empty()) dev = read_dataset(o.dev);
  size_t truncated = 0;
  for (const auto& u : train) {
    for (const auto& token : u.tokens) truncated += utf8_chars(token).size() > config.max_word_len ? 1 : 0;
  }
  if (truncated > 0) {
    err << truncated << " training tokens longer than " << config.max_word_len << " characters are truncated\n";
  }
  const ModelCheckpoint ckpt = train_model(config, train, dev, epoch_logger(err));
  save_checkpoint(ckpt, o.checkpoint);
  out << "saved " << to_string(config.architecture) << " checkpoint to " << o.checkpoint << " after "
      << ckpt.train_loss_history.size() << " epochs (final train loss " << ckpt.train_loss_history.back() << ")\n";
  return kExitOk;
}

int run_evaluate(const Options& o, std::ostream& out, std::ostream&) {
  require_inputs({&o.checkpoint, &o.test});
  std::optional<Architecture> expected;
  if (!o.arch.empty()) expected = parse_architecture(o.arch);
  const ModelCheckpoint ckpt = load_checkpoint(o.checkpoint, expected);
  const auto test = read_dataset(o.test);
  const EvalReport report = evaluate(ckpt, test, o.top_k);
  if (!o.report.empty()) write_report(report, o.report);
  out << render_summary_markdown(report);
  return kExitOk;
}

int run_predict(const Options& o, std::istream& in, std::ostream& out, std::ostream&) {
  require_inputs({&o.checkpoint, &o.input});
  const ModelCheckpoint ckpt = load_checkpoint(o.checkpoint);
  std::ifstream file;
  std::istream* source = &in;
  if (o.input != "-") {
    file.open(o.input, std::ios::binary);
    if (!file) throw DataError("cannot open " + o.input);
    source = &file;
  }
  std::vector<std::string> lines;
  std::vector<std::vector<std::string>> tokens;
  std::string line;
  while (std::getline(*source, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
    tokens.push_back(tokenize(line));
  }
  const auto tags = predict_tokens(ckpt, tokens);
  for (size_t i = 0; i < lines.size(); ++i) {
    Json names = Json::array();
    for (const Span& s : extract_spans(tokens[i], tags[i])) {
      names.push_back({{"text", s.text}, {"start", s.start}, {"end", s.end}});
    }
    Json j = {{"text", lines[i]}, {"names", names}};
    out << j.dump() << "\n";
  }
  return kExitOk;
}

int run_gradcheck_cmd(const Options& o, std::ostream& out, std::ostream&) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<GradcheckEntry> entries = run_gradcheck(o.seed);
  double worst = 0.0;
  for (const auto& e : entries) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-9s %-16s %7zu  max_rel_error %.3e", std::string(to_string(e.architecture)).c_str(),
                  e.parameter.c_str(), e.size, e.max_rel_error);
    out << buf << "\n";
    worst = std::max(worst, e.max_rel_error);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max rel. error %.3e (tolerance %.1e) in %.1fs", worst, o.tolerance, secs);
  out << buf << "\n";
  if (!(worst <= o.tolerance)) throw NumericalError("gradient check failed: max rel. error " + std::to_string(worst));
  out << "gradcheck passed\n";
  return kExitOk;
}

int run_protocol_cmd(const Options& o, std::ostream& out, std::ostream& err) {
  require_inputs({&o.train, &o.test});
  TrainConfig config = train_config(o);
  const auto train = read_dataset(o.train);
  const auto test = read_dataset(o.test);
  const ProtocolSummary summary = run_protocol(config, o.n_seeds, train, test, o.threads, epoch_logger(err));
  const std::string md = render_protocol_markdown(summary);
  if (!o.report.empty()) {
    fs::create_directories(o.report);
    write_file(fs::path(o.report) / "protocol.md", md);
    write_file(fs::path(o.report) / "protocol.json", protocol_to_json(summary));
  }
  out << md;
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app("Person-name recognition: corpus curation, BiLSTM training and span-level evaluation.", "namerec");
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str();
  };
  auto add_train_flags = [&](CLI::App* sub) {
    sub->add_option("--arch", o.arch, "Architecture: word or wordchar")
        ->check(CLI::IsMember({"word", "wordchar"}))
        ->capture_default_str();
    sub->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
    sub->add_option("--batch-size", o.batch_size, "Utterances per batch")->capture_default_str();
    sub->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    sub->add_option("--max-word-len", o.max_word_len, "Characters kept per word")->capture_default_str();
    add_seed(sub);
  };

  CLI::App* build = app.add_subcommand("build-data", "Curate train/test splits from a name pool and templates");
  build->add_option("--names", o.names, "Name pool CSV (name,kind,gender,country)");
  build->add_option("--templates", o.templates, "Template JSON Lines file");
  build->add_option("--out", o.out, "Output directory")->required();
  build->add_option("--test-fraction", o.test_fraction, "Share of utterances placed in test")->capture_default_str();
  build->add_flag("--allow-nameless", o.allow_nameless, "Also emit utterances that contain no name");
  build->add_option("--nameless-ratio", o.nameless_ratio, "Nameless utterances per named one")->capture_default_str();
  build->add_flag("--synthetic", o.synthetic, "Generate a synthetic name pool and templates instead of reading files");
  build->add_option("--countries", o.countries, "Synthetic countries")->capture_default_str();
  build->add_option("--names-per-country", o.names_per_country, "Synthetic names per country")->capture_default_str();
  build->add_option("--n-templates", o.n_templates, "Synthetic templates")->capture_default_str();
  add_seed(build);

  CLI::App* train = app.add_subcommand("train", "Train a tagger and write a checkpoint");
  train->add_option("--train", o.train, "Training dataset (JSON Lines)")->required();
  train->add_option("--dev", o.dev, "Optional dev dataset for early stopping");
  train->add_option("--patience", o.patience, "Early-stopping patience in epochs")->capture_default_str();
  train->add_option("--checkpoint", o.checkpoint, "Checkpoint file to write")->required();
  add_train_flags(train);

  CLI::App* eval = app.add_subcommand("evaluate", "Score a checkpoint on a test set");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  eval->add_option("--test", o.test, "Test dataset (JSON Lines)")->required();
  eval->add_option("--report", o.report, "Directory for report.json, summary.md and countries.csv");
  eval->add_option("--top-k", o.top_k, "False positives to list")->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--arch", o.arch, "Fail unless the checkpoint has this architecture")
      ->check(CLI::IsMember({"word", "wordchar"}));

  CLI::App* predict = app.add_subcommand("predict", "Extract names from raw text lines");
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  predict->add_option("--input", o.input, "UTF-8 text file, one utterance per line; - for stdin")
      ->capture_default_str();

  CLI::App* grad = app.add_subcommand("gradcheck", "Finite-difference check of every model parameter");
  grad->add_option("--tolerance", o.tolerance, "Largest accepted relative error")->capture_default_str();
  add_seed(grad);

  CLI::App* protocol = app.add_subcommand("protocol", "Train and evaluate n seeds of both architectures");
  protocol->add_option("--train", o.train, "Training dataset (JSON Lines)")->required();
  protocol->add_option("--test", o.test, "Test dataset (JSON Lines)")->required();
  protocol->add_option("--n-seeds", o.n_seeds, "Models per architecture")->check(CLI::PositiveNumber)->capture_default_str();
  protocol->add_option("--threads", o.threads, "Parallel training runs")->check(CLI::PositiveNumber)->capture_default_str();
  protocol->add_option("--report", o.report, "Directory for protocol.md and protocol.json");
  add_train_flags(protocol);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  // evaluate's --arch has no default; the train default must not leak in.
  if (*eval && eval->count("--arch") == 0) o.arch.clear();

  try {
    if (*build) return run_build_data(o, out, err);
    if (*train) return run_train(o, out, err);
    if (*eval) return run_evaluate(o, out, err);
    if (*predict) return run_predict(o, in, out, err);
    if (*grad) return run_gradcheck_cmd(o, out, err);
    if (*protocol) return run_protocol_cmd(o, out, err);
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int dispatch(const std::vector<std::string>& args) { return dispatch(args, std::cin, std::cout, std::cerr); }

}  // namespace namerec
