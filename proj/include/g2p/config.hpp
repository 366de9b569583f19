// Copyright (c) 2026 The g2p-multilingual Authors. All Rights Reserved.
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

// Flat key-value run configuration shared by every CLI command.
// Precedence: explicit overrides > config file > built-in defaults.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "g2p/corpus.hpp"
#include "g2p/decoding.hpp"
#include "g2p/errors.hpp"
#include "g2p/model.hpp"
#include "g2p/training.hpp"

namespace g2p {

class RunConfig {
 public:
  struct Key {
    std::string name;
    std::string value;
    std::string doc;
  };

  RunConfig() {
    const FilterConfig f;
    const ModelConfig m;
    const TrainConfig t;
    const BeamConfig b;
    define("seed", "1", "seed for partitioning, initialization, batching and dropout");
    define("threads", "1", "worker threads for evaluation and prediction");
    define("min_grapheme_count", std::to_string(f.min_grapheme_count), "drop entries with rarer graphemes");
    define("min_phoneme_count", std::to_string(f.min_phoneme_count), "drop entries with rarer phones");
    define("block_size", std::to_string(f.block_size), "distinct words per partitioning block");
    define("split_train", detail::fmt_double(f.split_ratios[0]), "fraction of blocks for training");
    define("split_dev", detail::fmt_double(f.split_ratios[1]), "fraction of blocks for development");
    define("split_test", detail::fmt_double(f.split_ratios[2]), "fraction of blocks for testing");
    define("lang_dist_mode", "count", "language-ID vector: count, log-count or multi-hot");
    define("system", "1", "conditioning: 0 none, 1 system ID, 2 system ID + language ID");
    define("embed_dim", std::to_string(m.embed_dim), "grapheme/phoneme embedding width");
    define("hidden_dim", std::to_string(m.hidden_dim), "LSTM hidden width");
    define("encoder_layers", std::to_string(m.encoder_layers), "stacked bidirectional encoder layers");
    define("decoder_layers", std::to_string(m.decoder_layers), "stacked decoder layers");
    define("system_id_dim", std::to_string(m.system_id_dim), "system-ID embedding width");
    define("dropout", detail::fmt_double(m.dropout), "dropout between stacked layers");
    define("init_range", detail::fmt_double(m.init_range), "uniform initialization half-width");
    define("batch_size", std::to_string(t.batch_size), "training batch size");
    define("max_epochs", std::to_string(t.max_epochs), "epoch limit");
    define("learning_rate", detail::fmt_double(t.learning_rate), "Adam step size");
    define("clip_norm", detail::fmt_double(t.clip_norm), "global gradient-norm clip");
    define("early_stop_patience", std::to_string(t.early_stop_patience), "non-improving dev evaluations tolerated");
    define("eval_every", std::to_string(t.eval_every), "epochs between dev evaluations");
    define("max_dev_words", "0", "cap on dev entries per evaluation, 0 for all");
    define("beam_width", std::to_string(b.beam_width), "beam width");
    define("max_output_length", std::to_string(b.max_output_length), "phones per hypothesis, 0 for 2*input+5");
    define("threshold_2best", detail::fmt_double(b.threshold_2best), "average posterior needed for a 2nd hypothesis");
    define("threshold_3best", detail::fmt_double(b.threshold_3best), "average posterior needed for a 3rd hypothesis");
    define("nbest_cascade", "true", "3rd hypothesis only when the 2nd was kept");
  }

  const std::vector<std::string>& keys() const { return order_; }
  const std::string& doc(const std::string& key) const { return entry(key).doc; }
  const std::string& get(const std::string& key) const { return entry(key).value; }
  bool has(const std::string& key) const { return keys_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    if (!has(key)) throw ContractError("unknown config key '" + key + "'");
    keys_[key].value = value;
  }

  /// Reads `key = value` lines; '#' starts a comment.
  void merge_text(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto t = trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError(source + ":" + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key(trim(t.substr(0, eq)));
      const std::string value(trim(t.substr(eq + 1)));
      if (!has(key)) throw ParseError(source + ":" + std::to_string(lineno) + ": unknown config key '" + key + "'");
      set(key, value);
    }
  }

  void merge_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ContractError("cannot open config " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    merge_text(ss.str(), p.string());
  }

  /// Effective configuration in a form merge_text reads back.
  std::string snapshot() const {
    std::ostringstream os;
    for (const auto& k : order_) os << k << " = " << keys_.at(k).value << '\n';
    return os.str();
  }

  void write_snapshot(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    detail::write_file(dir / "config.txt", snapshot());
  }

  std::uint64_t u64(const std::string& k) const {
    try {
      std::size_t pos = 0;
      const auto& v = get(k);
      if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
      auto x = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::logic_error&) {
      throw ContractError("config key '" + k + "' needs a non-negative integer, got '" + get(k) + "'");
    }
  }
  std::size_t size(const std::string& k) const { return static_cast<std::size_t>(u64(k)); }
  double real(const std::string& k) const {
    try {
      std::size_t pos = 0;
      auto x = std::stod(get(k), &pos);
      if (pos != get(k).size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::logic_error&) {
      throw ContractError("config key '" + k + "' needs a number, got '" + get(k) + "'");
    }
  }
  bool flag(const std::string& k) const {
    const auto& v = get(k);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ContractError("config key '" + k + "' needs true/false, got '" + v + "'");
  }

  FilterConfig filter() const {
    FilterConfig f;
    f.min_grapheme_count = size("min_grapheme_count");
    f.min_phoneme_count = size("min_phoneme_count");
    f.block_size = size("block_size");
    f.split_ratios = {real("split_train"), real("split_dev"), real("split_test")};
    f.validate();
    return f;
  }

  LangDistMode lang_dist_mode() const { return parse_lang_dist_mode(get("lang_dist_mode")); }

  Conditioning conditioning() const {
    const auto s = size("system");
    if (s > 2) throw ContractError("system must be 0, 1 or 2");
    return static_cast<Conditioning>(s);
  }

  ModelConfig model() const {
    ModelConfig m;
    m.embed_dim = size("embed_dim");
    m.hidden_dim = size("hidden_dim");
    m.encoder_layers = size("encoder_layers");
    m.decoder_layers = size("decoder_layers");
    m.system_id_dim = size("system_id_dim");
    m.conditioning = conditioning();
    m.dropout = real("dropout");
    m.init_range = real("init_range");
    m.seed = mix_seed(u64("seed"), 1);
    return m;
  }

  TrainConfig train() const {
    TrainConfig t;
    t.batch_size = size("batch_size");
    t.max_epochs = size("max_epochs");
    t.learning_rate = real("learning_rate");
    t.clip_norm = real("clip_norm");
    t.early_stop_patience = size("early_stop_patience");
    t.eval_every = size("eval_every");
    t.seed = mix_seed(u64("seed"), 2);
    t.validate();
    return t;
  }

  BeamConfig beam() const {
    BeamConfig b;
    b.beam_width = size("beam_width");
    b.max_output_length = size("max_output_length");
    b.threshold_2best = real("threshold_2best");
    b.threshold_3best = real("threshold_3best");
    b.cascade = flag("nbest_cascade");
    b.validate();
    return b;
  }

 private:
  void define(const std::string& k, const std::string& v, const std::string& doc) {
    order_.push_back(k);
    keys_[k] = {k, v, doc};
  }
  const Key& entry(const std::string& k) const {
    auto it = keys_.find(k);
    if (it == keys_.end()) throw ContractError("unknown config key '" + k + "'");
    return it->second;
  }

  std::vector<std::string> order_;
  std::map<std::string, Key> keys_;
};

}  // namespace g2p
