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

// Shared helpers for the test binaries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sys/wait.h>
#include <string>
#include <vector>

#include "g2p/g2p.hpp"

namespace g2p::testing {

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("g2p_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // "param[index]"
  std::size_t checked = 0;
};

/// Compares reverse-mode gradients of `loss(tape)` with respect to `params`
/// against central differences with step `h`. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8).
inline GradCheck check_gradients(const std::vector<std::pair<std::string, nn::Tensor>>& params,
                                 const std::function<nn::Tensor(nn::Tape&)>& loss, double h = 1e-5) {
  for (const auto& [_, p] : params) {
    p.zero_grad();
  }
  {
    nn::Tape tape;
    tape.backward(loss(tape));
  }
  auto value = [&] {
    nn::Tape tape(false);
    return loss(tape).item();
  };
  GradCheck out;
  for (const auto& [name, p] : params) {
    const auto grad = p.grad();
    auto data = const_cast<nn::Tensor&>(p).data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + h;
      const double up = value();
      data[i] = keep - h;
      const double down = value();
      data[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad[i];
      const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      ++out.checked;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic) + " numeric " +
                    std::to_string(numeric);
      }
    }
  }
  return out;
}

/// Single-character symbols "a", "b", ... (or "A", "B", ...).
inline std::vector<std::string> letters(std::size_t n, char first = 'a') {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(1, static_cast<char>(first + i));
  return out;
}

/// Vocabularies with `graphemes` letters, `phones` upper-case phones and
/// `locales` locale tags l0, l1, ...
inline Vocabularies toy_vocab(std::size_t graphemes, std::size_t phones, std::size_t locales) {
  Vocabularies v;
  auto g = letters(graphemes, 'a');
  auto p = letters(phones, 'A');
  v.graphemes = SymbolTable::with_reserved({g.begin(), g.end()});
  v.phonemes = SymbolTable::with_reserved({p.begin(), p.end()});
  std::vector<std::string> tags;
  for (std::size_t i = 0; i < locales; ++i) tags.push_back("l" + std::to_string(i));
  v.locales = SymbolTable::plain(tags);
  return v;
}

/// Randomly initialized model over toy vocabularies.
inline Model toy_model(std::size_t graphemes, std::size_t phones, std::size_t locales, ModelConfig cfg) {
  Vocabularies v = toy_vocab(graphemes, phones, locales);
  cfg = with_vocab(cfg, v);
  cfg.validate();
  return Model{cfg, v, init_params(cfg)};
}

inline ModelConfig small_config(Conditioning c = Conditioning::system_id, std::uint64_t seed = 1) {
  ModelConfig cfg;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 6;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.system_id_dim = 3;
  cfg.dropout = 0.0;
  cfg.init_range = 0.5;
  cfg.conditioning = c;
  cfg.seed = seed;
  return cfg;
}

/// Random example over a toy model's vocabularies.
inline Example random_example(const Model& m, Rng& rng, std::size_t max_src = 6, std::size_t max_tgt = 6) {
  Example e;
  const auto ng = m.config.grapheme_vocab - SymbolTable::kReserved;
  const auto np = m.config.phoneme_vocab - SymbolTable::kReserved;
  const auto src = 1 + draw_below(rng, max_src);
  const auto tgt = 1 + draw_below(rng, max_tgt);
  for (std::size_t i = 0; i < src; ++i) e.graphemes.push_back(SymbolTable::kReserved + static_cast<int>(draw_below(rng, ng)));
  for (std::size_t i = 0; i < tgt; ++i) e.phonemes.push_back(SymbolTable::kReserved + static_cast<int>(draw_below(rng, np)));
  if (uses_system_id(m.config.conditioning)) e.system_id = static_cast<int>(draw_below(rng, m.config.num_locales));
  if (uses_language_id(m.config.conditioning)) {
    std::vector<double> w(m.config.num_locales);
    double t = 0.0;
    for (auto& x : w) t += (x = 0.1 + draw_unit(rng));
    for (auto& x : w) x /= t;
    e.language = w;
  }
  return e;
}

inline LexiconEntry entry(const std::string& word, const std::string& pron, const std::string& locale) {
  return {utf8::graphemes(word), split_ws(pron), locale};
}

/// Runs a shell command, returning its exit status.
inline int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace g2p::testing
