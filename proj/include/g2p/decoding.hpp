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

// Beam-search n-best decoding, batched greedy decoding and the
// average-posterior gate that picks up to three pronunciations.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "g2p/errors.hpp"
#include "g2p/model.hpp"

namespace g2p {

struct Hypothesis {
  std::vector<int> phonemes;  // vocabulary indices, no BOS, EOS not included
  std::vector<int> emitted;   // output classes as emitted, EOS (class 0) included when terminated
  double log_prob = 0.0;      // sum of log posteriors of the emitted classes
  double avg_posterior = 0.0; // mean posterior of the emitted classes
  bool terminated = false;    // true once EOS was emitted (always, given the forced final EOS)
};

struct BeamConfig {
  std::size_t beam_width = 5;
  std::size_t max_output_length = 0;  // phones per hypothesis; 0 selects 2 * source length + 5
  double threshold_2best = 0.25;
  double threshold_3best = 0.18;
  bool cascade = true;  // the third hypothesis requires the second

  void validate() const {
    if (beam_width < 1) throw ContractError("BeamConfig: beam_width must be >= 1");
    if (!(threshold_2best > 0.0 && threshold_2best < 1.0) || !(threshold_3best > 0.0 && threshold_3best < 1.0)) {
      throw ContractError("BeamConfig: thresholds must lie in (0, 1)");
    }
  }

  std::size_t max_length_for(std::size_t source_length) const {
    return max_output_length ? max_output_length : 2 * source_length + 5;
  }
};

/// What a decoder needs to know about one word.
struct DecodeInput {
  std::vector<int> graphemes;
  int system_id = -1;
  std::vector<double> language;
};

inline DecodeInput decode_input_of(const Example& e) { return {e.graphemes, e.system_id, e.language}; }

/// Ranking used for beam candidates and final hypotheses: higher
/// log-probability first, then shorter, then lexicographically smaller
/// class sequence.
inline bool ranks_before(double lp_a, const std::vector<int>& a, double lp_b, const std::vector<int>& b) {
  if (lp_a != lp_b) return lp_a > lp_b;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

inline void sort_hypotheses(std::vector<Hypothesis>& hyps) {
  std::sort(hyps.begin(), hyps.end(), [](const Hypothesis& x, const Hypothesis& y) {
    return ranks_before(x.log_prob, x.emitted, y.log_prob, y.emitted);
  });
}

namespace detail {

inline ConditioningInputs conditioning_for(const ModelConfig& cfg, std::span<const DecodeInput* const> rows) {
  ConditioningInputs in;
  for (const auto* r : rows) {
    if (uses_system_id(cfg.conditioning)) {
      if (r->system_id < 0) throw ContractError("decoding input lacks a system ID");
      in.system_ids.push_back(r->system_id);
    }
    if (uses_language_id(cfg.conditioning)) {
      if (r->language.empty()) throw ContractError("decoding input lacks a language-ID vector");
      in.language.push_back(r->language);
    }
  }
  return in;
}

inline DecoderState gather_state(Tape& tape, const DecoderState& s, std::span<const int> rows) {
  DecoderState out;
  for (const auto& l : s.layers) out.layers.push_back({nn::gather_rows(tape, l.h, rows), nn::gather_rows(tape, l.c, rows)});
  out.context = nn::gather_rows(tape, s.context, rows);
  return out;
}

inline Hypothesis finish(std::vector<int> emitted, double log_prob, double posterior_sum, bool terminated) {
  Hypothesis h;
  for (int c : emitted) {
    if (c != class_of_token(SymbolTable::kEos)) h.phonemes.push_back(token_of_class(c));
  }
  h.avg_posterior = posterior_sum / static_cast<double>(emitted.size());
  h.emitted = std::move(emitted);
  h.log_prob = log_prob;
  h.terminated = terminated;
  return h;
}

}  // namespace detail

/// Standard beam search. Every step expands all live paths over every
/// output class and keeps the beam_width best candidates; candidates ending
/// in EOS are finalized. Once a path holds max_output_length phones its only
/// continuation is EOS, so every hypothesis is terminated. Stops once
/// beam_width hypotheses are finalized or no path is live.
inline std::vector<Hypothesis> beam_search(const Model& model, const DecodeInput& input, const BeamConfig& bcfg) {
  bcfg.validate();
  if (input.graphemes.empty()) throw ContractError("beam_search: empty input");
  const auto& cfg = model.config;
  Tape tape(false);
  const DecodeInput* row = &input;
  auto enc1 = encode(tape, model.params, cfg, {input.graphemes});
  auto cond1 = conditioning_features(tape, model.params, cfg, detail::conditioning_for(cfg, {&row, 1}), 1);
  DecoderState state = initial_decoder_state(tape, model.params, cfg, enc1);
  const std::size_t max_len = bcfg.max_length_for(input.graphemes.size());
  const int eos = class_of_token(SymbolTable::kEos);

  struct Path {
    std::vector<int> emitted;
    double log_prob = 0.0;
    double posterior_sum = 0.0;
  };
  std::vector<Path> live(1);
  std::vector<Hypothesis> finals;

  for (std::size_t step = 1; step <= max_len + 1 && !live.empty() && finals.size() < bcfg.beam_width; ++step) {
    const bool eos_only = step == max_len + 1;
    const std::size_t k = live.size();
    auto enc = replicate_row(tape, enc1, 0, k);
    std::vector<int> zeros(k, 0);
    Tensor cond = cond1.defined() ? nn::gather_rows(tape, cond1, zeros) : Tensor();
    std::vector<int> prev(k);
    for (std::size_t i = 0; i < k; ++i) {
      prev[i] = live[i].emitted.empty() ? SymbolTable::kBos : token_of_class(live[i].emitted.back());
    }
    auto out = decode_step(tape, model.params, cfg, prev, state, enc, cond);
    auto probs = step_distribution(tape, out);
    const std::size_t V = probs.cols();

    struct Candidate {
      std::size_t parent;
      int cls;
      double log_prob;
    };
    std::vector<Candidate> cands;
    cands.reserve(k * V);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t c = 0; c < (eos_only ? 1 : V); ++c) {
        cands.push_back({i, static_cast<int>(c), live[i].log_prob + std::log(probs.at(i, c))});
      }
    }
    auto before = [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      const auto& pa = live[a.parent].emitted;
      const auto& pb = live[b.parent].emitted;
      if (pa != pb) return pa < pb;
      return a.cls < b.cls;
    };
    const std::size_t keep = std::min(bcfg.beam_width, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), before);

    std::vector<Path> next;
    std::vector<int> parents;
    for (std::size_t r = 0; r < keep; ++r) {
      const auto& cand = cands[r];
      Path p = live[cand.parent];
      p.emitted.push_back(cand.cls);
      p.log_prob = cand.log_prob;
      p.posterior_sum += probs.at(cand.parent, static_cast<std::size_t>(cand.cls));
      if (cand.cls == eos) {
        finals.push_back(detail::finish(std::move(p.emitted), p.log_prob, p.posterior_sum, true));
      } else {
        next.push_back(std::move(p));
        parents.push_back(static_cast<int>(cand.parent));
      }
    }
    live = std::move(next);
    if (!live.empty()) state = detail::gather_state(tape, out.state, parents);
  }
  sort_hypotheses(finals);
  return finals;
}

/// Greedy (argmax, lowest class on ties) decoding of many words at once,
/// with EOS forced after max_output_length phones. Each row's result equals
/// decoding that word alone.
inline std::vector<Hypothesis> greedy_decode(const Model& model, const std::vector<DecodeInput>& inputs,
                                             const BeamConfig& bcfg = {}) {
  if (inputs.empty()) return {};
  const auto& cfg = model.config;
  const std::size_t B = inputs.size();
  Tape tape(false);
  std::vector<std::vector<int>> sources;
  std::vector<const DecodeInput*> rows;
  std::vector<std::size_t> max_len(B);
  std::size_t steps = 0;
  for (std::size_t b = 0; b < B; ++b) {
    if (inputs[b].graphemes.empty()) throw ContractError("greedy_decode: empty input");
    sources.push_back(inputs[b].graphemes);
    rows.push_back(&inputs[b]);
    max_len[b] = bcfg.max_length_for(inputs[b].graphemes.size()) + 1;
    steps = std::max(steps, max_len[b]);
  }
  auto enc = encode(tape, model.params, cfg, sources);
  auto cond = conditioning_features(tape, model.params, cfg, detail::conditioning_for(cfg, rows), B);
  auto state = initial_decoder_state(tape, model.params, cfg, enc);
  const int eos = class_of_token(SymbolTable::kEos);

  std::vector<std::vector<int>> emitted(B);
  std::vector<double> lp(B, 0.0), psum(B, 0.0);
  std::vector<bool> done(B, false);
  std::vector<int> prev(B, SymbolTable::kBos);
  std::size_t remaining = B;
  for (std::size_t step = 1; step <= steps && remaining > 0; ++step) {
    auto out = decode_step(tape, model.params, cfg, prev, state, enc, cond);
    auto probs = step_distribution(tape, out);
    for (std::size_t b = 0; b < B; ++b) {
      if (done[b]) continue;
      std::size_t best = 0;
      for (std::size_t c = 1; c < probs.cols() && step < max_len[b]; ++c) {
        if (probs.at(b, c) > probs.at(b, best)) best = c;
      }
      const double p = probs.at(b, best);
      emitted[b].push_back(static_cast<int>(best));
      lp[b] += std::log(p);
      psum[b] += p;
      prev[b] = token_of_class(static_cast<int>(best));
      if (static_cast<int>(best) == eos || step == max_len[b]) {
        done[b] = true;
        --remaining;
      }
    }
    state = std::move(out.state);
  }
  std::vector<Hypothesis> result;
  result.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    const bool terminated = !emitted[b].empty() && emitted[b].back() == eos;
    result.push_back(detail::finish(std::move(emitted[b]), lp[b], psum[b], terminated));
  }
  return result;
}

/// Greedy decoding in chunks of `batch_size` rows.
inline std::vector<Hypothesis> greedy_decode_batched(const Model& model, const std::vector<DecodeInput>& inputs,
                                                     std::size_t batch_size, const BeamConfig& bcfg = {}) {
  if (batch_size < 1) throw ContractError("batch size must be >= 1");
  std::vector<Hypothesis> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); i += batch_size) {
    std::vector<DecodeInput> chunk(inputs.begin() + static_cast<std::ptrdiff_t>(i),
                                   inputs.begin() + static_cast<std::ptrdiff_t>(std::min(inputs.size(), i + batch_size)));
    for (auto& h : greedy_decode(model, chunk, bcfg)) out.push_back(std::move(h));
  }
  return out;
}

/// Keeps the best hypothesis, the second when its average posterior reaches
/// threshold_2best, and the third when it reaches threshold_3best (and, in
/// cascade mode, the second was kept).
inline std::vector<Hypothesis> select_nbest(const std::vector<Hypothesis>& ranked, const BeamConfig& bcfg) {
  if (ranked.empty()) throw ContractError("select_nbest: no hypotheses");
  std::vector<Hypothesis> out{ranked[0]};
  bool second = false;
  if (ranked.size() > 1 && ranked[1].avg_posterior >= bcfg.threshold_2best) {
    out.push_back(ranked[1]);
    second = true;
  }
  if (ranked.size() > 2 && (second || !bcfg.cascade) && ranked[2].avg_posterior >= bcfg.threshold_3best) {
    out.push_back(ranked[2]);
  }
  return out;
}

/// Maps a word onto grapheme indices; nullopt names the first unknown
/// grapheme through `unknown`.
inline std::optional<std::vector<int>> grapheme_indices(const Vocabularies& v, const std::vector<std::string>& word,
                                                        std::string* unknown = nullptr) {
  std::vector<int> ids;
  for (const auto& g : word) {
    const int id = v.graphemes.find(g);
    if (id < SymbolTable::kReserved) {
      if (unknown) *unknown = g;
      return std::nullopt;
    }
    ids.push_back(id);
  }
  return ids;
}

inline std::vector<std::string> phone_strings(const Vocabularies& v, const std::vector<int>& phonemes) {
  std::vector<std::string> out;
  for (int p : phonemes) out.push_back(v.phonemes.symbol(p));
  return out;
}

}  // namespace g2p
