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

// Attention encoder-decoder for grapheme-to-phoneme conversion.
//
// Graphemes are embedded and run through a stack of bidirectional LSTM
// layers whose forward/backward outputs are concatenated per layer. An LSTM
// decoder with input feeding attends over the top encoder layer using
// bilinear ("general") scores. Before the output projection the decoder
// state and attention context are concatenated with the system-ID
// embedding and the raw language-ID vector, depending on the conditioning
// mode.
//
// Output classes are phoneme-vocabulary indices shifted down by
// SymbolTable::kEos, so class 0 is end-of-sequence and padding/BOS are never
// predicted.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "g2p/corpus.hpp"
#include "g2p/errors.hpp"
#include "g2p/numerics.hpp"
#include "g2p/util.hpp"

namespace g2p {

using nn::Tape;
using nn::Tensor;

/// System 0, 1 and 2 of the ablation.
enum class Conditioning { none = 0, system_id = 1, system_and_language_id = 2 };

inline bool uses_system_id(Conditioning c) { return c != Conditioning::none; }
inline bool uses_language_id(Conditioning c) { return c == Conditioning::system_and_language_id; }

struct ModelConfig {
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 1;
  std::size_t system_id_dim = 16;
  std::size_t num_locales = 0;
  std::size_t grapheme_vocab = 0;  // including reserved symbols
  std::size_t phoneme_vocab = 0;   // including reserved symbols
  Conditioning conditioning = Conditioning::system_id;
  double dropout = 0.2;
  double init_range = 0.08;
  std::uint64_t seed = 1;

  void validate() const {
    if (embed_dim < 1 || hidden_dim < 1 || encoder_layers < 1 || decoder_layers < 1 || system_id_dim < 1) {
      throw ContractError("ModelConfig: all dimensions must be >= 1");
    }
    if (grapheme_vocab <= SymbolTable::kReserved || phoneme_vocab <= SymbolTable::kReserved) {
      throw ContractError("ModelConfig: vocabularies must hold at least one non-reserved symbol");
    }
    if (uses_system_id(conditioning) && num_locales == 0) {
      throw ContractError("ModelConfig: locale conditioning requires num_locales > 0");
    }
    if (dropout < 0.0 || dropout >= 1.0) throw ContractError("ModelConfig: dropout must be in [0,1)");
    if (!(init_range > 0.0)) throw ContractError("ModelConfig: init_range must be positive");
  }

  /// End-of-sequence plus every real phone.
  std::size_t output_classes() const { return phoneme_vocab - SymbolTable::kEos; }

  std::size_t conditioning_width() const {
    return (uses_system_id(conditioning) ? system_id_dim : 0) +
           (uses_language_id(conditioning) ? num_locales : 0);
  }

  std::size_t projection_width() const { return 3 * hidden_dim + conditioning_width(); }
};

inline int class_of_token(int phoneme_index) { return phoneme_index - SymbolTable::kEos; }
inline int token_of_class(int output_class) { return output_class + SymbolTable::kEos; }

/// Named trainable tensors in a fixed order.
class ModelParams {
 public:
  void add(const std::string& name, Tensor t) {
    if (index_.count(name)) throw ContractError("duplicate parameter " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(t));
  }

  const Tensor& operator[](const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("no parameter named " + name);
    return items_[it->second].second;
  }
  Tensor& operator[](const std::string& name) {
    return const_cast<Tensor&>(static_cast<const ModelParams&>(*this)[name]);
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : items_) n += t.size();
    return n;
  }

  void zero_grad() {
    for (auto& [_, t] : items_) {
      t.grad();
      t.zero_grad();
    }
  }

  /// Deep copy; the clone shares no storage with this object.
  ModelParams clone() const {
    ModelParams p;
    for (const auto& [n, t] : items_) p.add(n, t.clone());
    return p;
  }

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::map<std::string, std::size_t> index_;
};

/// Parameter names and shapes implied by a config, in storage order.
inline std::vector<std::pair<std::string, nn::Shape>> parameter_layout(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t E = cfg.embed_dim, H = cfg.hidden_dim;
  std::vector<std::pair<std::string, nn::Shape>> out;
  out.push_back({"embed.grapheme", {cfg.grapheme_vocab, E}});
  out.push_back({"embed.phoneme", {cfg.phoneme_vocab, E}});
  if (uses_system_id(cfg.conditioning)) out.push_back({"embed.system", {cfg.num_locales, cfg.system_id_dim}});
  for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
    const std::size_t in = l == 0 ? E : 2 * H;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = "enc." + std::to_string(l) + "." + dir + ".";
      out.push_back({p + "W", {in, 4 * H}});
      out.push_back({p + "U", {H, 4 * H}});
      out.push_back({p + "b", {1, 4 * H}});
    }
  }
  for (std::size_t k = 0; k < cfg.decoder_layers; ++k) {
    const std::string b = "bridge." + std::to_string(k) + ".";
    out.push_back({b + "W", {H, H}});
    out.push_back({b + "b", {1, H}});
  }
  for (std::size_t k = 0; k < cfg.decoder_layers; ++k) {
    const std::size_t in = k == 0 ? E + 2 * H : H;
    const std::string p = "dec." + std::to_string(k) + ".";
    out.push_back({p + "W", {in, 4 * H}});
    out.push_back({p + "U", {H, 4 * H}});
    out.push_back({p + "b", {1, 4 * H}});
  }
  out.push_back({"attn.W", {H, 2 * H}});
  out.push_back({"out.W", {cfg.projection_width(), cfg.output_classes()}});
  out.push_back({"out.b", {1, cfg.output_classes()}});
  return out;
}

/// Uniform(-init_range, init_range) initialization from cfg.seed.
inline ModelParams init_params(const ModelConfig& cfg) {
  Rng rng(cfg.seed);
  ModelParams p;
  for (auto& [name, shape] : parameter_layout(cfg)) {
    Tensor t(shape, true);
    for (auto& v : t.data()) v = (2.0 * draw_unit(rng) - 1.0) * cfg.init_range;
    p.add(name, std::move(t));
  }
  return p;
}

struct LstmWeights {
  Tensor W;  // [in, 4H], gate blocks i|f|g|o
  Tensor U;  // [H, 4H]
  Tensor b;  // [1, 4H]
};

struct LstmState {
  Tensor h;  // [B, H]
  Tensor c;  // [B, H]
};

inline LstmWeights lstm_weights(const ModelParams& p, const std::string& prefix) {
  return {p[prefix + "W"], p[prefix + "U"], p[prefix + "b"]};
}

/// One LSTM transition:
///   i = sigmoid(x W_i + h U_i + b_i)   f = sigmoid(x W_f + h U_f + b_f)
///   g = tanh(x W_g + h U_g + b_g)      o = sigmoid(x W_o + h U_o + b_o)
///   c' = f * c + i * g                 h' = o * tanh(c')
inline LstmState lstm_step(Tape& tape, const Tensor& x, const LstmState& state, const LstmWeights& w) {
  const std::size_t H = w.U.rows();
  if (w.U.cols() != 4 * H || w.W.cols() != 4 * H || w.b.size() != 4 * H) {
    throw DimensionError("lstm_step: weights are not [*, 4H] for H=" + std::to_string(H));
  }
  if (x.cols() != w.W.rows()) {
    throw DimensionError("lstm_step: input " + nn::shape_str(x.shape()) + " does not match W " +
                         nn::shape_str(w.W.shape()));
  }
  if (state.h.cols() != H || state.c.cols() != H || state.h.rows() != x.rows() || state.c.rows() != x.rows()) {
    throw DimensionError("lstm_step: state shape does not match batch/hidden size");
  }
  auto gates = nn::add_bias(tape, nn::add(tape, nn::matmul(tape, x, w.W), nn::matmul(tape, state.h, w.U)), w.b);
  auto i = nn::sigmoid(tape, nn::slice_cols(tape, gates, 0, H));
  auto f = nn::sigmoid(tape, nn::slice_cols(tape, gates, H, H));
  auto g = nn::tanh(tape, nn::slice_cols(tape, gates, 2 * H, H));
  auto o = nn::sigmoid(tape, nn::slice_cols(tape, gates, 3 * H, H));
  auto c = nn::add(tape, nn::mul(tape, f, state.c), nn::mul(tape, i, g));
  auto h = nn::mul(tape, o, nn::tanh(tape, c));
  return {h, c};
}

inline LstmState zero_state(std::size_t batch, std::size_t hidden) {
  return {Tensor({batch, hidden}), Tensor({batch, hidden})};
}

struct EncoderOutput {
  std::vector<Tensor> states;      // one [B, 2H] tensor per source position
  std::vector<std::uint8_t> mask;  // [B * T], 1 where position < length
  std::vector<std::size_t> lengths;
  Tensor final_forward;            // [B, H] top forward state at each row's last position

  std::size_t batch() const { return lengths.size(); }
  std::size_t steps() const { return states.size(); }
};

namespace detail {

/// Steps one direction of one layer over all positions, freezing each
/// row's state outside its length.
inline std::vector<Tensor> run_direction(Tape& tape, const std::vector<Tensor>& inputs, const LstmWeights& w,
                                         const std::vector<std::size_t>& lengths, bool reverse,
                                         LstmState* final_state) {
  const std::size_t T = inputs.size(), B = lengths.size(), H = w.U.rows();
  std::vector<Tensor> outputs(T);
  LstmState state = zero_state(B, H);
  std::vector<std::uint8_t> keep(B);
  for (std::size_t step = 0; step < T; ++step) {
    const std::size_t t = reverse ? T - 1 - step : step;
    bool all = true;
    for (std::size_t b = 0; b < B; ++b) {
      keep[b] = t < lengths[b];
      all = all && keep[b];
    }
    LstmState next = lstm_step(tape, inputs[t], state, w);
    if (all) {
      state = next;
    } else {
      state = {nn::select_rows(tape, keep, next.h, state.h), nn::select_rows(tape, keep, next.c, state.c)};
    }
    outputs[t] = state.h;
  }
  if (final_state) *final_state = state;
  return outputs;
}

}  // namespace detail

/// Runs the bidirectional encoder over a batch of grapheme index sequences.
/// Sequences may differ in length; shorter rows are padded internally.
/// `dropout_rng` enables dropout between stacked layers (training only).
inline EncoderOutput encode(Tape& tape, const ModelParams& params, const ModelConfig& cfg,
                            const std::vector<std::vector<int>>& sources, Rng* dropout_rng = nullptr) {
  if (sources.empty()) throw ContractError("encode: empty batch");
  const std::size_t B = sources.size();
  EncoderOutput out;
  std::size_t T = 0;
  for (const auto& s : sources) {
    if (s.empty()) throw ContractError("encode: empty grapheme sequence");
    for (int g : s) {
      if (g < SymbolTable::kReserved || static_cast<std::size_t>(g) >= cfg.grapheme_vocab) {
        throw ContractError("encode: grapheme index " + std::to_string(g) + " is not a vocabulary symbol");
      }
    }
    out.lengths.push_back(s.size());
    T = std::max(T, s.size());
  }
  std::vector<Tensor> layer_in(T);
  std::vector<int> column(B);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b) column[b] = t < sources[b].size() ? sources[b][t] : SymbolTable::kPad;
    layer_in[t] = nn::gather_rows(tape, params["embed.grapheme"], column);
  }
  for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
    if (l > 0 && dropout_rng && cfg.dropout > 0.0) {
      for (auto& x : layer_in) x = nn::dropout(tape, x, cfg.dropout, *dropout_rng);
    }
    const std::string p = "enc." + std::to_string(l) + ".";
    LstmState fwd_final;
    auto fwd = detail::run_direction(tape, layer_in, lstm_weights(params, p + "fwd."), out.lengths, false, &fwd_final);
    auto bwd = detail::run_direction(tape, layer_in, lstm_weights(params, p + "bwd."), out.lengths, true, nullptr);
    for (std::size_t t = 0; t < T; ++t) layer_in[t] = nn::concat_cols(tape, {fwd[t], bwd[t]});
    if (l + 1 == cfg.encoder_layers) out.final_forward = fwd_final.h;
  }
  out.states = std::move(layer_in);
  out.mask.assign(B * T, 0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < out.lengths[b]; ++t) out.mask[b * T + t] = 1;
  }
  return out;
}

/// Repeats batch row `row` of an encoder output `copies` times. Beam search
/// uses this to run several hypotheses of one word side by side.
inline EncoderOutput replicate_row(Tape& tape, const EncoderOutput& enc, std::size_t row, std::size_t copies) {
  EncoderOutput out;
  const std::size_t T = enc.lengths[row];
  std::vector<int> idx(copies, static_cast<int>(row));
  for (std::size_t t = 0; t < T; ++t) out.states.push_back(nn::gather_rows(tape, enc.states[t], idx));
  out.mask.assign(copies * T, 1);
  out.lengths.assign(copies, T);
  out.final_forward = nn::gather_rows(tape, enc.final_forward, idx);
  return out;
}

struct Attention {
  Tensor context;  // [B, 2H]
  Tensor weights;  // [B, T]
};

/// Global attention with score(t, s) = h_t^T W_a H_s over unmasked source
/// positions.
inline Attention attend(Tape& tape, const Tensor& h, const EncoderOutput& enc, const Tensor& attn_w) {
  if (enc.states.empty()) throw ContractError("attend: empty encoder output");
  auto query = nn::matmul(tape, h, attn_w);
  std::vector<Tensor> scores;
  scores.reserve(enc.steps());
  for (const auto& s : enc.states) scores.push_back(nn::row_dot(tape, query, s));
  auto weights = nn::masked_softmax_rows(tape, nn::concat_cols(tape, scores), enc.mask);
  Tensor context;
  for (std::size_t t = 0; t < enc.steps(); ++t) {
    auto term = nn::scale_rows(tape, enc.states[t], nn::slice_cols(tape, weights, t, 1));
    context = context.defined() ? nn::add(tape, context, term) : term;
  }
  return {context, weights};
}

/// Locale inputs for a batch. system_ids must be present for Systems 1
/// and 2, language for System 2 only.
struct ConditioningInputs {
  std::vector<int> system_ids;
  std::vector<std::vector<double>> language;
};

/// Builds the [B, conditioning_width] block appended to every projection
/// input, or an undefined tensor under Conditioning::none.
inline Tensor conditioning_features(Tape& tape, const ModelParams& params, const ModelConfig& cfg,
                                    const ConditioningInputs& in, std::size_t batch) {
  const bool want_sys = uses_system_id(cfg.conditioning);
  const bool want_lang = uses_language_id(cfg.conditioning);
  if (want_sys != !in.system_ids.empty()) {
    throw ContractError(want_sys ? "conditioning mode requires a system ID per example"
                                 : "system IDs supplied to a model without system-ID conditioning");
  }
  if (want_lang != !in.language.empty()) {
    throw ContractError(want_lang ? "conditioning mode requires a language-ID vector per example"
                                  : "language-ID vectors supplied to a model without language-ID conditioning");
  }
  if (!want_sys) return {};
  if (in.system_ids.size() != batch) throw ContractError("one system ID per example required");
  for (int id : in.system_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.num_locales) {
      throw ContractError("system ID " + std::to_string(id) + " outside the locale table");
    }
  }
  auto sys = nn::gather_rows(tape, params["embed.system"], in.system_ids);
  if (!want_lang) return sys;
  if (in.language.size() != batch) throw ContractError("one language-ID vector per example required");
  std::vector<double> flat;
  flat.reserve(batch * cfg.num_locales);
  for (const auto& v : in.language) {
    if (v.size() != cfg.num_locales) throw ContractError("language-ID vector length differs from locale count");
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return nn::concat_cols(tape, {sys, Tensor({batch, cfg.num_locales}, std::move(flat))});
}

struct DecoderState {
  std::vector<LstmState> layers;
  Tensor context;  // previous attention context, [B, 2H]
};

/// Decoder start state: each layer's h is an affine map of the top forward
/// encoder state; c and the fed-back context start at zero.
inline DecoderState initial_decoder_state(Tape& tape, const ModelParams& params, const ModelConfig& cfg,
                                          const EncoderOutput& enc) {
  const std::size_t B = enc.batch(), H = cfg.hidden_dim;
  DecoderState s;
  for (std::size_t k = 0; k < cfg.decoder_layers; ++k) {
    const std::string b = "bridge." + std::to_string(k) + ".";
    auto h = nn::add_bias(tape, nn::matmul(tape, enc.final_forward, params[b + "W"]), params[b + "b"]);
    s.layers.push_back({h, Tensor({B, H})});
  }
  s.context = Tensor({B, 2 * H});
  return s;
}

struct StepOutput {
  Tensor logits;             // [B, output_classes]
  DecoderState state;
  Tensor attention;          // [B, T]
};

/// One decoder transition from the previous phoneme (vocabulary index, BOS
/// at the start). Returns unnormalized scores; see step_distribution.
inline StepOutput decode_step(Tape& tape, const ModelParams& params, const ModelConfig& cfg,
                              std::span<const int> prev_tokens, const DecoderState& prev,
                              const EncoderOutput& enc, const Tensor& conditioning, Rng* dropout_rng = nullptr) {
  if (prev_tokens.size() != enc.batch()) throw ContractError("decode_step: token count differs from batch size");
  if (conditioning.defined() != uses_system_id(cfg.conditioning)) {
    throw ContractError("decode_step: conditioning features do not match the conditioning mode");
  }
  auto x = nn::concat_cols(tape, {nn::gather_rows(tape, params["embed.phoneme"], prev_tokens), prev.context});
  StepOutput out;
  for (std::size_t k = 0; k < cfg.decoder_layers; ++k) {
    if (k > 0 && dropout_rng && cfg.dropout > 0.0) x = nn::dropout(tape, x, cfg.dropout, *dropout_rng);
    auto next = lstm_step(tape, x, prev.layers[k], lstm_weights(params, "dec." + std::to_string(k) + "."));
    out.state.layers.push_back(next);
    x = next.h;
  }
  auto att = attend(tape, x, enc, params["attn.W"]);
  out.state.context = att.context;
  out.attention = att.weights;
  std::vector<Tensor> parts = {x, att.context};
  if (conditioning.defined()) parts.push_back(conditioning);
  out.logits = nn::add_bias(tape, nn::matmul(tape, nn::concat_cols(tape, parts), params["out.W"]), params["out.b"]);
  return out;
}

/// Row-wise probabilities over output classes for a decode_step result.
inline Tensor step_distribution(Tape& tape, const StepOutput& step) { return nn::softmax(tape, step.logits, -1); }

/// One training/evaluation pair in index form.
struct Example {
  std::vector<int> graphemes;
  std::vector<int> phonemes;  // vocabulary indices, no BOS/EOS
  int system_id = -1;
  std::vector<double> language;
};

/// Maps an entry onto vocabulary indices. Throws ContractError on symbols
/// outside the vocabularies.
inline Example make_example(const LexiconEntry& e, const Vocabularies& v, const std::vector<double>& language) {
  Example ex;
  for (const auto& g : e.word) {
    const int id = v.graphemes.find(g);
    if (id < SymbolTable::kReserved) throw ContractError("grapheme '" + g + "' not in vocabulary");
    ex.graphemes.push_back(id);
  }
  for (const auto& p : e.pron) {
    const int id = v.phonemes.find(p);
    if (id < SymbolTable::kReserved) throw ContractError("phone '" + p + "' not in vocabulary");
    ex.phonemes.push_back(id);
  }
  ex.system_id = v.locale_id(e.locale);
  ex.language = language;
  return ex;
}

inline std::vector<Example> make_examples(const std::vector<LexiconEntry>& entries, const Corpus& c) {
  std::vector<Example> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(make_example(e, c.vocab, c.language_of(e.text())));
  return out;
}

/// Conditioning inputs for a batch of examples under a model config.
inline ConditioningInputs conditioning_of(const ModelConfig& cfg, std::span<const Example* const> batch) {
  ConditioningInputs in;
  if (uses_system_id(cfg.conditioning)) {
    for (const auto* e : batch) {
      if (e->system_id < 0) throw ContractError("example lacks a system ID");
      in.system_ids.push_back(e->system_id);
    }
  }
  if (uses_language_id(cfg.conditioning)) {
    for (const auto* e : batch) in.language.push_back(e->language);
  }
  return in;
}

/// Sum of -log p(target) over every target position (phones then EOS) of
/// the batch under teacher forcing, and the number of such positions.
struct LossSum {
  Tensor total;
  std::size_t tokens = 0;
};

inline LossSum forward_loss_sum(Tape& tape, const ModelParams& params, const ModelConfig& cfg,
                                std::span<const Example* const> batch, Rng* dropout_rng = nullptr) {
  if (batch.empty()) throw ContractError("forward_loss: empty batch");
  const std::size_t B = batch.size();
  std::vector<std::vector<int>> sources;
  std::size_t steps = 0;
  for (const auto* e : batch) {
    if (e->phonemes.empty()) throw ContractError("forward_loss: example without phonemes");
    sources.push_back(e->graphemes);
    steps = std::max(steps, e->phonemes.size() + 1);
  }
  auto enc = encode(tape, params, cfg, sources, dropout_rng);
  auto cond = conditioning_features(tape, params, cfg, conditioning_of(cfg, batch), B);
  auto state = initial_decoder_state(tape, params, cfg, enc);
  std::vector<int> prev(B), target(B);
  std::vector<double> weight(B);
  LossSum out;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto& ph = batch[b]->phonemes;
      prev[b] = t == 0 ? SymbolTable::kBos : (t - 1 < ph.size() ? ph[t - 1] : SymbolTable::kEos);
      if (t < ph.size()) {
        target[b] = class_of_token(ph[t]);
        weight[b] = 1.0;
      } else if (t == ph.size()) {
        target[b] = class_of_token(SymbolTable::kEos);
        weight[b] = 1.0;
      } else {
        target[b] = 0;
        weight[b] = 0.0;
      }
      if (weight[b] != 0.0) ++out.tokens;
    }
    auto step = decode_step(tape, params, cfg, prev, state, enc, cond, dropout_rng);
    auto loss = nn::nll_loss(tape, step.logits, target, weight);
    out.total = out.total.defined() ? nn::add(tape, out.total, loss) : loss;
    state = std::move(step.state);
  }
  return out;
}

/// Mean token cross-entropy of the batch under teacher forcing.
inline Tensor forward_loss(Tape& tape, const ModelParams& params, const ModelConfig& cfg,
                           std::span<const Example* const> batch, Rng* dropout_rng = nullptr) {
  auto s = forward_loss_sum(tape, params, cfg, batch, dropout_rng);
  return nn::scale(tape, s.total, 1.0 / static_cast<double>(s.tokens));
}

/// A model: hyperparameters, the vocabularies it was trained on, weights.
struct Model {
  ModelConfig config;
  Vocabularies vocab;
  ModelParams params;
};

/// Fills the vocabulary-derived fields of a config.
inline ModelConfig with_vocab(ModelConfig cfg, const Vocabularies& v) {
  cfg.grapheme_vocab = v.graphemes.size();
  cfg.phoneme_vocab = v.phonemes.size();
  cfg.num_locales = v.locales.size();
  return cfg;
}

}  // namespace g2p
