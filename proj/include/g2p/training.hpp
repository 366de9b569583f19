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

// Mini-batch training: length-bucketed batches, Adam with global-norm
// clipping, dev-PER early stopping and checkpoint/log output.

#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "g2p/checkpoint.hpp"
#include "g2p/corpus.hpp"
#include "g2p/decoding.hpp"
#include "g2p/evaluation.hpp"
#include "g2p/model.hpp"

namespace g2p {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t max_epochs = 30;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  std::size_t early_stop_patience = 3;
  std::size_t eval_every = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (batch_size < 1 || max_epochs < 1 || early_stop_patience < 1 || eval_every < 1) {
      throw ContractError("TrainConfig: batch_size, max_epochs, patience and eval_every must be >= 1");
    }
    if (learning_rate < 0.0) throw ContractError("TrainConfig: learning_rate must be >= 0");
    if (!(clip_norm > 0.0)) throw ContractError("TrainConfig: clip_norm must be > 0");
  }
};

/// Splits indices [0, lengths.size()) into batches of at most batch_size.
/// Indices are shuffled, stably sorted by source length so batches hold
/// similar lengths, cut into batches, and the batch order is shuffled.
/// Everything is a function of (seed, epoch).
inline std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& lengths,
                                                          std::size_t batch_size, std::uint64_t seed,
                                                          std::size_t epoch) {
  if (lengths.empty()) throw ContractError("make_batches: empty partition");
  if (batch_size < 1) throw ContractError("make_batches: batch_size must be >= 1");
  Rng rng(mix_seed(seed, 1000 + epoch));
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  seeded_shuffle(order, rng);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lengths[a] < lengths[b]; });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  seeded_shuffle(batches, rng);
  return batches;
}

/// Fraction of padded source positions across a batching.
inline double padding_fraction(const std::vector<std::size_t>& lengths,
                               const std::vector<std::vector<std::size_t>>& batches) {
  std::size_t pad = 0, total = 0;
  for (const auto& b : batches) {
    std::size_t mx = 0;
    for (auto i : b) mx = std::max(mx, lengths[i]);
    for (auto i : b) pad += mx - lengths[i];
    total += mx * b.size();
  }
  return total ? static_cast<double>(pad) / static_cast<double>(total) : 0.0;
}

/// Scales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before clipping.
inline double clip_global_norm(ModelParams& params, double max_norm) {
  double sq = 0.0;
  for (auto& [_, t] : params.items()) {
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericalError("non-finite gradient norm");
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [_, t] : params.items()) {
      for (double& g : t.grad()) g *= s;
    }
  }
  return norm;
}

/// Adam with bias correction.
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  void step(ModelParams& params, double lr) {
    if (m_.empty()) {
      for (auto& [_, t] : params.items()) {
        m_.emplace_back(t.size(), 0.0);
        v_.emplace_back(t.size(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    std::size_t k = 0;
    for (auto& [_, p] : params.items()) {
      auto g = p.grad();
      auto w = p.data();
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      }
      ++k;
    }
  }

  std::size_t steps() const { return t_; }

 private:
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

struct TrainState {
  std::size_t epoch = 0;
  double best_dev_per = std::numeric_limits<double>::infinity();
  std::size_t evals_since_improvement = 0;
  Adam optimizer;
};

/// One pass over `train`: forward, backward, clip, Adam step per batch.
/// Returns the token-weighted mean loss. Increments state.epoch.
inline double train_epoch(const std::vector<Example>& train, ModelParams& params, const ModelConfig& cfg,
                          const TrainConfig& tcfg, TrainState& state) {
  tcfg.validate();
  if (train.empty()) throw ContractError("train_epoch: empty training partition");
  std::vector<std::size_t> lengths;
  lengths.reserve(train.size());
  for (const auto& e : train) lengths.push_back(e.graphemes.size());
  const auto batches = make_batches(lengths, tcfg.batch_size, tcfg.seed, state.epoch);
  Rng dropout_rng(mix_seed(tcfg.seed, 7000 + state.epoch));
  double loss_sum = 0.0;
  std::size_t tokens = 0;
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    std::vector<const Example*> batch;
    for (auto i : batches[bi]) batch.push_back(&train[i]);
    params.zero_grad();
    Tape tape;
    LossSum ls;
    try {
      ls = forward_loss_sum(tape, params, cfg, batch, &dropout_rng);
    } catch (const NumericalError& e) {
      throw NumericalError("epoch " + std::to_string(state.epoch + 1) + ", batch " + std::to_string(bi) + ": " +
                           e.what());
    }
    auto loss = nn::scale(tape, ls.total, 1.0 / static_cast<double>(ls.tokens));
    tape.backward(loss);
    try {
      clip_global_norm(params, tcfg.clip_norm);
    } catch (const NumericalError& e) {
      throw NumericalError("epoch " + std::to_string(state.epoch + 1) + ", batch " + std::to_string(bi) + ": " +
                           e.what());
    }
    state.optimizer.step(params, tcfg.learning_rate);
    loss_sum += ls.total.item();
    tokens += ls.tokens;
  }
  ++state.epoch;
  return loss_sum / static_cast<double>(tokens);
}

/// Counts evaluations without improvement; signals a stop once more than
/// `patience` consecutive evaluations failed to lower the best dev PER.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}

  /// Records a dev PER. Returns true when this value improved on the best.
  bool update(double dev_per) {
    if (dev_per < best_) {
      best_ = dev_per;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ > patience_; }
  double best() const { return best_; }
  std::size_t stale() const { return stale_; }

 private:
  std::size_t patience_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
};

struct LogRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_per, dev_wer;
  double wall_seconds = 0.0;

  nlohmann::ordered_json to_json(bool with_wall_clock = true) const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["train_loss"] = train_loss;
    j["dev_per"] = dev_per ? nlohmann::ordered_json(*dev_per) : nlohmann::ordered_json(nullptr);
    j["dev_wer"] = dev_wer ? nlohmann::ordered_json(*dev_wer) : nlohmann::ordered_json(nullptr);
    if (with_wall_clock) j["wall_seconds"] = wall_seconds;
    return j;
  }
};

struct FitResult {
  Model best;
  Model last;
  std::vector<LogRow> log;
  bool stopped_early = false;
};

struct FitOptions {
  std::optional<std::filesystem::path> out_dir;  // best.ckpt, final.ckpt, train_log.jsonl
  std::ostream* progress = nullptr;
  std::size_t eval_threads = 1;
  std::size_t max_dev_words = 0;  // 0 evaluates the whole dev partition
  /// Stop as soon as dev PER reaches zero.
  bool stop_at_zero = false;
};

/// Greedy-decoding PER/WER of a model on entries (1-best, all references).
inline EvalReport greedy_report(const Model& model, const std::vector<LexiconEntry>& entries,
                                const LanguageTable& language, std::size_t threads = 1) {
  EvalOptions opt;
  opt.greedy = true;
  opt.threads = threads;
  return evaluate(model, entries, language, opt);
}

/// Trains from scratch on corpus.train, tracking dev PER (greedy decoding)
/// every eval_every epochs. The best-dev model is kept; training stops on
/// patience exhaustion or max_epochs.
inline FitResult fit(const Corpus& corpus, ModelConfig cfg, const TrainConfig& tcfg, const FitOptions& opt = {}) {
  tcfg.validate();
  if (corpus.parts.dev.empty()) throw ContractError("fit: dev partition is empty");
  cfg = with_vocab(cfg, corpus.vocab);
  cfg.validate();
  const auto train = make_examples(corpus.parts.train, corpus);
  std::vector<LexiconEntry> dev = corpus.parts.dev;
  if (opt.max_dev_words && dev.size() > opt.max_dev_words) dev.resize(opt.max_dev_words);

  FitResult result;
  Model model{cfg, corpus.vocab, init_params(cfg)};
  TrainState state;
  EarlyStopper stopper(tcfg.early_stop_patience);
  bool have_best = false;
  std::ofstream log_file;
  if (opt.out_dir) {
    std::filesystem::create_directories(*opt.out_dir);
    log_file.open(*opt.out_dir / "train_log.jsonl", std::ios::binary);
  }
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  while (state.epoch < tcfg.max_epochs) {
    LogRow row;
    row.train_loss = train_epoch(train, model.params, cfg, tcfg, state);
    row.epoch = state.epoch;
    bool stop = false;
    if (state.epoch % tcfg.eval_every == 0 || state.epoch == tcfg.max_epochs) {
      auto rep = greedy_report(model, dev, corpus.language, opt.eval_threads);
      row.dev_per = rep.micro_per();
      row.dev_wer = rep.micro_wer();
      if (stopper.update(*row.dev_per) || !have_best) {
        result.best = Model{cfg, corpus.vocab, model.params.clone()};
        have_best = true;
        state.best_dev_per = stopper.best();
        if (opt.out_dir) save_checkpoint(result.best, *opt.out_dir / "best.ckpt");
      }
      state.evals_since_improvement = stopper.stale();
      stop = stopper.should_stop() || (opt.stop_at_zero && *row.dev_per == 0.0);
    }
    row.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (log_file) log_file << row.to_json().dump() << '\n' << std::flush;
    if (opt.progress) *opt.progress << row.to_json().dump() << '\n' << std::flush;
    result.log.push_back(row);
    if (stop) {
      result.stopped_early = state.epoch < tcfg.max_epochs;
      break;
    }
  }
  result.last = Model{cfg, corpus.vocab, model.params.clone()};
  if (opt.out_dir) save_checkpoint(result.last, *opt.out_dir / "final.ckpt");
  return result;
}

}  // namespace g2p
