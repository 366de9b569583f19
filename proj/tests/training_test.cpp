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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "g2p_test_support.hpp"

namespace g2p {
namespace {

TEST(MakeBatches, TenEntriesInBatchesOfThree) {
  std::vector<std::size_t> lengths = {5, 1, 4, 2, 9, 3, 3, 7, 1, 2};
  auto batches = make_batches(lengths, 3, 1, 0);
  std::multiset<std::size_t> sizes;
  std::vector<std::size_t> all;
  for (const auto& b : batches) {
    sizes.insert(b.size());
    all.insert(all.end(), b.begin(), b.end());
  }
  EXPECT_EQ(sizes, (std::multiset<std::size_t>{1, 3, 3, 3}));
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(10);
  std::iota(expect.begin(), expect.end(), 0u);
  EXPECT_EQ(all, expect);
}

TEST(MakeBatches, DeterministicPerSeedAndEpoch) {
  std::vector<std::size_t> lengths(50);
  for (std::size_t i = 0; i < lengths.size(); ++i) lengths[i] = 1 + (i * 7) % 11;
  EXPECT_EQ(make_batches(lengths, 4, 3, 2), make_batches(lengths, 4, 3, 2));
  EXPECT_NE(make_batches(lengths, 4, 3, 2), make_batches(lengths, 4, 3, 3));
  EXPECT_NE(make_batches(lengths, 4, 3, 2), make_batches(lengths, 4, 4, 2));
  EXPECT_THROW(make_batches({}, 4, 1, 0), ContractError);
}

TEST(MakeBatches, LengthBucketingReducesPadding) {
  std::vector<std::size_t> lengths(200);
  Rng rng(5);
  for (auto& l : lengths) l = 1 + draw_below(rng, 15);
  auto bucketed = make_batches(lengths, 16, 1, 0);
  // Same batch sizes without sorting: consecutive shuffled indices.
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), 0u);
  seeded_shuffle(order, rng);
  std::vector<std::vector<std::size_t>> random_batches;
  for (std::size_t i = 0; i < order.size(); i += 16) {
    random_batches.emplace_back(order.begin() + static_cast<long>(i),
                                order.begin() + static_cast<long>(std::min(order.size(), i + 16)));
  }
  EXPECT_LT(padding_fraction(lengths, bucketed), padding_fraction(lengths, random_batches) / 2);
}

std::vector<LexiconEntry> toy_lexicon(std::size_t words, std::uint64_t seed) {
  // Deterministic letter-to-phone rule with one locale-dependent letter.
  std::vector<LexiconEntry> out;
  Rng rng(seed);
  std::set<std::string> seen;
  while (seen.size() < words) {
    std::string w;
    const auto len = 2 + draw_below(rng, 4);
    for (std::size_t k = 0; k < len; ++k) w += static_cast<char>('a' + draw_below(rng, 5));
    if (!seen.insert(w).second) continue;
    for (const std::string loc : {"l0", "l1"}) {
      std::string p;
      for (char c : w) {
        const char ph = (c == 'e' && loc == "l1") ? 'Z' : static_cast<char>(c - 32);
        p += (p.empty() ? "" : " ") + std::string(1, ph);
      }
      out.push_back(testing::entry(w, p, loc));
    }
  }
  return out;
}

Corpus toy_corpus(std::size_t words = 40) {
  FilterConfig f;
  f.min_grapheme_count = 1;
  f.min_phoneme_count = 1;
  f.block_size = 2;
  return assemble_corpus(toy_lexicon(words, 8), f, 2, LangDistMode::count);
}

ModelConfig tiny_model_config(Conditioning c = Conditioning::system_id) {
  ModelConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 12;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.system_id_dim = 4;
  cfg.dropout = 0.1;
  cfg.conditioning = c;
  return cfg;
}

TEST(TrainEpoch, ZeroLearningRateLeavesParametersBitIdentical) {
  auto c = toy_corpus();
  auto cfg = with_vocab(tiny_model_config(), c.vocab);
  auto params = init_params(cfg);
  auto before = params.clone();
  TrainConfig t;
  t.learning_rate = 0.0;
  t.batch_size = 8;
  TrainState st;
  const double loss = train_epoch(make_examples(c.parts.train, c), params, cfg, t, st);
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_EQ(st.epoch, 1u);
  for (const auto& [name, p] : params.items()) {
    const auto& q = before[name];
    for (std::size_t i = 0; i < p.size(); ++i) ASSERT_EQ(p.data()[i], q.data()[i]) << name;
  }
}

TEST(TrainEpoch, TinyClipBoundsGradientAndStep) {
  auto c = toy_corpus();
  auto cfg = with_vocab(tiny_model_config(), c.vocab);
  cfg.dropout = 0.0;
  auto params = init_params(cfg);
  auto ex = make_examples(c.parts.train, c);

  // Clipped gradient norm.
  std::vector<const Example*> batch;
  for (auto& e : ex) batch.push_back(&e);
  params.zero_grad();
  {
    Tape tape;
    tape.backward(forward_loss(tape, params, cfg, batch));
  }
  const double pre = clip_global_norm(params, 1e-6);
  EXPECT_GT(pre, 1e-6);
  double sq = 0.0;
  for (const auto& [_, p] : params.items()) {
    for (double g : p.grad()) sq += g * g;
  }
  EXPECT_LE(std::sqrt(sq), 1e-6 * (1 + 1e-12));

  // One Adam step with that clip: every coordinate moves by at most lr,
  // since the first bias-corrected step is g / (|g| + eps).
  auto before = params.clone();
  TrainConfig t;
  t.batch_size = ex.size();
  t.clip_norm = 1e-6;
  t.learning_rate = 1e-3;
  TrainState st;
  train_epoch(ex, params, cfg, t, st);
  double moved = 0.0;
  for (const auto& [name, p] : params.items()) {
    for (std::size_t i = 0; i < p.size(); ++i) moved = std::max(moved, std::abs(p.data()[i] - before[name].data()[i]));
  }
  EXPECT_LE(moved, t.learning_rate * (1 + 1e-12));
  EXPECT_GT(moved, 0.0);
}

TEST(TrainEpoch, NonFiniteLossNamesTheBatch) {
  auto c = toy_corpus();
  auto cfg = with_vocab(tiny_model_config(), c.vocab);
  auto params = init_params(cfg);
  params["out.b"].data()[1] = std::nan("");
  TrainConfig t;
  TrainState st;
  try {
    train_epoch(make_examples(c.parts.train, c), params, cfg, t, st);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1, batch"), std::string::npos) << e.what();
  }
}

TEST(TrainEpoch, LossDecreasesOverEpochs) {
  auto c = toy_corpus();
  auto cfg = with_vocab(tiny_model_config(), c.vocab);
  auto params = init_params(cfg);
  auto ex = make_examples(c.parts.train, c);
  TrainConfig t;
  t.batch_size = 8;
  t.learning_rate = 0.01;
  TrainState st;
  const double first = train_epoch(ex, params, cfg, t, st);
  double last = first;
  for (int i = 0; i < 10; ++i) last = train_epoch(ex, params, cfg, t, st);
  EXPECT_LT(last, first * 0.7);
}

TEST(EarlyStopper, PatienceTwoStopsAtThirdNonImprovingEval) {
  EarlyStopper s(2);
  const std::vector<double> script = {0.5, 0.4, 0.4, 0.41, 0.4, 0.3};
  std::vector<bool> improved, stop;
  for (double v : script) {
    improved.push_back(s.update(v));
    stop.push_back(s.should_stop());
    if (stop.back()) break;
  }
  EXPECT_EQ(improved, (std::vector<bool>{true, true, false, false, false}));
  EXPECT_EQ(stop, (std::vector<bool>{false, false, false, false, true}));
  EXPECT_EQ(s.best(), 0.4);
}

TEST(Fit, OneEpochWritesCheckpointsAndLog) {
  auto c = toy_corpus();
  TrainConfig t;
  t.max_epochs = 1;
  t.batch_size = 16;
  FitOptions opt;
  opt.out_dir = testing::scratch_dir("fit_one");
  auto r = fit(c, tiny_model_config(), t, opt);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_TRUE(r.log[0].dev_per.has_value());
  EXPECT_TRUE(std::filesystem::exists(*opt.out_dir / "best.ckpt"));
  EXPECT_TRUE(std::filesystem::exists(*opt.out_dir / "final.ckpt"));
  std::ifstream log(*opt.out_dir / "train_log.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["epoch"], 1);
    ++lines;
  }
  EXPECT_EQ(lines, 1u);
  auto loaded = load_checkpoint(*opt.out_dir / "best.ckpt");
  EXPECT_EQ(checkpoint_fingerprint(loaded), checkpoint_fingerprint(r.best));
}

TEST(Fit, SameSeedGivesIdenticalLogsAndWeights) {
  auto c = toy_corpus();
  TrainConfig t;
  t.max_epochs = 3;
  t.batch_size = 8;
  auto a = fit(c, tiny_model_config(Conditioning::system_and_language_id), t);
  auto b = fit(c, tiny_model_config(Conditioning::system_and_language_id), t);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].to_json(false), b.log[i].to_json(false));
  EXPECT_EQ(checkpoint_bytes(a.best), checkpoint_bytes(b.best));
  EXPECT_EQ(checkpoint_bytes(a.last), checkpoint_bytes(b.last));
  t.seed = 2;
  auto d = fit(c, tiny_model_config(Conditioning::system_and_language_id), t);
  EXPECT_NE(checkpoint_bytes(a.last), checkpoint_bytes(d.last));
}

TEST(Fit, EvalEveryControlsDevEvaluations) {
  auto c = toy_corpus();
  TrainConfig t;
  t.max_epochs = 4;
  t.eval_every = 2;
  t.batch_size = 16;
  auto r = fit(c, tiny_model_config(), t);
  ASSERT_EQ(r.log.size(), 4u);
  EXPECT_FALSE(r.log[0].dev_per.has_value());
  EXPECT_TRUE(r.log[1].dev_per.has_value());
  EXPECT_FALSE(r.log[2].dev_per.has_value());
  EXPECT_TRUE(r.log[3].dev_per.has_value());
}

TEST(TrainConfig, Validation) {
  TrainConfig t;
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), ContractError);
  t = {};
  t.clip_norm = 0.0;
  EXPECT_THROW(t.validate(), ContractError);
}

}  // namespace
}  // namespace g2p
