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

#include "g2p_test_support.hpp"

namespace g2p {
namespace {

TEST(RunConfig, DefaultsMatchComponentDefaults) {
  RunConfig c;
  EXPECT_EQ(c.model().hidden_dim, ModelConfig{}.hidden_dim);
  EXPECT_EQ(c.train().batch_size, TrainConfig{}.batch_size);
  EXPECT_EQ(c.beam().beam_width, BeamConfig{}.beam_width);
  EXPECT_EQ(c.filter().block_size, FilterConfig{}.block_size);
  EXPECT_EQ(c.conditioning(), Conditioning::system_id);
}

TEST(RunConfig, FileValuesApplyAndOverridesWin) {
  RunConfig c;
  c.merge_text("# comment\nhidden_dim = 32\n\nbeam_width=5  # trailing\n", "cfg");
  EXPECT_EQ(c.model().hidden_dim, 32u);
  EXPECT_EQ(c.beam().beam_width, 5u);
  c.set("hidden_dim", "16");
  EXPECT_EQ(c.model().hidden_dim, 16u);
}

TEST(RunConfig, UnknownKeysAndMalformedLinesAreRejected) {
  RunConfig c;
  EXPECT_THROW(c.set("hiden_dim", "3"), ContractError);
  try {
    c.merge_text("seed = 1\nbogus = 2\n", "my.cfg");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("my.cfg:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(c.merge_text("just words\n", "x"), ParseError);
  EXPECT_THROW(c.merge_file("/nonexistent/cfg.txt"), ContractError);
}

TEST(RunConfig, TypedGettersValidate) {
  RunConfig c;
  c.set("hidden_dim", "-3");
  EXPECT_THROW(c.model(), ContractError);
  c.set("hidden_dim", "12x");
  EXPECT_THROW(c.model(), ContractError);
  c.set("hidden_dim", "12");
  c.set("learning_rate", "abc");
  EXPECT_THROW(c.train(), ContractError);
  c.set("learning_rate", "0.01");
  c.set("nbest_cascade", "maybe");
  EXPECT_THROW(c.beam(), ContractError);
  c.set("nbest_cascade", "no");
  EXPECT_FALSE(c.beam().cascade);
  c.set("system", "3");
  EXPECT_THROW(c.conditioning(), ContractError);
  c.set("system", "2");
  EXPECT_EQ(c.model().conditioning, Conditioning::system_and_language_id);
}

TEST(RunConfig, SnapshotRoundTrips) {
  RunConfig a;
  a.set("seed", "9");
  a.set("dropout", "0.25");
  a.set("lang_dist_mode", "multi-hot");
  RunConfig b;
  b.merge_text(a.snapshot(), "snapshot");
  EXPECT_EQ(a.snapshot(), b.snapshot());
  EXPECT_EQ(b.lang_dist_mode(), LangDistMode::multi_hot);
  const auto dir = testing::scratch_dir("config_snapshot");
  a.write_snapshot(dir);
  RunConfig c;
  c.merge_file(dir / "config.txt");
  EXPECT_EQ(c.snapshot(), a.snapshot());
}

TEST(RunConfig, SeedFeedsDistinctStreams) {
  RunConfig c;
  c.set("seed", "4");
  EXPECT_NE(c.model().seed, c.train().seed);
  RunConfig d;
  d.set("seed", "5");
  EXPECT_NE(c.model().seed, d.model().seed);
}

TEST(RunConfig, EveryKeyIsDocumented) {
  RunConfig c;
  for (const auto& k : c.keys()) EXPECT_FALSE(c.doc(k).empty()) << k;
}

}  // namespace
}  // namespace g2p
