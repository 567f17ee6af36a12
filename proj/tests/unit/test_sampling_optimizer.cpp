// Copyright 2026 The kgdial Authors
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

#include <random>

#include "kgdial/optimizer.hpp"
#include "kgdial/sampling.hpp"
#include "oracles.hpp"

namespace kgdial {
namespace {

using kgdial::testing::tiny_case;
using kgdial::testing::tiny_config;
using kgdial::testing::tiny_vocab;

TEST(ChooseToken, TopKOneIsGreedyForAnySeed) {
  DecodingParams p;
  p.top_k = 1;
  const std::vector<double> logits = {0.1, 2.0, 1.9, -3.0};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    EXPECT_EQ(choose_token(logits, p, rng), 1);
  }
}

TEST(ChooseToken, TiesGoToLowerId) {
  DecodingParams p;
  p.top_k = 1;
  std::mt19937_64 rng(0);
  EXPECT_EQ(choose_token({1.0, 3.0, 3.0}, p, rng), 1);
}

TEST(ChooseToken, TinyTemperatureIsGreedy) {
  DecodingParams p;
  p.temperature = 1e-4;
  p.top_k = 6;
  p.top_p = 1.0;
  const std::vector<double> logits = {0.5, 0.2, 0.9, 0.89};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    EXPECT_EQ(choose_token(logits, p, rng), 2);
  }
}

TEST(ChooseToken, StaysInsideTopKAndNucleus) {
  DecodingParams p;
  p.temperature = 1.0;
  p.top_k = 3;
  p.top_p = 0.5;
  // probabilities within top-3: ~0.66, 0.24, 0.09 -> nucleus keeps only the first
  const std::vector<double> logits = {0.0, 3.0, 2.0, 1.0, -1.0};
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) EXPECT_EQ(choose_token(logits, p, rng), 1);
  p.top_p = 1.0;
  std::set<int> seen;
  for (int i = 0; i < 2000; ++i) seen.insert(choose_token(logits, p, rng));
  EXPECT_EQ(seen, (std::set<int>{1, 2, 3}));
}

TEST(ChooseToken, EmpiricalFrequenciesFollowRenormalizedTopK) {
  DecodingParams p;
  p.temperature = 0.5;
  p.top_k = 2;
  p.top_p = 1.0;
  const std::vector<double> logits = {0.0, std::log(3.0) * 0.5, -5.0};
  // at temperature 0.5 token 1 has weight 3 vs 1 for token 0
  std::mt19937_64 rng(9);
  int ones = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) ones += choose_token(logits, p, rng) == 1;
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.75, 0.01);
}

TEST(DecodingParams, Validation) {
  DecodingParams p;
  EXPECT_NO_THROW(p.validate());
  p.top_p = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = DecodingParams{};
  p.temperature = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = DecodingParams{};
  p.top_k = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(DecodingParams, TableDefaults) {
  const DecodingParams p;
  EXPECT_DOUBLE_EQ(p.temperature, 0.68);
  EXPECT_EQ(p.top_k, 6);
  EXPECT_DOUBLE_EQ(p.top_p, 0.9);
  EXPECT_EQ(p.max_response_length, 100);
}

class SampleResponseTest : public ::testing::Test {
 protected:
  Vocabulary vocab = tiny_vocab();
  std::mt19937_64 rng{4};
  ModelConfig cfg = tiny_config(vocab.size());
  Transformer<float> model{cfg};
  InputSequence context;
  KnowledgeColumns knowledge;

  void SetUp() override {
    cfg.max_positions = 128;
    model = Transformer<float>(cfg);
    model.init_random(3);
    auto c = tiny_case(rng, vocab);
    context = assemble_input(linearize_graph(c.graph, file_order(c.graph), vocab), {}, "w1 e2", std::nullopt,
                             vocab, AssemblyLimits{});
    knowledge = open_knowledge_columns(context);
  }
};

TEST_F(SampleResponseTest, FixedSeedReproduces) {
  DecodingParams p;
  p.max_response_length = 12;
  p.seed = 77;
  p.temperature = 1.5;
  p.top_p = 1.0;
  const auto a = sample_response(model, context, knowledge, p);
  const auto b = sample_response(model, context, knowledge, p);
  EXPECT_EQ(a, b);
  EXPECT_LE(a.size(), 12u);
  bool differs = false;
  for (std::uint64_t s = 0; s < 20 && !differs; ++s) {
    p.seed = s;
    differs = sample_response(model, context, knowledge, p) != a;
  }
  EXPECT_TRUE(differs);
}

TEST_F(SampleResponseTest, GreedyMatchesArgmaxLoop) {
  DecodingParams p;
  p.top_k = 1;
  p.max_response_length = 6;
  const auto tokens = sample_response(model, context, knowledge, p);
  InputSequence ctx = context;
  std::vector<int> expected;
  for (int step = 0; step < 6; ++step) {
    const auto row = model.last_logits(ctx, compose_mask(ctx, knowledge));
    Eigen::Index best = 0;
    row.maxCoeff(&best);
    if (best == kEos) break;
    expected.push_back(static_cast<int>(best));
    ctx.append_response_token(static_cast<int>(best));
  }
  EXPECT_EQ(tokens, expected);
}

TEST_F(SampleResponseTest, StopsAtEos) {
  model.params().token.row(kEos).setConstant(0.0f);
  // Bias every final hidden state toward EOS via the final layer-norm bias.
  model.params().final_ln_gain.setZero();
  model.params().final_ln_bias = model.params().token.row(kNumSpecials + 3);
  model.params().token.row(kEos) = model.params().token.row(kNumSpecials + 3) * 10.0f;
  DecodingParams p;
  p.top_k = 1;
  EXPECT_TRUE(sample_response(model, context, knowledge, p).empty());
}

TEST_F(SampleResponseTest, OversizedContextRejected) {
  DecodingParams p;
  p.max_response_length = cfg.max_positions;
  EXPECT_THROW(sample_response(model, context, knowledge, p), std::invalid_argument);
}

TEST(AdamW, ZeroGradientIsNoOpWithoutDecay) {
  const ModelConfig cfg = tiny_config(50);
  Transformer<float> m(cfg);
  m.init_random(1);
  const Parameters<float> before = m.params();
  AdamW<float> opt(m.params(), AdamWConfig{});
  const Parameters<float> zero = Parameters<float>::zeros(cfg);
  for (int i = 0; i < 3; ++i) opt.step(m.params(), zero);
  const auto a = before.named();
  const auto b = m.params().named();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].second, *b[i].second);
  EXPECT_EQ(opt.steps(), 3);
}

TEST(AdamW, ZeroGradientAppliesOnlyDecay) {
  const ModelConfig cfg = tiny_config(50);
  Transformer<double> m(cfg);
  m.init_random(1);
  const Parameters<double> before = m.params();
  AdamWConfig oc;
  oc.learning_rate = 0.01;
  oc.weight_decay = 0.1;
  AdamW<double> opt(m.params(), oc);
  opt.step(m.params(), Parameters<double>::zeros(cfg));
  EXPECT_LE((m.params().token - before.token * (1.0 - 0.001)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  ModelConfig cfg = tiny_config(50);
  Transformer<double> m(cfg);
  m.init_random(1);
  const Parameters<double> before = m.params();
  Parameters<double> g = Parameters<double>::zeros(cfg);
  g.token(10, 3) = 0.5;
  g.token(11, 2) = -2.0;
  AdamWConfig oc;
  oc.learning_rate = 1e-3;
  AdamW<double> opt(m.params(), oc);
  opt.step(m.params(), g);
  // bias-corrected first step: -lr * sign(g) up to epsilon
  EXPECT_NEAR(m.params().token(10, 3) - before.token(10, 3), -1e-3, 1e-10);
  EXPECT_NEAR(m.params().token(11, 2) - before.token(11, 2), 1e-3, 1e-10);
  EXPECT_EQ(m.params().token(12, 2), before.token(12, 2));
}

TEST(AdamW, LinearWarmup) {
  const ModelConfig cfg = tiny_config(50);
  Transformer<double> m(cfg);
  AdamWConfig oc;
  oc.learning_rate = 1.0;
  oc.warmup_steps = 4;
  AdamW<double> opt(m.params(), oc);
  EXPECT_DOUBLE_EQ(opt.current_rate(), 0.25);
  for (int i = 0; i < 3; ++i) opt.step(m.params(), Parameters<double>::zeros(cfg));
  EXPECT_DOUBLE_EQ(opt.current_rate(), 1.0);
  opt.step(m.params(), Parameters<double>::zeros(cfg));
  EXPECT_DOUBLE_EQ(opt.current_rate(), 1.0);
}

}  // namespace
}  // namespace kgdial
