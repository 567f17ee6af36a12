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

#include <cmath>
#include <sstream>

#include "kgdial/evaluate.hpp"
#include "kgdial/train.hpp"
#include "oracles.hpp"

namespace kgdial {
namespace {

struct SmallTask {
  DatasetSplit train, valid, test;
  Vocabulary vocab;
};

SmallTask small_task(int n_dialogues = 40) {
  SynthConfig sc;
  sc.n_dialogues = n_dialogues;
  sc.n_subjects_per_graph = 2;
  sc.n_relations = 2;
  auto parts = partition_splits(generate_synthetic(sc));
  SmallTask t{parts[0], parts[1], parts[2], {}};
  t.vocab = build_vocab({t.train, t.valid}, 1);
  return t;
}

ModelConfig small_model(const Vocabulary& vocab) {
  ModelConfig mc = testing::tiny_config(vocab.size());
  mc.max_positions = 128;
  return mc;
}

TrainConfig small_train(int epochs) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.learning_rate = 3e-3;
  tc.seed = 7;
  return tc;
}

EvalOptions small_eval() {
  EvalOptions eo;
  eo.decoding.max_response_length = 12;
  eo.decoding.seed = 3;
  return eo;
}

bool params_equal(const Parameters<float>& a, const Parameters<float>& b) {
  const auto na = a.named();
  const auto nb = b.named();
  if (na.size() != nb.size()) return false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    if (na[i].first != nb[i].first || *na[i].second != *nb[i].second) return false;
  }
  return true;
}

TEST(TrainConfig, Validation) {
  EXPECT_NO_THROW(TrainConfig{}.validate());
  TrainConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.grad_accum_steps = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrainConfig, DefaultsMatchTableSettings) {
  const TrainConfig c;
  EXPECT_EQ(c.learning_rate, 6.25e-5);
  EXPECT_EQ(c.adam_epsilon, 1e-8);
  EXPECT_EQ(c.batch_size, 4);
  EXPECT_EQ(c.grad_accum_steps, 4);
  EXPECT_EQ(c.k_entity, 7);
  EXPECT_EQ(c.k_relation, 7);
  EXPECT_EQ(c.warmup_steps, 0);
}

TEST(Train, HistoryStepsAndBestState) {
  const SmallTask t = small_task();
  const TrainConfig tc = small_train(3);
  std::vector<int> seen;
  const TrainResult r = train(t.train, t.valid, t.vocab, small_model(t.vocab), tc,
                              [&](const EpochRecord& e) { seen.push_back(e.epoch); });
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_EQ(seen, (std::vector<int>{1, 2, 3}));
  const long per_epoch = static_cast<long>((t.train.samples.size() + 15) / 16);
  EXPECT_EQ(r.optimizer_steps, 3 * per_epoch);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  ASSERT_GE(r.best_epoch, 1);
  double best = INFINITY;
  for (const auto& e : r.history) {
    EXPECT_TRUE(std::isfinite(e.train_loss));
    best = std::min(best, e.valid_loss);
  }
  EXPECT_EQ(r.history[r.best_epoch - 1].valid_loss, best);
  EXPECT_DOUBLE_EQ(mean_loss(r.model, t.valid, t.vocab, tc), best);
}

TEST(Train, WithoutValidationLastEpochWins) {
  const SmallTask t = small_task();
  const TrainResult r = train(t.train, DatasetSplit{}, t.vocab, small_model(t.vocab), small_train(2));
  EXPECT_EQ(r.best_epoch, 2);
  EXPECT_TRUE(std::isnan(r.history.back().valid_loss));
}

TEST(Train, RejectsMismatchedVocabSize) {
  const SmallTask t = small_task();
  ModelConfig mc = small_model(t.vocab);
  mc.vocab_size += 1;
  EXPECT_THROW(train(t.train, t.valid, t.vocab, mc, small_train(1)), std::invalid_argument);
}

TEST(Train, Deterministic) {
  const SmallTask t = small_task();
  ModelConfig mc = small_model(t.vocab);
  mc.dropout = 0.1;
  const TrainResult a = train(t.train, t.valid, t.vocab, mc, small_train(2));
  const TrainResult b = train(t.train, t.valid, t.vocab, mc, small_train(2));
  EXPECT_TRUE(params_equal(a.model.params(), b.model.params()));
  TrainConfig other = small_train(2);
  other.seed = 8;
  const TrainResult c = train(t.train, t.valid, t.vocab, mc, other);
  EXPECT_FALSE(params_equal(a.model.params(), c.model.params()));
}

TEST(Train, MemorizesSingleSample) {
  SmallTask t = small_task();
  DatasetSplit one = t.train;
  one.samples.resize(1);
  TrainConfig tc = small_train(50);
  tc.learning_rate = 1e-2;
  tc.batch_size = 1;
  tc.grad_accum_steps = 1;
  const TrainResult r = train(one, DatasetSplit{}, t.vocab, small_model(t.vocab), tc);
  EXPECT_LT(r.history.back().train_loss, 0.1 * r.history.front().train_loss);
}

TEST(Train, HistoryCsv) {
  const std::vector<EpochRecord> h = {{1, 2.5, 3.0}, {2, 1.25, NAN}};
  const std::string csv = history_csv(h);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,valid_loss");
  EXPECT_NE(csv.find("1,2.5,3\n"), std::string::npos);
  EXPECT_NE(csv.find("2,1.25,nan\n"), std::string::npos);
}

TEST(Evaluate, SampleSeedDependsOnIdOnly) {
  EXPECT_EQ(sample_seed(1, "a"), sample_seed(1, "a"));
  EXPECT_NE(sample_seed(1, "a"), sample_seed(1, "b"));
  EXPECT_NE(sample_seed(1, "a"), sample_seed(2, "a"));
}

class EvaluateTrained : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    task_ = new SmallTask(small_task());
    model_ = new Transformer<float>(
        train(task_->train, task_->valid, task_->vocab, small_model(task_->vocab), small_train(2)).model);
  }
  static void TearDownTestSuite() {
    delete task_;
    delete model_;
  }
  static SmallTask* task_;
  static Transformer<float>* model_;
};
SmallTask* EvaluateTrained::task_ = nullptr;
Transformer<float>* EvaluateTrained::model_ = nullptr;

TEST_F(EvaluateTrained, GoldHypothesesScorePerfect) {
  EvalOptions eo = small_eval();
  eo.hyp_from_gold = true;
  const EvalReport r = evaluate(*model_, task_->test, task_->vocab, eo);
  EXPECT_EQ(r.bleu, 100.0);
  EXPECT_EQ(r.entity_f1, 100.0);
  EXPECT_EQ(r.counts.fp, 0);
  EXPECT_EQ(r.counts.fn, 0);
  EXPECT_GT(r.counts.tp, 0);
}

TEST_F(EvaluateTrained, RecordsInInputOrder) {
  const EvalReport r = evaluate(*model_, task_->test, task_->vocab, small_eval());
  ASSERT_EQ(r.records.size(), task_->test.samples.size());
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    EXPECT_EQ(r.records[i].id, task_->test.samples[i].id);
    EXPECT_GE(r.records[i].bleu, 0.0);
    EXPECT_LE(r.records[i].bleu, 1.0);
  }
  EXPECT_EQ(r.k_entity, 7);
  EXPECT_EQ(r.k_relation, 7);
}

TEST_F(EvaluateTrained, RepeatableAndThreadIndependent) {
  EvalOptions eo = small_eval();
  const EvalReport a = evaluate(*model_, task_->test, task_->vocab, eo);
  const EvalReport b = evaluate(*model_, task_->test, task_->vocab, eo);
  eo.threads = 3;
  const EvalReport c = evaluate(*model_, task_->test, task_->vocab, eo);
  const nlohmann::ordered_json cfg = {{"run", 1}};
  const std::string ja = report_to_json(a, cfg).dump();
  EXPECT_EQ(ja, report_to_json(b, cfg).dump());
  EXPECT_EQ(ja, report_to_json(c, cfg).dump());
}

TEST_F(EvaluateTrained, ReportJsonLayout) {
  const EvalReport r = evaluate(*model_, task_->test, task_->vocab, small_eval());
  const auto j = report_to_json(r, {{"split", "test"}});
  for (const char* key : {"bleu_method", "entity_f1_method", "config", "metrics", "samples"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["config"]["split"], "test");
  EXPECT_EQ(j["metrics"]["samples"].get<std::size_t>(), task_->test.samples.size());
  EXPECT_EQ(j["samples"].size(), task_->test.samples.size());
}

TEST(Evaluate, MetricsTablePrintsAll) {
  EvalReport r;
  r.k_entity = kSelectAll;
  r.k_relation = 3;
  r.bleu = 12.5;
  r.entity_f1 = 90.0;
  std::ostringstream out;
  print_metrics_table(out, {r});
  EXPECT_NE(out.str().find("all"), std::string::npos);
  EXPECT_NE(out.str().find("90.00"), std::string::npos);
}

}  // namespace
}  // namespace kgdial
