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

#include "kgdial/train.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "kgdial/optimizer.hpp"
#include "kgdial/pipeline.hpp"

namespace kgdial {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam_epsilon must be > 0");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (grad_accum_steps < 1) throw std::invalid_argument("grad_accum_steps must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (k_entity < 0 || k_relation < 0) throw std::invalid_argument("top-k must be >= 0");
  if (warmup_steps < 0) throw std::invalid_argument("warmup_steps must be >= 0");
}

namespace {

PrepareOptions prepare_options(const ModelConfig& mc, const TrainConfig& cfg) {
  PrepareOptions opt;
  opt.k_entity = cfg.k_entity;
  opt.k_relation = cfg.k_relation;
  opt.limits = cfg.limits;
  opt.use_kg_mask = !mc.ablation.no_kg_mask;
  opt.with_response = true;
  return opt;
}

std::mt19937_64 epoch_rng(std::uint64_t seed, int epoch, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), stream};
  return std::mt19937_64(seq);
}

}  // namespace

double mean_loss(const Transformer<float>& model, const DatasetSplit& split,
                 const Vocabulary& vocab, const TrainConfig& cfg) {
  if (split.samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  const PrepareOptions opt = prepare_options(model.config(), cfg);
  double total = 0.0;
  for (const auto& sample : split.samples) {
    const PreparedSample p = prepare_sample(sample, file_order(sample.graph), vocab, model, opt);
    total += model.loss(p.seq, compose_mask(p.seq, p.knowledge));
  }
  return total / static_cast<double>(split.samples.size());
}

TrainResult train(const DatasetSplit& train_split, const DatasetSplit& valid_split,
                  const Vocabulary& vocab, const ModelConfig& model_config,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_split.samples.empty()) throw std::invalid_argument("training split has no samples");
  if (model_config.vocab_size != vocab.size()) {
    throw std::invalid_argument("model vocab_size does not match the vocabulary");
  }

  Transformer<float> model(model_config);
  model.init_random(cfg.seed);
  AdamWConfig opt_cfg;
  opt_cfg.learning_rate = cfg.learning_rate;
  opt_cfg.epsilon = cfg.adam_epsilon;
  opt_cfg.weight_decay = cfg.weight_decay;
  opt_cfg.warmup_steps = cfg.warmup_steps;
  AdamW<float> optimizer(model.params(), opt_cfg);
  Parameters<float> grads = Parameters<float>::zeros(model_config);
  const PrepareOptions opt = prepare_options(model_config, cfg);

  TrainResult result{model, {}, 0, 0};
  double best_valid = std::numeric_limits<double>::infinity();
  const std::size_t n = train_split.samples.size();
  const std::size_t per_step =
      static_cast<std::size_t>(cfg.batch_size) * static_cast<std::size_t>(cfg.grad_accum_steps);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 order_rng = epoch_rng(cfg.seed, epoch, 0);
    std::mt19937_64 dropout_rng = epoch_rng(cfg.seed, epoch, 1);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[order_rng() % i]);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += per_step) {
      const std::size_t end = std::min(n, begin + per_step);
      const float scale = 1.0f / static_cast<float>(end - begin);
      grads.set_zero();
      for (std::size_t i = begin; i < end; ++i) {
        const DialogueSample& sample = train_split.samples[order[i]];
        const PreparedSample p =
            prepare_sample(sample, epoch_order(sample.graph, cfg.seed, epoch, sample.id), vocab,
                           model, opt);
        double loss = 0.0;
        try {
          loss = model.accumulate_gradients(p.seq, compose_mask(p.seq, p.knowledge), grads, scale,
                                            &dropout_rng);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at optimizer step " +
                             std::to_string(optimizer.steps() + 1) + ", epoch " +
                             std::to_string(epoch));
        }
        epoch_loss += loss;
      }
      optimizer.step(model.params(), grads);
    }
    if (!model.params().all_finite()) {
      throw NumericError("parameters became non-finite in epoch " + std::to_string(epoch));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(n);
    rec.valid_loss = mean_loss(model, valid_split, vocab, cfg);
    result.history.push_back(rec);
    // Without validation data the last epoch wins.
    const double key = std::isnan(rec.valid_loss) ? -static_cast<double>(epoch) : rec.valid_loss;
    if (key < best_valid) {
      best_valid = key;
      result.best_epoch = epoch;
      result.model.params() = model.params();
    }
    if (on_epoch) on_epoch(rec);
  }
  result.optimizer_steps = optimizer.steps();
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(9);
  out << "epoch,train_loss,valid_loss\n";
  for (const auto& r : history) out << r.epoch << ',' << r.train_loss << ',' << r.valid_loss << '\n';
  return out.str();
}

}  // namespace kgdial
