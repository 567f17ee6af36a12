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

#include "kgdial/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "kgdial/pipeline.hpp"
#include "kgdial/text.hpp"

namespace kgdial {

std::uint64_t sample_seed(std::uint64_t seed, const std::string& sample_id) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed ^ fnv1a64(sample_id);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<std::string> sorted(const std::set<std::string>& s) { return {s.begin(), s.end()}; }

SampleRecord run_sample(const Transformer<float>& model, const DialogueSample& sample,
                        const Vocabulary& vocab, const EvalOptions& options,
                        const EntityExtractor& extractor) {
  SampleRecord rec;
  rec.id = sample.id;
  rec.question = sample.question;
  rec.gold = normalize_text(sample.gold_response);
  if (options.hyp_from_gold) {
    rec.hypothesis = rec.gold;
  } else {
    PrepareOptions prep;
    prep.k_entity = options.k_entity;
    prep.k_relation = options.k_relation;
    prep.limits = options.limits;
    prep.use_kg_mask = !model.config().ablation.no_kg_mask;
    prep.with_response = false;
    const PreparedSample p = prepare_sample(sample, file_order(sample.graph), vocab, model, prep);
    DecodingParams dp = options.decoding;
    dp.seed = sample_seed(options.decoding.seed, sample.id);
    rec.hypothesis = vocab.decode(sample_response(model, p.seq, p.knowledge, dp));
  }
  rec.bleu = sentence_bleu(split_tokens(rec.hypothesis), split_tokens(rec.gold));
  rec.gold_entities = sorted(extractor.extract(rec.gold));
  rec.predicted_entities = sorted(extractor.extract(rec.hypothesis));
  return rec;
}

}  // namespace

EvalReport evaluate(const Transformer<float>& model, const DatasetSplit& split,
                    const Vocabulary& vocab, const EvalOptions& options,
                    std::vector<std::string> lexicon) {
  options.decoding.validate();
  if (options.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (model.config().vocab_size != vocab.size()) {
    throw std::invalid_argument("model vocab_size does not match the vocabulary");
  }
  if (lexicon.empty()) lexicon = entity_lexicon({split});
  const EntityExtractor extractor(lexicon);

  EvalReport report;
  report.k_entity = options.k_entity;
  report.k_relation = options.k_relation;
  const std::size_t n = split.samples.size();
  report.records.resize(n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        report.records[i] = run_sample(model, split.samples[i], vocab, options, extractor);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(options.threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  double bleu_sum = 0.0;
  for (const auto& rec : report.records) {
    bleu_sum += rec.bleu;
    report.counts += entity_counts(std::set<std::string>(rec.gold_entities.begin(), rec.gold_entities.end()),
                                   std::set<std::string>(rec.predicted_entities.begin(),
                                                         rec.predicted_entities.end()));
  }
  report.bleu = n == 0 ? 0.0 : 100.0 * bleu_sum / static_cast<double>(n);
  report.entity_f1 = 100.0 * report.counts.f1();
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report, const nlohmann::ordered_json& config) {
  nlohmann::ordered_json j;
  j["bleu_method"] = kBleuDescription;
  j["entity_f1_method"] = "longest-match phrase extraction over a normalized lexicon, micro-averaged";
  j["config"] = config;
  j["metrics"] = {{"bleu", report.bleu},
                  {"entity_f1", report.entity_f1},
                  {"precision", 100.0 * report.counts.precision()},
                  {"recall", 100.0 * report.counts.recall()},
                  {"tp", report.counts.tp},
                  {"fp", report.counts.fp},
                  {"fn", report.counts.fn},
                  {"k_entity", report.k_entity},
                  {"k_relation", report.k_relation},
                  {"samples", report.records.size()}};
  auto& samples = j["samples"] = nlohmann::ordered_json::array();
  for (const auto& r : report.records) {
    samples.push_back({{"id", r.id},
                       {"question", r.question},
                       {"gold", r.gold},
                       {"hypothesis", r.hypothesis},
                       {"gold_entities", r.gold_entities},
                       {"predicted_entities", r.predicted_entities},
                       {"bleu", 100.0 * r.bleu}});
  }
  return j;
}

namespace {

std::string k_label(int k) { return k == kSelectAll ? "all" : std::to_string(k); }

}  // namespace

void print_metrics_table(std::ostream& out, const std::vector<EvalReport>& reports) {
  char line[128];
  std::snprintf(line, sizeof line, "%-8s %-10s %8s %10s %8s\n", "k_ent", "k_rel", "BLEU", "EntityF1",
                "samples");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-8s %-10s %8.2f %10.2f %8zu\n", k_label(r.k_entity).c_str(),
                  k_label(r.k_relation).c_str(), r.bleu, r.entity_f1, r.records.size());
    out << line;
  }
}

}  // namespace kgdial
