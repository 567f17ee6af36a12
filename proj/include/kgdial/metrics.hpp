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

#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgdial {

// Sentence BLEU-4 with brevity penalty, in [0, 1].
//  - Only orders for which the hypothesis has at least one n-gram enter the
//    geometric mean (effective order), so short exact matches score 1.
//  - An order with zero clipped matches uses 1 / (2 * hypothesis n-gram
//    count) in place of its precision; this applies to orders >= 2 only.
//  - No unigram match at all, or an empty hypothesis, scores 0.
double sentence_bleu(const std::vector<std::string>& hypothesis,
                     const std::vector<std::string>& reference);

inline constexpr const char* kBleuDescription =
    "sentence BLEU-4, brevity penalty, effective order, zero-match orders >= 2 smoothed "
    "by 1/(2*hyp n-gram count), zero unigram matches -> 0";

// Longest-match phrase scan over a fixed lexicon. Each token is consumed by at
// most one entity.
class EntityExtractor {
 public:
  explicit EntityExtractor(const std::vector<std::string>& lexicon);
  std::set<std::string> extract(const std::string& normalized_text) const;

 private:
  // first token -> candidate phrases (tokenized), longest first
  std::unordered_map<std::string, std::vector<std::vector<std::string>>> by_first_;
};

struct EntityCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  EntityCounts& operator+=(const EntityCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  // 2TP / (2TP + FP + FN); 1 when there is nothing to find and nothing found.
  double f1() const;
  double precision() const;
  double recall() const;
};

EntityCounts entity_counts(const std::set<std::string>& gold, const std::set<std::string>& predicted);

// Micro-averaged Entity F1 over aligned hypothesis/gold lists, in [0, 1].
double entity_f1(const std::vector<std::string>& hypotheses, const std::vector<std::string>& golds,
                 const std::vector<std::string>& lexicon);

EntityCounts entity_counts(const std::vector<std::string>& hypotheses,
                           const std::vector<std::string>& golds, const EntityExtractor& extractor);

}  // namespace kgdial
