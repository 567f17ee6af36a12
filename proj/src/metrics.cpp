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

#include "kgdial/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "kgdial/text.hpp"

namespace kgdial {

namespace {

using NGram = std::vector<std::string>;

std::map<NGram, int> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<NGram, int> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[NGram(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + n))];
  }
  return counts;
}

}  // namespace

double sentence_bleu(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
  if (hyp.empty()) return 0.0;
  constexpr std::size_t kMaxOrder = 4;
  double log_sum = 0.0;
  int orders = 0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    if (hyp.size() < n) break;
    const auto h = ngram_counts(hyp, n);
    const auto r = ngram_counts(ref, n);
    long matches = 0;
    for (const auto& [gram, count] : h) {
      auto it = r.find(gram);
      if (it != r.end()) matches += std::min(count, it->second);
    }
    const auto total = static_cast<double>(hyp.size() - n + 1);
    double precision;
    if (matches > 0) {
      precision = static_cast<double>(matches) / total;
    } else if (n == 1) {
      return 0.0;
    } else {
      precision = 1.0 / (2.0 * total);
    }
    log_sum += std::log(precision);
    ++orders;
  }
  const double c = static_cast<double>(hyp.size());
  const double rlen = static_cast<double>(ref.size());
  const double bp = c > rlen ? 1.0 : std::exp(1.0 - rlen / c);
  return bp * std::exp(log_sum / orders);
}

EntityExtractor::EntityExtractor(const std::vector<std::string>& lexicon) {
  for (const auto& phrase : lexicon) {
    auto tokens = split_tokens(phrase);
    if (tokens.empty()) continue;
    by_first_[tokens.front()].push_back(std::move(tokens));
  }
  for (auto& [_, cands] : by_first_) {
    std::stable_sort(cands.begin(), cands.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
  }
}

std::set<std::string> EntityExtractor::extract(const std::string& text) const {
  const auto tokens = split_tokens(text);
  std::set<std::string> found;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t consumed = 1;
    auto it = by_first_.find(tokens[i]);
    if (it != by_first_.end()) {
      for (const auto& cand : it->second) {
        if (i + cand.size() <= tokens.size() &&
            std::equal(cand.begin(), cand.end(), tokens.begin() + static_cast<long>(i))) {
          found.insert(join_tokens(cand));
          consumed = cand.size();
          break;
        }
      }
    }
    i += consumed;
  }
  return found;
}

double EntityCounts::f1() const {
  const long denom = 2 * tp + fp + fn;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double EntityCounts::precision() const {
  return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double EntityCounts::recall() const {
  return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

EntityCounts entity_counts(const std::set<std::string>& gold, const std::set<std::string>& predicted) {
  EntityCounts c;
  for (const auto& e : predicted) {
    if (gold.count(e)) {
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  for (const auto& e : gold) {
    if (!predicted.count(e)) ++c.fn;
  }
  return c;
}

EntityCounts entity_counts(const std::vector<std::string>& hypotheses,
                           const std::vector<std::string>& golds, const EntityExtractor& extractor) {
  if (hypotheses.size() != golds.size()) {
    throw std::invalid_argument("entity_f1: hypothesis and gold lists differ in length");
  }
  EntityCounts total;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    total += entity_counts(extractor.extract(golds[i]), extractor.extract(hypotheses[i]));
  }
  return total;
}

double entity_f1(const std::vector<std::string>& hypotheses, const std::vector<std::string>& golds,
                 const std::vector<std::string>& lexicon) {
  return entity_counts(hypotheses, golds, EntityExtractor(lexicon)).f1();
}

}  // namespace kgdial
