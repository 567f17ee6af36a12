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

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kgdial/kg.hpp"

namespace kgdial {

namespace {

constexpr std::array<const char*, 12> kRelationNames = {
    "distance", "address", "traffic", "food",  "area",  "pricerange",
    "phone",    "rating",  "parking", "owner", "hours", "color",
};

constexpr std::array<const char*, 2> kQuestionTemplates = {
    "what is the {r} of {s} ?",
    "can you tell me the {r} of {s} ?",
};

constexpr const char* kResponseTemplate = "the {r} of {s} is {o}";

std::string fill(std::string tmpl, const std::string& s, const std::string& r,
                 const std::string& o = {}) {
  auto replace = [&tmpl](const std::string& key, const std::string& value) {
    for (auto pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key)) {
      tmpl.replace(pos, key.size(), value);
    }
  };
  replace("{s}", s);
  replace("{r}", r);
  replace("{o}", o);
  return tmpl;
}

// Pronounceable pseudo-words; none collide with template or relation words.
std::vector<std::string> make_word_pool(std::uint64_t seed, std::size_t count) {
  static const std::array<const char*, 16> onsets = {"b", "d",  "f",  "g", "k", "l", "m", "n",
                                                     "p", "r",  "s",  "t", "v", "z", "ch", "sh"};
  static const std::array<const char*, 5> vowels = {"a", "e", "i", "o", "u"};
  static const std::array<const char*, 5> codas = {"", "", "n", "r", "l"};
  std::set<std::string> reserved = {"what", "is", "the", "of", "can", "you", "tell", "me"};
  for (const char* r : kRelationNames) reserved.insert(r);

  std::mt19937_64 rng(seed);
  std::set<std::string> seen;
  std::vector<std::string> pool;
  while (pool.size() < count) {
    const int syllables = 2 + static_cast<int>(rng() % 2);
    std::string word;
    for (int i = 0; i < syllables; ++i) {
      word += onsets[rng() % onsets.size()];
      word += vowels[rng() % vowels.size()];
    }
    word += codas[rng() % codas.size()];
    if (reserved.count(word) || !seen.insert(word).second) continue;
    pool.push_back(word);
  }
  return pool;
}

std::vector<std::string> relation_names(int n_relations) {
  std::vector<std::string> names(kRelationNames.begin(), kRelationNames.end());
  for (int k = static_cast<int>(names.size()); k < n_relations; ++k) {
    names.push_back("attribute " + std::to_string(k));
  }
  return names;
}

// Draws `k` distinct indices from [0, n) in draw order.
std::vector<std::size_t> draw_distinct(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

DatasetSplit generate_synthetic(const SynthConfig& config, std::string name) {
  if (config.n_subjects_per_graph < 1 || config.n_relations < 1) {
    throw std::invalid_argument("synthetic config needs at least one subject and one relation");
  }
  const auto n_subjects = static_cast<std::size_t>(config.n_subjects_per_graph);
  const auto n_relations = static_cast<std::size_t>(config.n_relations);
  const std::size_t needed = n_subjects * (n_relations + 1);
  const auto pool = make_word_pool(config.vocab_pool_seed, std::max<std::size_t>(300, 2 * needed));
  const auto relations = relation_names(config.n_relations);

  std::vector<Dialogue> dialogues;
  dialogues.reserve(static_cast<std::size_t>(std::max(0, config.n_dialogues)));
  for (int d = 0; d < config.n_dialogues; ++d) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(d)};
    std::mt19937_64 rng(seq);

    const auto rel_idx = draw_distinct(rng, relations.size(), n_relations);
    const auto word_idx = draw_distinct(rng, pool.size(), needed);

    Dialogue dialogue;
    dialogue.id = "synth-" + std::to_string(config.seed) + "-" + std::to_string(d);
    dialogue.domain = "synthetic";
    std::vector<std::vector<std::string>> objects(n_subjects);
    for (std::size_t s = 0; s < n_subjects; ++s) {
      for (std::size_t r = 0; r < n_relations; ++r) {
        const std::string& object = pool[word_idx[n_subjects + s * n_relations + r]];
        objects[s].push_back(object);
        dialogue.graph.add_triple(pool[word_idx[s]], relations[rel_idx[r]], object);
      }
    }

    const int exchanges = 1 + static_cast<int>(rng() % 3);
    for (int t = 0; t < exchanges; ++t) {
      const std::size_t s = rng() % n_subjects;
      const std::size_t r = rng() % n_relations;
      const auto& subject = pool[word_idx[s]];
      const auto& relation = relations[rel_idx[r]];
      const char* tmpl = kQuestionTemplates[rng() % kQuestionTemplates.size()];
      dialogue.turns.push_back({Speaker::kUser, fill(tmpl, subject, relation)});
      dialogue.turns.push_back(
          {Speaker::kSystem, fill(kResponseTemplate, subject, relation, objects[s][r])});
    }
    dialogues.push_back(std::move(dialogue));
  }
  return make_split(std::move(name), std::move(dialogues));
}

std::vector<DatasetSplit> partition_splits(const DatasetSplit& all) {
  const std::size_t n = all.dialogues.size();
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_valid = n / 10;
  auto slice = [&all](std::string name, std::size_t begin, std::size_t end) {
    std::vector<Dialogue> part(all.dialogues.begin() + static_cast<long>(begin),
                               all.dialogues.begin() + static_cast<long>(end));
    return make_split(std::move(name), std::move(part));
  };
  return {slice("train", 0, n_train), slice("valid", n_train, n_train + n_valid),
          slice("test", n_train + n_valid, n)};
}

}  // namespace kgdial
