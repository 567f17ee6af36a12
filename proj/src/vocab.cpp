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

#include "kgdial/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "kgdial/text.hpp"

namespace kgdial {

Vocabulary::Vocabulary() {
  for (auto s : kSpecialTokens) {
    token_to_id_.emplace(std::string(s), static_cast<int>(id_to_token_.size()));
    id_to_token_.emplace_back(s);
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kNumSpecials) throw std::invalid_argument("vocabulary lacks specials");
  for (int i = 0; i < kNumSpecials; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != kSpecialTokens[static_cast<std::size_t>(i)]) {
      throw std::invalid_argument("vocabulary line " + std::to_string(i) + " must be " +
                                  std::string(kSpecialTokens[static_cast<std::size_t>(i)]));
    }
  }
  Vocabulary v;
  v.token_to_id_.clear();
  v.id_to_token_ = std::move(tokens);
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
    const auto& t = v.id_to_token_[i];
    if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos) {
      throw std::invalid_argument("invalid vocabulary token at line " + std::to_string(i));
    }
    if (!v.token_to_id_.emplace(t, static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + t + "'");
    }
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) != 0;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& t : split_tokens(text)) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> words;
  for (int i : ids) {
    if (i == kUnk || i >= kNumSpecials) words.push_back(token(i));
  }
  return join_tokens(words);
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : id_to_token_) {
    out += t;
    out.push_back('\n');
  }
  return out;
}

std::uint64_t Vocabulary::hash() const { return fnv1a64(serialize()); }

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path.string());
  out << serialize();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vocabulary: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  try {
    return from_tokens(std::move(tokens));
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Vocabulary build_vocab(const std::vector<DatasetSplit>& splits, int min_freq) {
  if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");
  std::map<std::string, long> freq;
  auto count = [&freq](std::string_view text) {
    for (auto& t : split_tokens(text)) ++freq[t];
  };
  for (const auto& split : splits) {
    for (const auto& d : split.dialogues) {
      for (const auto& t : d.turns) count(t.text);
      for (const auto& e : d.graph.entities()) count(e.surface);
      for (const auto& r : d.graph.relations()) count(r.surface);
    }
    if (!split.dialogues.empty()) continue;
    for (const auto& s : split.samples) {
      for (const auto& t : s.history) count(t.text);
      count(s.question);
      count(s.gold_response);
      for (const auto& e : s.graph.entities()) count(e.surface);
      for (const auto& r : s.graph.relations()) count(r.surface);
    }
  }
  if (freq.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty corpus");

  std::vector<std::pair<std::string, long>> ranked;
  for (auto& [tok, n] : freq) {
    if (n < min_freq) continue;
    if (std::find(kSpecialTokens.begin(), kSpecialTokens.end(), tok) != kSpecialTokens.end()) {
      continue;
    }
    ranked.emplace_back(tok, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::string> tokens(kSpecialTokens.begin(), kSpecialTokens.end());
  for (auto& [tok, _] : ranked) tokens.push_back(tok);
  return Vocabulary::from_tokens(std::move(tokens));
}

}  // namespace kgdial
