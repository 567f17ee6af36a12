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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgdial/kg.hpp"

namespace kgdial {

// Special token ids. They occupy the lowest ids in this order.
enum SpecialToken : int {
  kPad = 0,
  kBos = 1,
  kEos = 2,
  kSep = 3,
  kQuestion = 4,
  kSubject = 5,
  kRelation = 6,
  kObject = 7,
  kUnk = 8,
  kNumSpecials = 9,
};

inline constexpr std::array<std::string_view, kNumSpecials> kSpecialTokens = {
    "[PAD]", "[BOS]", "[EOS]", "[SEP]", "[Q]", "[S]", "[R]", "[O]", "[UNK]"};

class Vocabulary {
 public:
  // Specials only.
  Vocabulary();

  // `tokens` must start with the specials in canonical order.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int id(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  std::vector<int> encode(std::string_view text) const;
  // Skips specials.
  std::string decode(const std::vector<int>& ids) const;

  // Hash of the serialized vocabulary file.
  std::uint64_t hash() const;

  std::string serialize() const;
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Whitespace tokens from all turns and all KG surfaces with frequency >=
// min_freq. Specials first, then frequency-descending, ties lexicographic.
Vocabulary build_vocab(const std::vector<DatasetSplit>& splits, int min_freq);

}  // namespace kgdial
