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

#include "kgdial/text.hpp"

#include <cctype>
#include <cstdint>

namespace kgdial {

namespace {

bool is_terminal_punct(char c) {
  switch (c) {
    case '.': case ',': case '?': case '!': case ';': case ':':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size() + 8);
  for (const auto& word : split_tokens(text)) {
    std::string lowered;
    lowered.reserve(word.size());
    for (char c : word) {
      lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    // Peel trailing punctuation: "route?!" -> "route ? !".
    std::size_t stem_end = lowered.size();
    while (stem_end > 0 && is_terminal_punct(lowered[stem_end - 1])) --stem_end;
    auto emit = [&out](std::string_view piece) {
      if (piece.empty()) return;
      if (!out.empty()) out.push_back(' ');
      out.append(piece);
    };
    emit(std::string_view(lowered).substr(0, stem_end));
    for (std::size_t i = stem_end; i < lowered.size(); ++i) {
      emit(std::string_view(lowered).substr(i, 1));
    }
  }
  return out;
}

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace kgdial
