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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kgdial {

// Canonical text form used everywhere downstream: lowercase, single spaces,
// trailing punctuation of every word split off as its own token.
std::string normalize_text(std::string_view text);

std::vector<std::string> split_tokens(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

// 64-bit FNV-1a. Stable across platforms, used for seeding and vocab hashes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace kgdial
