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

#include <filesystem>
#include <fstream>

#include "kgdial/checkpoint.hpp"
#include "oracles.hpp"

namespace kgdial {
namespace {

namespace fs = std::filesystem;

class CheckpointTest : public ::testing::Test {
 protected:
  fs::path dir = fs::temp_directory_path() / "kgdial_ckpt_test";
  void SetUp() override { fs::create_directories(dir); }
  void TearDown() override { fs::remove_all(dir); }

  std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  void write(const fs::path& p, const std::string& bytes) { std::ofstream(p, std::ios::binary) << bytes; }
};

TEST_F(CheckpointTest, RoundTripIsExact) {
  ModelConfig cfg = kgdial::testing::tiny_config(50);
  cfg.ablation.no_kg_mask = true;
  Transformer<float> m(cfg);
  m.init_random(12);
  nlohmann::ordered_json meta{{"note", "x"}, {"ablation", {"no-kg-mask"}}};
  save_checkpoint(dir / "m.ckpt", m, 0x0123456789abcdefULL, meta);
  const Checkpoint c = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(c.config, cfg);
  EXPECT_EQ(c.vocab_hash, 0x0123456789abcdefULL);
  EXPECT_EQ(c.meta, meta);
  const auto a = c.params.named();
  const auto b = m.params().named();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].second, *b[i].second) << a[i].first;
  const Transformer<float> back = model_from_checkpoint(c);
  save_checkpoint(dir / "m2.ckpt", back, c.vocab_hash, c.meta);
  EXPECT_EQ(read(dir / "m.ckpt"), read(dir / "m2.ckpt"));
}

TEST_F(CheckpointTest, LayoutIsHeaderLineThenLittleEndianFloats) {
  const ModelConfig cfg = kgdial::testing::tiny_config(50);
  Transformer<float> m(cfg);
  m.init_random(1);
  m.params().token(0, 0) = 1.0f;  // 0x3f800000
  save_checkpoint(dir / "m.ckpt", m, 7, nlohmann::ordered_json::object());
  const std::string bytes = read(dir / "m.ckpt");
  const auto nl = bytes.find('\n');
  ASSERT_NE(nl, std::string::npos);
  const auto header = nlohmann::json::parse(bytes.substr(0, nl));
  EXPECT_EQ(header["vocab_hash"], "0000000000000007");
  EXPECT_EQ(header["tensors"][0]["name"], "embed.token");
  EXPECT_EQ(bytes.size() - nl - 1, m.params().count() * 4);
  EXPECT_EQ(static_cast<unsigned char>(bytes[nl + 1]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[nl + 3]), 0x80);
  EXPECT_EQ(static_cast<unsigned char>(bytes[nl + 4]), 0x3f);
}

TEST_F(CheckpointTest, CorruptionDetected) {
  const ModelConfig cfg = kgdial::testing::tiny_config(50);
  Transformer<float> m(cfg);
  save_checkpoint(dir / "m.ckpt", m, 1, nlohmann::ordered_json::object());
  const std::string bytes = read(dir / "m.ckpt");
  write(dir / "trunc.ckpt", bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(load_checkpoint(dir / "trunc.ckpt"), CheckpointError);
  write(dir / "extra.ckpt", bytes + "x");
  EXPECT_THROW(load_checkpoint(dir / "extra.ckpt"), CheckpointError);
  write(dir / "junk.ckpt", "not json\n");
  EXPECT_THROW(load_checkpoint(dir / "junk.ckpt"), CheckpointError);
  write(dir / "other.ckpt", "{\"format\":\"other\",\"version\":1}\n");
  EXPECT_THROW(load_checkpoint(dir / "other.ckpt"), CheckpointError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), CheckpointError);
}

TEST(Checkpoint, HashHex) {
  EXPECT_EQ(hash_to_hex(0), "0000000000000000");
  EXPECT_EQ(hash_to_hex(0xffffffffffffffffULL), "ffffffffffffffff");
}

}  // namespace
}  // namespace kgdial
