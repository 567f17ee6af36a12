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

#include "kgdial/kg.hpp"
#include "kgdial/text.hpp"

namespace kgdial {
namespace {

const char* kMinimal = R"({"dialogues":[{"id":"d1","domain":"navigate",
  "kg":{"triples":[["Starbucks","distance","4 miles"],["starbucks","address","792 Bedoin St"]]},
  "turns":[{"speaker":"user","text":"Where is Starbucks?"},
           {"speaker":"system","text":"Starbucks is 4 miles away."}]}]})";

TEST(Text, NormalizeLowercasesAndSplitsPunctuation) {
  EXPECT_EQ(normalize_text("  Where IS   Starbucks?"), "where is starbucks ?");
  EXPECT_EQ(normalize_text("4 miles away."), "4 miles away .");
  EXPECT_EQ(normalize_text("a,b"), "a,b");
  EXPECT_EQ(normalize_text(""), "");
}

TEST(Text, SplitAndJoin) {
  const auto toks = split_tokens(" a  b c ");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(join_tokens(toks), "a b c");
}

TEST(KnowledgeGraph, InternsInFirstAppearanceOrderAndDedups) {
  KnowledgeGraph g;
  EXPECT_TRUE(g.add_triple("Starbucks", "distance", "4 miles"));
  EXPECT_FALSE(g.add_triple("starbucks", "DISTANCE", "4  miles"));
  EXPECT_TRUE(g.add_triple("home", "distance", "starbucks"));
  ASSERT_EQ(g.entities().size(), 3u);
  EXPECT_EQ(g.entity_surface(0), "starbucks");
  EXPECT_EQ(g.entity_surface(1), "4 miles");
  EXPECT_EQ(g.entity_surface(2), "home");
  EXPECT_EQ(g.relations().size(), 1u);
  EXPECT_EQ(g.triples().size(), 2u);
  EXPECT_EQ(g.triples()[1].object, 0);
}

TEST(Dataset, MinimalFile) {
  const DatasetSplit s = parse_dataset(kMinimal, "test");
  ASSERT_EQ(s.samples.size(), 1u);
  EXPECT_EQ(s.samples[0].graph.triples().size(), 2u);
  EXPECT_EQ(s.samples[0].question, "where is starbucks ?");
  EXPECT_EQ(s.samples[0].gold_response, "starbucks is 4 miles away .");
  EXPECT_TRUE(s.samples[0].history.empty());
}

TEST(Dataset, AdjacentUserTurnsRejected) {
  const char* bad = R"({"dialogues":[{"id":"x7","domain":"d","kg":{"triples":[]},
    "turns":[{"speaker":"user","text":"hi"},{"speaker":"user","text":"hello"},
             {"speaker":"system","text":"yes"}]}]})";
  try {
    parse_dataset(bad, "train");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("x7"), std::string::npos);
  }
}

TEST(Dataset, SchemaErrorNamesIdAndField) {
  const char* bad = R"({"dialogues":[{"id":"q9","domain":"d","kg":{"triples":[["a","b"]]},
    "turns":[{"speaker":"user","text":"hi"},{"speaker":"system","text":"yes"}]}]})";
  try {
    parse_dataset(bad, "train");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("q9"), std::string::npos) << msg;
    EXPECT_NE(msg.find("triples"), std::string::npos) << msg;
  }
  EXPECT_THROW(parse_dataset("{not json", "train"), ParseError);
}

TEST(Dataset, MissingFileIsDataError) {
  EXPECT_THROW(load_dataset("/nonexistent/file.json", "train"), DataError);
}

TEST(Dataset, SingleExchangeDialoguesGiveOneSampleEach) {
  SynthConfig cfg;
  cfg.n_dialogues = 40;
  const DatasetSplit all = generate_synthetic(cfg);
  std::vector<Dialogue> single;
  for (Dialogue d : all.dialogues) {
    d.turns.resize(2);
    single.push_back(d);
  }
  const DatasetSplit s = make_split("train", single);
  EXPECT_EQ(s.samples.size(), s.dialogues.size());
}

TEST(Dataset, MultiTurnExpansion) {
  Dialogue d;
  d.id = "m";
  d.graph.add_triple("a", "b", "c");
  d.turns = {{Speaker::kUser, "u1"}, {Speaker::kSystem, "s1"}, {Speaker::kUser, "u2"},
             {Speaker::kSystem, "s2"}};
  const auto samples = expand_dialogue(d);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[0].id, "m#0");
  EXPECT_EQ(samples[1].history.size(), 2u);
  EXPECT_EQ(samples[1].question, "u2");
  EXPECT_EQ(samples[1].gold_response, "s2");
}

TEST(Dataset, RoundTrip) {
  SynthConfig cfg;
  cfg.n_dialogues = 25;
  const DatasetSplit a = generate_synthetic(cfg, "train");
  const auto path = std::filesystem::temp_directory_path() / "kgdial_roundtrip.json";
  write_dataset(a, path);
  const DatasetSplit b = load_dataset(path, "train");
  std::filesystem::remove(path);
  EXPECT_EQ(a.dialogues, b.dialogues);
  EXPECT_EQ(a.samples, b.samples);
}

TEST(Lexicon, LengthMajorOrder) {
  KnowledgeGraph g;
  g.add_triple("starbucks", "distance", "4 miles");
  DatasetSplit s;
  s.samples.push_back({"x#0", "", g, {}, "q", "r"});
  EXPECT_EQ(entity_lexicon({s}), (std::vector<std::string>{"4 miles", "starbucks"}));
}

TEST(Lexicon, DuplicatesOnceAndEmpty) {
  KnowledgeGraph g1, g2;
  g1.add_triple("a", "r", "b");
  g2.add_triple("b", "r", "c");
  DatasetSplit s;
  s.samples.push_back({"x#0", "", g1, {}, "q", "r"});
  s.samples.push_back({"y#0", "", g2, {}, "q", "r"});
  EXPECT_EQ(entity_lexicon({s}), (std::vector<std::string>{"a", "b", "c"}));
  DatasetSplit empty;
  empty.samples.push_back({"z#0", "", KnowledgeGraph{}, {}, "q", "r"});
  EXPECT_TRUE(entity_lexicon({empty}).empty());
}

TEST(Lexicon, AddingAGraphNeverRemovesEntries) {
  SynthConfig cfg;
  cfg.n_dialogues = 30;
  const DatasetSplit all = generate_synthetic(cfg);
  DatasetSplit grow;
  std::vector<std::string> prev;
  for (const auto& s : all.samples) {
    grow.samples.push_back(s);
    const auto lex = entity_lexicon({grow});
    for (const auto& e : prev) EXPECT_NE(std::find(lex.begin(), lex.end(), e), lex.end());
    prev = lex;
  }
}

TEST(Synthetic, SingleSubjectSingleRelation) {
  SynthConfig cfg{1, 1, 1, 17, 7};
  const DatasetSplit s = generate_synthetic(cfg);
  ASSERT_EQ(s.dialogues.size(), 1u);
  const auto& g = s.dialogues[0].graph;
  ASSERT_EQ(g.triples().size(), 1u);
  const std::string object = g.entity_surface(g.triples()[0].object);
  for (const auto& sample : s.samples) {
    EXPECT_NE(sample.gold_response.find(object), std::string::npos);
  }
}

TEST(Synthetic, DeterministicAndShaped) {
  SynthConfig cfg;  // 2000 x (5 x 4), seed 1
  const DatasetSplit a = generate_synthetic(cfg);
  const DatasetSplit b = generate_synthetic(cfg);
  EXPECT_EQ(dataset_to_json(a), dataset_to_json(b));
  ASSERT_EQ(a.dialogues.size(), 2000u);
  for (const auto& d : a.dialogues) {
    ASSERT_EQ(d.graph.triples().size(), 20u);
    const std::size_t turns = d.turns.size();
    EXPECT_TRUE(turns >= 2 && turns <= 6 && turns % 2 == 0);
    std::set<int> objects;
    for (const auto& t : d.graph.triples()) objects.insert(t.object);
    EXPECT_EQ(objects.size(), 20u);
  }
}

TEST(Synthetic, GoldResponsesHoldExactlyOneObject) {
  SynthConfig cfg;
  cfg.n_dialogues = 100;
  for (const auto& s : generate_synthetic(cfg).samples) {
    int hits = 0;
    for (const auto& t : s.graph.triples()) {
      const std::string& o = s.graph.entity_surface(t.object);
      const auto toks = split_tokens(s.gold_response);
      hits += static_cast<int>(std::count(toks.begin(), toks.end(), o));
    }
    EXPECT_EQ(hits, 1) << s.id;
  }
}

TEST(Synthetic, PartitionIsEightyTenTen) {
  SynthConfig cfg;
  cfg.n_dialogues = 10;
  const auto parts = partition_splits(generate_synthetic(cfg));
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0].dialogues.size(), 8u);
  EXPECT_EQ(parts[1].dialogues.size(), 1u);
  EXPECT_EQ(parts[2].dialogues.size(), 1u);
  EXPECT_EQ(parts[0].name, "train");
  EXPECT_EQ(parts[1].name, "valid");
  EXPECT_EQ(parts[2].name, "test");
}

}  // namespace
}  // namespace kgdial
