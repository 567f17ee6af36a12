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
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kgdial {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Schema violation in a dataset or graph file.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

// Well-formed JSON whose content breaks a dialogue invariant.
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

struct Entity {
  int id = 0;
  std::string surface;

  bool operator==(const Entity&) const = default;
};

struct RelationLabel {
  int id = 0;
  std::string surface;

  bool operator==(const RelationLabel&) const = default;
};

struct Triple {
  int subject = 0;
  int relation = 0;
  int object = 0;

  bool operator==(const Triple&) const = default;
};

// Entities and relations are numbered densely in first-appearance order over
// the triple list, subject before object.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  // Normalizes surfaces, registers new entities/relations and drops exact
  // duplicates. Returns false when the triple was already present.
  bool add_triple(std::string_view subject, std::string_view relation, std::string_view object);

  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<RelationLabel>& relations() const { return relations_; }
  const std::vector<Triple>& triples() const { return triples_; }

  std::optional<int> find_entity(std::string_view surface) const;
  std::optional<int> find_relation(std::string_view surface) const;

  const std::string& entity_surface(int id) const { return entities_.at(id).surface; }
  const std::string& relation_surface(int id) const { return relations_.at(id).surface; }

  bool empty() const { return triples_.empty(); }

  bool operator==(const KnowledgeGraph&) const = default;

 private:
  int intern_entity(const std::string& surface);
  int intern_relation(const std::string& surface);

  std::vector<Entity> entities_;
  std::vector<RelationLabel> relations_;
  std::vector<Triple> triples_;
};

enum class Speaker { kUser, kSystem };

std::string_view speaker_name(Speaker s);

struct DialogueTurn {
  Speaker speaker = Speaker::kUser;
  std::string text;

  bool operator==(const DialogueTurn&) const = default;
};

// One dialogue as stored on disk.
struct Dialogue {
  std::string id;
  std::string domain;
  KnowledgeGraph graph;
  std::vector<DialogueTurn> turns;

  bool operator==(const Dialogue&) const = default;
};

// A single (history, question, response) training/evaluation example.
struct DialogueSample {
  std::string id;
  std::string domain;
  KnowledgeGraph graph;
  std::vector<DialogueTurn> history;
  std::string question;
  std::string gold_response;

  bool operator==(const DialogueSample&) const = default;
};

struct DatasetSplit {
  std::string name;
  std::vector<Dialogue> dialogues;
  std::vector<DialogueSample> samples;

  bool operator==(const DatasetSplit&) const = default;
};

bool is_split_name(std::string_view name);

// Throws ValidationError when turns do not alternate or the dialogue does not
// end on a system turn.
void validate_turns(const std::string& dialogue_id, const std::vector<DialogueTurn>& turns);

// Every user turn followed by a system turn becomes one sample whose history
// is the full prefix before the user turn.
std::vector<DialogueSample> expand_dialogue(const Dialogue& dialogue);

DatasetSplit make_split(std::string name, std::vector<Dialogue> dialogues);

DatasetSplit load_dataset(const std::filesystem::path& path, std::string_view split);
DatasetSplit parse_dataset(std::string_view json_text, std::string_view split);

std::string dataset_to_json(const DatasetSplit& split);
void write_dataset(const DatasetSplit& split, const std::filesystem::path& path);

// Accepts either {"triples":[...]} or a wrapper object {"kg":{"triples":[...]}}.
KnowledgeGraph parse_graph(std::string_view json_text);
KnowledgeGraph load_graph(const std::filesystem::path& path);

// Union of entity surfaces, longest (in tokens) first, then lexicographic.
std::vector<std::string> entity_lexicon(const std::vector<DatasetSplit>& splits);

struct SynthConfig {
  int n_dialogues = 2000;
  int n_subjects_per_graph = 5;
  int n_relations = 4;
  std::uint64_t vocab_pool_seed = 17;
  std::uint64_t seed = 1;
};

// Template dialogues over random graphs. Deterministic for a given config.
DatasetSplit generate_synthetic(const SynthConfig& config, std::string name = "train");

// 80/10/10 partition of a generated corpus, in order.
std::vector<DatasetSplit> partition_splits(const DatasetSplit& all);

}  // namespace kgdial
