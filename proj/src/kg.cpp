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

#include "kgdial/kg.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kgdial/text.hpp"

namespace kgdial {

using json = nlohmann::json;

bool KnowledgeGraph::add_triple(std::string_view subject, std::string_view relation,
                                std::string_view object) {
  const std::string s = normalize_text(subject);
  const std::string r = normalize_text(relation);
  const std::string o = normalize_text(object);
  if (s.empty() || r.empty() || o.empty()) {
    throw ValidationError("triple has an empty surface after normalization");
  }
  // Look up before interning so a duplicate leaves the graph untouched.
  const auto si = find_entity(s);
  const auto ri = find_relation(r);
  const auto oi = find_entity(o);
  if (si && ri && oi) {
    const Triple probe{*si, *ri, *oi};
    if (std::find(triples_.begin(), triples_.end(), probe) != triples_.end()) return false;
  }
  Triple t;
  t.subject = intern_entity(s);
  t.relation = intern_relation(r);
  t.object = intern_entity(o);
  triples_.push_back(t);
  return true;
}

std::optional<int> KnowledgeGraph::find_entity(std::string_view surface) const {
  for (const auto& e : entities_) {
    if (e.surface == surface) return e.id;
  }
  return std::nullopt;
}

std::optional<int> KnowledgeGraph::find_relation(std::string_view surface) const {
  for (const auto& r : relations_) {
    if (r.surface == surface) return r.id;
  }
  return std::nullopt;
}

int KnowledgeGraph::intern_entity(const std::string& surface) {
  if (auto id = find_entity(surface)) return *id;
  const int id = static_cast<int>(entities_.size());
  entities_.push_back({id, surface});
  return id;
}

int KnowledgeGraph::intern_relation(const std::string& surface) {
  if (auto id = find_relation(surface)) return *id;
  const int id = static_cast<int>(relations_.size());
  relations_.push_back({id, surface});
  return id;
}

std::string_view speaker_name(Speaker s) { return s == Speaker::kUser ? "user" : "system"; }

bool is_split_name(std::string_view name) {
  return name == "train" || name == "valid" || name == "test";
}

void validate_turns(const std::string& dialogue_id, const std::vector<DialogueTurn>& turns) {
  if (turns.empty()) {
    throw ValidationError("dialogue '" + dialogue_id + "': no turns");
  }
  for (std::size_t i = 1; i < turns.size(); ++i) {
    if (turns[i].speaker == turns[i - 1].speaker) {
      throw ValidationError("dialogue '" + dialogue_id + "': turns " + std::to_string(i - 1) +
                            " and " + std::to_string(i) + " are both by " +
                            std::string(speaker_name(turns[i].speaker)));
    }
  }
  if (turns.back().speaker != Speaker::kSystem) {
    throw ValidationError("dialogue '" + dialogue_id + "': final turn must be a system turn");
  }
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (turns[i].text.empty()) {
      throw ValidationError("dialogue '" + dialogue_id + "': turn " + std::to_string(i) +
                            " is empty");
    }
  }
}

std::vector<DialogueSample> expand_dialogue(const Dialogue& dialogue) {
  std::vector<DialogueSample> samples;
  for (std::size_t i = 0; i + 1 < dialogue.turns.size(); ++i) {
    if (dialogue.turns[i].speaker != Speaker::kUser) continue;
    DialogueSample s;
    s.id = dialogue.id + "#" + std::to_string(samples.size());
    s.domain = dialogue.domain;
    s.graph = dialogue.graph;
    s.history.assign(dialogue.turns.begin(), dialogue.turns.begin() + static_cast<long>(i));
    s.question = dialogue.turns[i].text;
    s.gold_response = dialogue.turns[i + 1].text;
    samples.push_back(std::move(s));
  }
  return samples;
}

DatasetSplit make_split(std::string name, std::vector<Dialogue> dialogues) {
  DatasetSplit split;
  split.name = std::move(name);
  for (const auto& d : dialogues) {
    auto expanded = expand_dialogue(d);
    split.samples.insert(split.samples.end(), std::make_move_iterator(expanded.begin()),
                         std::make_move_iterator(expanded.end()));
  }
  split.dialogues = std::move(dialogues);
  return split;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void schema_error(const std::string& where, const std::string& field,
                               const std::string& what) {
  throw ParseError(where + ": field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_error(where, key, "enclosing value is not an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, key, "missing");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) schema_error(where, key, "expected a string");
  return v.get<std::string>();
}

KnowledgeGraph graph_from_json(const json& kg, const std::string& where) {
  KnowledgeGraph graph;
  const json& triples = require(kg, "triples", where);
  if (!triples.is_array()) schema_error(where, "kg.triples", "expected an array");
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const json& t = triples[i];
    const std::string field = "kg.triples[" + std::to_string(i) + "]";
    if (!t.is_array() || t.size() != 3 || !t[0].is_string() || !t[1].is_string() ||
        !t[2].is_string()) {
      schema_error(where, field, "expected [subject, relation, object] strings");
    }
    try {
      graph.add_triple(t[0].get<std::string>(), t[1].get<std::string>(),
                       t[2].get<std::string>());
    } catch (const ValidationError& e) {
      schema_error(where, field, e.what());
    }
  }
  return graph;
}

json graph_to_json(const KnowledgeGraph& graph) {
  json triples = json::array();
  for (const auto& t : graph.triples()) {
    triples.push_back({graph.entity_surface(t.subject), graph.relation_surface(t.relation),
                       graph.entity_surface(t.object)});
  }
  return json{{"triples", std::move(triples)}};
}

}  // namespace

DatasetSplit parse_dataset(std::string_view json_text, std::string_view split) {
  if (!is_split_name(split)) {
    throw DataError("unknown split name '" + std::string(split) + "'");
  }
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  const json& dialogues = require(root, "dialogues", "dataset");
  if (!dialogues.is_array()) schema_error("dataset", "dialogues", "expected an array");

  std::vector<Dialogue> parsed;
  parsed.reserve(dialogues.size());
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    const json& d = dialogues[i];
    std::string where = "dialogue #" + std::to_string(i);
    Dialogue dialogue;
    dialogue.id = require_string(d, "id", where);
    where = "dialogue '" + dialogue.id + "'";
    dialogue.domain = require_string(d, "domain", where);
    dialogue.graph = graph_from_json(require(d, "kg", where), where);
    const json& turns = require(d, "turns", where);
    if (!turns.is_array()) schema_error(where, "turns", "expected an array");
    for (std::size_t j = 0; j < turns.size(); ++j) {
      const std::string field = "turns[" + std::to_string(j) + "]";
      const std::string speaker = require_string(turns[j], "speaker", where + " " + field);
      DialogueTurn turn;
      if (speaker == "user") {
        turn.speaker = Speaker::kUser;
      } else if (speaker == "system") {
        turn.speaker = Speaker::kSystem;
      } else {
        schema_error(where, field + ".speaker", "must be \"user\" or \"system\"");
      }
      turn.text = normalize_text(require_string(turns[j], "text", where + " " + field));
      dialogue.turns.push_back(std::move(turn));
    }
    validate_turns(dialogue.id, dialogue.turns);
    parsed.push_back(std::move(dialogue));
  }
  return make_split(std::string(split), std::move(parsed));
}

DatasetSplit load_dataset(const std::filesystem::path& path, std::string_view split) {
  return parse_dataset(read_file(path), split);
}

std::string dataset_to_json(const DatasetSplit& split) {
  json dialogues = json::array();
  for (const auto& d : split.dialogues) {
    json turns = json::array();
    for (const auto& t : d.turns) {
      turns.push_back(json{{"speaker", speaker_name(t.speaker)}, {"text", t.text}});
    }
    dialogues.push_back(json{{"id", d.id},
                             {"domain", d.domain},
                             {"kg", graph_to_json(d.graph)},
                             {"turns", std::move(turns)}});
  }
  return json{{"dialogues", std::move(dialogues)}}.dump(1) + "\n";
}

void write_dataset(const DatasetSplit& split, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << dataset_to_json(split);
}

KnowledgeGraph parse_graph(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (root.is_object() && root.contains("kg")) return graph_from_json(root["kg"], "graph file");
  return graph_from_json(root, "graph file");
}

KnowledgeGraph load_graph(const std::filesystem::path& path) {
  return parse_graph(read_file(path));
}

std::vector<std::string> entity_lexicon(const std::vector<DatasetSplit>& splits) {
  std::set<std::string> surfaces;
  for (const auto& split : splits) {
    for (const auto& d : split.dialogues) {
      for (const auto& e : d.graph.entities()) surfaces.insert(e.surface);
    }
    // Samples built by hand may carry graphs without a dialogue record.
    for (const auto& s : split.samples) {
      for (const auto& e : s.graph.entities()) surfaces.insert(e.surface);
    }
  }
  std::vector<std::pair<std::size_t, std::string>> keyed;
  keyed.reserve(surfaces.size());
  for (const auto& s : surfaces) keyed.emplace_back(split_tokens(s).size(), s);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> lexicon;
  lexicon.reserve(keyed.size());
  for (auto& [_, s] : keyed) lexicon.push_back(std::move(s));
  return lexicon;
}

}  // namespace kgdial
