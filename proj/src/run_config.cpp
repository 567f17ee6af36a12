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

#include "kgdial/run_config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "kgdial/graph_weight.hpp"

namespace kgdial {

namespace {

using Json = nlohmann::json;

struct KeySpec {
  ConfigKey key;
  std::function<Json(const RunConfig&)> get;
  std::function<void(RunConfig&, const Json&)> set;
};

template <typename T>
T as(const Json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.get<long long>() < 0) throw ConfigError("");
      }
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + v.dump());
  }
}

// Selection sizes accept "all" as well as integers.
KeySpec top_k_key(const std::string& name, int TrainConfig::*field, const std::string& help) {
  return KeySpec{{name, help + " (integer or \"all\")"},
                 [field](const RunConfig& c) {
                   const int k = c.train.*field;
                   return k == kSelectAll ? Json("all") : Json(k);
                 },
                 [name, field](RunConfig& c, const Json& v) {
                   c.train.*field = v == "all" ? kSelectAll : as<int>(v, name);
                 }};
}

#define KG_KEY(NAME, TYPE, FIELD, HELP)                                   \
  KeySpec {                                                                 \
    {NAME, HELP}, [](const RunConfig& c) { return Json(c.FIELD); },         \
        [](RunConfig& c, const Json& v) { c.FIELD = as<TYPE>(v, NAME); }    \
  }

const std::vector<KeySpec>& specs() {
  static const std::vector<KeySpec> table = {
      KG_KEY("d_model", int, model.d_model, "hidden size"),
      KG_KEY("n_heads", int, model.n_heads, "attention heads"),
      KG_KEY("n_layers", int, model.n_layers, "decoder blocks"),
      KG_KEY("d_ff", int, model.d_ff, "feed-forward width"),
      KG_KEY("max_positions", int, model.max_positions, "position embedding rows"),
      KG_KEY("max_entity_ids", int, model.max_entity_ids, "entity embedding rows"),
      KG_KEY("max_triple_ids", int, model.max_triple_ids, "triple embedding rows"),
      KG_KEY("dropout", double, model.dropout, "dropout probability during training"),
      KeySpec{{"ablation",
               "comma-separated: no-entity-emb, no-triple-emb, no-type-emb, no-kg-mask, seq2seq"},
              [](const RunConfig& c) { return Json(ablation_names(c.model.ablation)); },
              [](RunConfig& c, const Json& v) {
                if (!v.is_array()) {
                  throw ConfigError("config key 'ablation' must be a list of names");
                }
                Ablation a;
                for (const auto& name : v) {
                  if (!name.is_string()) throw ConfigError("ablation names must be strings");
                  try {
                    apply_ablation_name(a, name.get<std::string>());
                  } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                  }
                }
                c.model.ablation = a;
              }},
      KG_KEY("learning_rate", double, train.learning_rate, "AdamW learning rate"),
      KG_KEY("adam_epsilon", double, train.adam_epsilon, "AdamW epsilon"),
      KG_KEY("weight_decay", double, train.weight_decay, "decoupled weight decay"),
      KG_KEY("warmup_steps", int, train.warmup_steps, "linear warmup steps, 0 = constant rate"),
      KG_KEY("batch_size", int, train.batch_size, "samples per micro-batch"),
      KG_KEY("grad_accum_steps", int, train.grad_accum_steps, "micro-batches per update"),
      KG_KEY("epochs", int, train.epochs, "training epochs"),
      KG_KEY("seed", std::uint64_t, train.seed, "initialization, shuffling and dropout seed"),
      top_k_key("k_entity", &TrainConfig::k_entity, "top-k entities kept by the knowledge mask"),
      top_k_key("k_relation", &TrainConfig::k_relation, "top-k relations kept by the knowledge mask"),
      KG_KEY("max_knowledge_tokens", int, train.limits.max_knowledge_tokens,
             "knowledge segment budget"),
      KG_KEY("max_history_tokens", int, train.limits.max_history_tokens, "history token budget"),
      KG_KEY("max_history_turns", int, train.limits.max_history_turns,
             "history utterances kept, newest first"),
      KG_KEY("context_limit", int, train.limits.context_limit, "assembled sequence limit"),
      KG_KEY("min_freq", int, min_freq, "vocabulary frequency cutoff"),
      KG_KEY("temperature", double, decoding.temperature, "sampling temperature"),
      KG_KEY("top_k", int, decoding.top_k, "sampling top-k"),
      KG_KEY("top_p", double, decoding.top_p, "sampling nucleus mass"),
      KG_KEY("max_response_length", int, decoding.max_response_length, "generated token cap"),
      KG_KEY("decode_seed", std::uint64_t, decoding.seed, "sampling seed"),
      KG_KEY("threads", int, threads, "evaluation worker threads"),
  };
  return table;
}

#undef KG_KEY

const KeySpec& find_spec(const std::string& key) {
  for (const auto& s : specs()) {
    if (s.key.name == key) return s;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& s : specs()) out.push_back(s.key);
    return out;
  }();
  return keys;
}

std::string flag_for(const std::string& key) {
  std::string flag = "--" + key;
  for (char& c : flag) {
    if (c == '_') c = '-';
  }
  return flag;
}

nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& s : specs()) j[s.key.name] = nlohmann::ordered_json::parse(s.get(cfg).dump());
  return j;
}

void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) find_spec(key).set(cfg, value);
}

void apply_config_text(RunConfig& cfg, const std::string& key, const std::string& text) {
  const KeySpec& spec = find_spec(key);
  Json value;
  if (key == "ablation") {
    value = Json::array();
    std::stringstream ss(text);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty()) value.push_back(name);
    }
  } else if (text == "all") {
    value = text;
  } else {
    value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) {
      throw ConfigError("invalid value '" + text + "' for " + flag_for(key));
    }
  }
  spec.set(cfg, value);
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  const Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  RunConfig cfg = std::move(base);
  try {
    apply_config_json(cfg, j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return cfg;
}

std::string config_help() {
  const RunConfig defaults;
  std::ostringstream out;
  out << "Config keys (JSON file via --config or KGDIAL_CONFIG) and their flags:\n";
  for (const auto& s : specs()) {
    std::string def = s.get(defaults).dump();
    if (s.key.name == "ablation" && def == "[]") def = "none";
    char line[192];
    std::snprintf(line, sizeof line, "  %-22s %-24s default %-10s %s\n", s.key.name.c_str(),
                  flag_for(s.key.name).c_str(), def.c_str(), s.key.help.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace kgdial
