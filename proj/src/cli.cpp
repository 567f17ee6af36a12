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

#include "kgdial/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgdial/checkpoint.hpp"
#include "kgdial/evaluate.hpp"
#include "kgdial/graph_weight.hpp"
#include "kgdial/kg.hpp"
#include "kgdial/mask.hpp"
#include "kgdial/pipeline.hpp"
#include "kgdial/run_config.hpp"
#include "kgdial/sampling.hpp"
#include "kgdial/text.hpp"
#include "kgdial/train.hpp"
#include "kgdial/vocab.hpp"

namespace kgdial::cli {

namespace {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VocabMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config-key flags shared by every subcommand.
struct KeyOptions {
  std::map<std::string, std::string> text;
  std::vector<std::string> ablation;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::string config_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (default: $KGDIAL_CONFIG)");
    for (const auto& key : config_keys()) {
      CLI::Option* opt = nullptr;
      if (key.name == "ablation") {
        opt = cmd->add_option(flag_for(key.name), ablation, key.help)->delimiter(',');
      } else {
        opt = cmd->add_option(flag_for(key.name), text[key.name], key.help);
      }
      options.emplace_back(key.name, opt);
    }
  }

  // defaults or `base` -> config file -> flags
  RunConfig resolve(RunConfig base = {}) const {
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("KGDIAL_CONFIG")) path = env;
    }
    RunConfig cfg = path.empty() ? std::move(base) : load_run_config(path, std::move(base));
    for (const auto& [name, opt] : options) {
      if (opt->count() == 0) continue;
      if (name == "ablation") {
        std::string joined;
        for (const auto& a : ablation) joined += a + ",";
        apply_config_text(cfg, name, joined);
      } else {
        apply_config_text(cfg, name, text.at(name));
      }
    }
    try {
      cfg.train.validate();
      cfg.decoding.validate();
      if (cfg.min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");
      if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return cfg;
  }
};

fs::path require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError("missing " + what + ": " + path.string());
  return path;
}

DatasetSplit load_split(const fs::path& data_dir, const std::string& name) {
  return load_dataset(require_file(data_dir / (name + ".json"), name + " data file"), name);
}

struct LoadedModel {
  Checkpoint ckpt;
  Vocabulary vocab;
  Transformer<float> model;
};

LoadedModel load_model(const std::string& ckpt_path, const std::string& vocab_path) {
  const fs::path ckpt_file = require_file(ckpt_path, "checkpoint");
  Checkpoint ckpt = load_checkpoint(ckpt_file);
  const fs::path vpath =
      vocab_path.empty() ? ckpt_file.parent_path() / "vocab.txt" : fs::path(vocab_path);
  Vocabulary vocab = Vocabulary::load(require_file(vpath, "vocabulary"));
  if (vocab.hash() != ckpt.vocab_hash) {
    throw VocabMismatch("vocabulary " + vpath.string() + " (hash " + hash_to_hex(vocab.hash()) +
                        ") does not match checkpoint (hash " + hash_to_hex(ckpt.vocab_hash) + ")");
  }
  Transformer<float> model = model_from_checkpoint(ckpt);
  return {std::move(ckpt), std::move(vocab), std::move(model)};
}

// Run settings recorded at training time seed the defaults of later commands.
RunConfig checkpoint_defaults(const Checkpoint& ckpt) {
  RunConfig cfg;
  cfg.model = ckpt.config;
  if (ckpt.meta.contains("config")) {
    try {
      apply_config_json(cfg, nlohmann::json::parse(ckpt.meta["config"].dump()));
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("checkpoint config echo: ") + e.what());
    }
  }
  return cfg;
}

std::string k_text(int k) { return k == kSelectAll ? "all" : std::to_string(k); }

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  KeyOptions keys;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = a.keys.resolve();
  const DatasetSplit train_split = load_split(a.data, "train");
  const DatasetSplit valid_split = load_split(a.data, "valid");
  const Vocabulary vocab = build_vocab({train_split, valid_split}, cfg.min_freq);
  cfg.model.vocab_size = vocab.size();
  try {
    cfg.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  out << "train " << train_split.samples.size() << " samples, valid " << valid_split.samples.size()
      << " samples, vocab " << vocab.size() << ", parameters "
      << Parameters<float>::zeros(cfg.model).count() << "\n";
  out.flush();

  const TrainResult result =
      train(train_split, valid_split, vocab, cfg.model, cfg.train, [&out](const EpochRecord& r) {
        char line[128];
        std::snprintf(line, sizeof line, "epoch %3d  train_loss %.5f  valid_loss %.5f\n", r.epoch,
                      r.train_loss, r.valid_loss);
        out << line;
        out.flush();
      });

  const fs::path dir(a.out);
  fs::create_directories(dir);
  vocab.save(dir / "vocab.txt");
  OJson meta;
  meta["config"] = config_to_json(cfg);
  meta["ablation"] = ablation_names(cfg.model.ablation);
  meta["best_epoch"] = result.best_epoch;
  meta["optimizer_steps"] = result.optimizer_steps;
  meta["train_samples"] = train_split.samples.size();
  save_checkpoint(dir / "model.ckpt", result.model, vocab.hash(), meta);
  std::ofstream(dir / "history.csv") << history_csv(result.history);
  out << "best epoch " << result.best_epoch << "; wrote " << (dir / "model.ckpt").string() << "\n";
  return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  std::string report;
  std::string vocab;
  bool hyp_from_gold = false;
  bool grid = false;
  std::string grid_values = "1,3,all";
  KeyOptions keys;
};

std::vector<int> parse_k_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "all") {
      out.push_back(kSelectAll);
      continue;
    }
    try {
      std::size_t used = 0;
      const int k = std::stoi(item, &used);
      if (used != item.size() || k < 0) throw std::invalid_argument(item);
      out.push_back(k);
    } catch (const std::exception&) {
      throw ConfigError("invalid grid value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty grid");
  return out;
}

fs::path grid_report_path(const fs::path& base, int ke, int kr) {
  fs::path p = base;
  p.replace_filename(base.stem().string() + "_e" + k_text(ke) + "_r" + k_text(kr) +
                     base.extension().string());
  return p;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  LoadedModel lm = load_model(a.ckpt, a.vocab);
  const RunConfig cfg = a.keys.resolve(checkpoint_defaults(lm.ckpt));
  const DatasetSplit split = load_split(a.data, a.split);

  std::vector<DatasetSplit> known{split};
  for (const char* name : {"train", "valid", "test"}) {
    const fs::path p = fs::path(a.data) / (std::string(name) + ".json");
    if (name != a.split && fs::is_regular_file(p)) known.push_back(load_dataset(p, name));
  }
  const std::vector<std::string> lexicon = entity_lexicon(known);

  std::vector<std::pair<int, int>> pairs;
  if (a.grid) {
    const auto ks = parse_k_list(a.grid_values);
    for (int ke : ks) {
      for (int kr : ks) pairs.emplace_back(ke, kr);
    }
  } else {
    pairs.emplace_back(cfg.train.k_entity, cfg.train.k_relation);
  }

  std::vector<EvalReport> reports;
  for (const auto& [ke, kr] : pairs) {
    EvalOptions opts;
    opts.decoding = cfg.decoding;
    opts.k_entity = ke;
    opts.k_relation = kr;
    opts.limits = cfg.train.limits;
    opts.threads = cfg.threads;
    opts.hyp_from_gold = a.hyp_from_gold;
    reports.push_back(evaluate(lm.model, split, lm.vocab, opts, lexicon));
    if (!a.report.empty()) {
      RunConfig echo = cfg;
      echo.train.k_entity = ke;
      echo.train.k_relation = kr;
      OJson config = config_to_json(echo);
      config["split"] = a.split;
      config["hyp_from_gold"] = a.hyp_from_gold;
      config["vocab_hash"] = hash_to_hex(lm.ckpt.vocab_hash);
      const fs::path path = a.grid ? grid_report_path(a.report, ke, kr) : fs::path(a.report);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream(path) << report_to_json(reports.back(), config).dump(2) << "\n";
    }
  }
  out << "split " << a.split << ", " << split.samples.size() << " samples; " << kBleuDescription
      << "\n";
  print_metrics_table(out, reports);
  return kOk;
}

// ---- inspect --------------------------------------------------------------

struct InspectArgs {
  std::string ckpt;
  std::string kg;
  std::string question;
  std::string vocab;
  bool dump_mask = false;
  KeyOptions keys;
};

OJson to_json(const Eigen::VectorXd& v) {
  OJson a = OJson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
  LoadedModel lm = load_model(a.ckpt, a.vocab);
  const RunConfig cfg = a.keys.resolve(checkpoint_defaults(lm.ckpt));
  const KnowledgeGraph graph = load_graph(require_file(a.kg, "knowledge graph file"));
  if (graph.empty()) throw UsageError("knowledge graph " + a.kg + " has no triples");
  const std::string question = normalize_text(a.question);

  const TableEmbedder<float> embedder(lm.vocab, lm.model.params().token);
  const CosineEntityScorer scorer = default_scorer(embedder);
  const BipartiteGraph bg = build_bipartite(graph);
  const Eigen::VectorXd x = feature_vector(bg, question, embedder);
  const Eigen::VectorXd h = propagate(bg, x);
  const WeightedGraph wg = compute_weighted_graph(graph, question, scorer, embedder);
  const Selection sel = select_topk(wg, cfg.train.k_entity, cfg.train.k_relation);

  OJson j;
  j["question"] = question;
  j["k_entity"] = k_text(cfg.train.k_entity);
  j["k_relation"] = k_text(cfg.train.k_relation);
  OJson nodes = OJson::array();
  for (int u = 0; u < bg.size(); ++u) {
    const auto& n = bg.nodes[static_cast<std::size_t>(u)];
    nodes.push_back({{"index", u},
                     {"kind", n.kind == BipartiteNode::Kind::kEntity ? "entity" : "relation"},
                     {"surface", n.surface}});
  }
  j["nodes"] = nodes;
  OJson edges = OJson::array();
  for (int u = 0; u < bg.size(); ++u) {
    for (int v = u + 1; v < bg.size(); ++v) {
      if (bg.adjacency(u, v) != 0.0) edges.push_back({u, v});
    }
  }
  j["adjacency"] = edges;
  j["X"] = to_json(x);
  j["H_tilde"] = to_json(h);
  OJson ents = OJson::array();
  for (std::size_t e = 0; e < wg.entity_weights.size(); ++e) {
    ents.push_back({{"surface", graph.entity_surface(static_cast<int>(e))},
                    {"score", wg.entity_scores[e]},
                    {"weight", wg.entity_weights[e]}});
  }
  j["entity_weights"] = ents;
  OJson rels = OJson::array();
  for (std::size_t r = 0; r < wg.relation_weights.size(); ++r) {
    rels.push_back({{"surface", graph.relation_surface(static_cast<int>(r))},
                    {"score", wg.relation_scores[r]},
                    {"weight", wg.relation_weights[r]}});
  }
  j["relation_weights"] = rels;
  OJson sel_e = OJson::array();
  for (int e : sel.entities) sel_e.push_back(graph.entity_surface(e));
  OJson sel_r = OJson::array();
  for (int r : sel.relations) sel_r.push_back(graph.relation_surface(r));
  j["selected_entities"] = sel_e;
  j["selected_relations"] = sel_r;

  if (a.dump_mask) {
    const InputSequence seq = assemble_input(linearize_graph(graph, file_order(graph), lm.vocab), {},
                                             question, std::nullopt, lm.vocab, cfg.train.limits);
    const KnowledgeColumns kc = knowledge_column_mask(seq, sel, graph);
    OJson triples = OJson::array();
    for (std::size_t i = 0; i < seq.triple_spans.size(); ++i) {
      const Triple& t = graph.triples()[static_cast<std::size_t>(seq.triple_spans[i].triple)];
      triples.push_back({{"subject", graph.entity_surface(t.subject)},
                         {"relation", graph.relation_surface(t.relation)},
                         {"object", graph.entity_surface(t.object)},
                         {"selected", static_cast<bool>(kc.triple_selected[i])}});
    }
    j["mask"] = {{"knowledge_positions", kc.values.size()},
                 {"masked_positions", kc.masked_count()},
                 {"fallback_open", kc.fallback},
                 {"triples", triples}};
  }
  out << j.dump(2) << "\n";
  return kOk;
}

// ---- chat -----------------------------------------------------------------

struct ChatArgs {
  std::string ckpt;
  std::string kg;
  std::string vocab;
  KeyOptions keys;
};

int cmd_chat(const ChatArgs& a, std::istream& in, std::ostream& out) {
  LoadedModel lm = load_model(a.ckpt, a.vocab);
  RunConfig cfg = a.keys.resolve(checkpoint_defaults(lm.ckpt));
  const KnowledgeGraph graph = load_graph(require_file(a.kg, "knowledge graph file"));
  const AssemblyLimits& limits = cfg.train.limits;

  PrepareOptions prep;
  prep.k_entity = cfg.train.k_entity;
  prep.k_relation = cfg.train.k_relation;
  prep.limits = limits;
  prep.use_kg_mask = !lm.model.config().ablation.no_kg_mask;
  prep.with_response = false;

  out << "knowledge graph: " << graph.triples().size() << " triples. Commands: /reset, /seed N, /quit\n";
  std::vector<DialogueTurn> history;
  int turn = 0;
  std::string line;
  while (out << "user> " << std::flush, std::getline(in, line)) {
    const std::string text = normalize_text(line);
    if (text.empty()) continue;
    if (text.rfind("/quit", 0) == 0) break;
    if (text.rfind("/reset", 0) == 0) {
      history.clear();
      out << "(history cleared)\n";
      continue;
    }
    if (text.rfind("/seed", 0) == 0) {
      std::istringstream ss(text.substr(5));
      std::uint64_t seed = 0;
      if (ss >> seed) {
        cfg.decoding.seed = seed;
        turn = 0;
        out << "(seed " << seed << ")\n";
      } else {
        out << "(usage: /seed N)\n";
      }
      continue;
    }

    if (history.size() > static_cast<std::size_t>(std::max(0, limits.max_history_turns))) {
      const std::size_t drop = history.size() - static_cast<std::size_t>(limits.max_history_turns);
      history.erase(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(drop));
      out << "(evicted " << drop << " oldest turn" << (drop == 1 ? "" : "s") << " from history)\n";
    }
    std::size_t history_tokens = 0;
    for (const auto& t : history) history_tokens += split_tokens(t.text).size();
    if (history_tokens > static_cast<std::size_t>(limits.max_history_tokens)) {
      out << "(history truncated to its newest " << limits.max_history_tokens << " tokens)\n";
    }

    DialogueSample sample;
    sample.id = "chat#" + std::to_string(turn);
    sample.graph = graph;
    sample.history = history;
    sample.question = text;
    try {
      const PreparedSample p = prepare_sample(sample, file_order(graph), lm.vocab, lm.model, prep);
      DecodingParams dp = cfg.decoding;
      dp.seed = sample_seed(cfg.decoding.seed, sample.id);
      const std::string reply = lm.vocab.decode(sample_response(lm.model, p.seq, p.knowledge, dp));
      out << "system> " << reply << "\n";
      history.push_back({Speaker::kUser, text});
      history.push_back({Speaker::kSystem, reply.empty() ? "..." : reply});
      ++turn;
    } catch (const SequenceError& e) {
      out << "(turn rejected: " << e.what() << ")\n";
    } catch (const std::invalid_argument& e) {
      out << "(turn rejected: " << e.what() << ")\n";
    }
  }
  out << "\n";
  return kOk;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string out;
  SynthConfig config;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.config.n_dialogues < 1 || a.config.n_subjects_per_graph < 1 || a.config.n_relations < 1) {
    throw ConfigError("--n, --subjects and --relations must be >= 1");
  }
  const DatasetSplit all = generate_synthetic(a.config, "all");
  const fs::path dir(a.out);
  fs::create_directories(dir);
  for (const DatasetSplit& s : partition_splits(all)) {
    write_dataset(s, dir / (s.name + ".json"));
    out << s.name << ": " << s.dialogues.size() << " dialogues, " << s.samples.size()
        << " samples\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Knowledge-graph grounded dialogue generation"};
  app.name("kgdial");
  app.require_subcommand(1);
  app.footer(config_help());

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model and write model.ckpt, vocab.txt, history.csv");
  train_cmd->add_option("--data", train_args.data, "directory holding train.json and valid.json")->required();
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_args.keys.attach(train_cmd);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "generate responses and score BLEU / Entity F1");
  eval_cmd->add_option("--ckpt", eval_args.ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_args.data, "dataset directory")->required();
  eval_cmd->add_option("--split", eval_args.split, "split file stem")->capture_default_str();
  eval_cmd->add_option("--report", eval_args.report, "JSON report path");
  eval_cmd->add_option("--vocab", eval_args.vocab, "vocabulary (default: next to the checkpoint)");
  eval_cmd->add_flag("--hyp-from-gold", eval_args.hyp_from_gold, "score gold responses against themselves");
  eval_cmd->add_flag("--grid", eval_args.grid, "evaluate every (k_entity, k_relation) pair of --grid-values");
  eval_cmd->add_option("--grid-values", eval_args.grid_values, "k values for --grid")->capture_default_str();
  eval_args.keys.attach(eval_cmd);

  InspectArgs inspect_args;
  auto* inspect_cmd = app.add_subcommand("inspect", "dump the weighted graph for a question as JSON");
  inspect_cmd->add_option("--ckpt", inspect_args.ckpt, "checkpoint file")->required();
  inspect_cmd->add_option("--kg", inspect_args.kg, "knowledge graph JSON")->required();
  inspect_cmd->add_option("--question", inspect_args.question, "question text")->required();
  inspect_cmd->add_option("--vocab", inspect_args.vocab, "vocabulary (default: next to the checkpoint)");
  inspect_cmd->add_flag("--dump-mask", inspect_args.dump_mask, "add the knowledge mask summary");
  inspect_args.keys.attach(inspect_cmd);

  ChatArgs chat_args;
  auto* chat_cmd = app.add_subcommand("chat", "interactive session over one knowledge graph");
  chat_cmd->add_option("--ckpt", chat_args.ckpt, "checkpoint file")->required();
  chat_cmd->add_option("--kg", chat_args.kg, "knowledge graph JSON")->required();
  chat_cmd->add_option("--vocab", chat_args.vocab, "vocabulary (default: next to the checkpoint)");
  chat_args.keys.attach(chat_cmd);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic train/valid/test corpus");
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
  synth_cmd->add_option("--n", synth_args.config.n_dialogues, "dialogues")->capture_default_str();
  synth_cmd->add_option("--subjects", synth_args.config.n_subjects_per_graph, "subjects per graph")
      ->capture_default_str();
  synth_cmd->add_option("--relations", synth_args.config.n_relations, "relations per subject")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.config.seed, "corpus seed")->capture_default_str();
  synth_cmd->add_option("--pool-seed", synth_args.config.vocab_pool_seed, "word pool seed")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }

  try {
    if (*train_cmd) return cmd_train(train_args, out);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*inspect_cmd) return cmd_inspect(inspect_args, out);
    if (*chat_cmd) return cmd_chat(chat_args, in, out);
    if (*synth_cmd) return cmd_synth(synth_args, out);
  } catch (const VocabMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kVocabMismatch;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kUsageError;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace kgdial::cli
