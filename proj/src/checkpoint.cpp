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

#include "kgdial/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kgdial {

using ojson = nlohmann::ordered_json;

std::string hash_to_hex(std::uint64_t h) {
  std::ostringstream ss;
  ss << std::hex;
  ss.width(16);
  ss.fill('0');
  ss << h;
  return ss.str();
}

namespace {

std::uint64_t hex_to_hash(const std::string& s) {
  if (s.size() != 16) throw CheckpointError("malformed vocabulary hash '" + s + "'");
  return std::stoull(s, nullptr, 16);
}

}  // namespace

ojson model_config_to_json(const ModelConfig& cfg) {
  return ojson{{"d_model", cfg.d_model},
               {"n_heads", cfg.n_heads},
               {"n_layers", cfg.n_layers},
               {"d_ff", cfg.d_ff},
               {"vocab_size", cfg.vocab_size},
               {"max_positions", cfg.max_positions},
               {"max_entity_ids", cfg.max_entity_ids},
               {"max_triple_ids", cfg.max_triple_ids},
               {"n_types", cfg.n_types},
               {"dropout", cfg.dropout},
               {"ablation", ablation_names(cfg.ablation)}};
}

ModelConfig model_config_from_json(const ojson& j) {
  ModelConfig cfg;
  try {
    cfg.d_model = j.at("d_model").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.d_ff = j.at("d_ff").get<int>();
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.max_positions = j.at("max_positions").get<int>();
    cfg.max_entity_ids = j.at("max_entity_ids").get<int>();
    cfg.max_triple_ids = j.at("max_triple_ids").get<int>();
    cfg.n_types = j.at("n_types").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
    for (const auto& name : j.at("ablation")) apply_ablation_name(cfg.ablation, name.get<std::string>());
  } catch (const ojson::exception& e) {
    throw CheckpointError(std::string("bad model config in checkpoint: ") + e.what());
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("bad model config in checkpoint: ") + e.what());
  }
  return cfg;
}

void save_checkpoint(const std::filesystem::path& path, const Transformer<float>& model,
                     std::uint64_t vocab_hash, const ojson& meta) {
  const auto tensors = model.params().named();
  ojson manifest = ojson::array();
  for (const auto& [name, m] : tensors) {
    manifest.push_back(ojson{{"name", name}, {"shape", {m->rows(), m->cols()}}});
  }
  const ojson header{{"format", "kgdial-checkpoint"},
                     {"version", kCheckpointVersion},
                     {"config", model_config_to_json(model.config())},
                     {"vocab_hash", hash_to_hex(vocab_hash)},
                     {"meta", meta},
                     {"tensors", std::move(manifest)}};

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
  out << header.dump() << '\n';
  std::vector<char> buf;
  for (const auto& [name, m] : tensors) {
    buf.resize(static_cast<std::size_t>(m->size()) * 4);
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, m->data() + i, 4);
      for (int b = 0; b < 4; ++b) {
        buf[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
      }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw CheckpointError("failed writing checkpoint: " + path.string());
}

namespace {

Checkpoint read_tensors(std::istream& in, const ojson& header, const std::filesystem::path& path) {
  Checkpoint ckpt;
  ckpt.config = model_config_from_json(header.at("config"));
  ckpt.vocab_hash = hex_to_hash(header.at("vocab_hash").get<std::string>());
  ckpt.meta = header.value("meta", ojson::object());
  ckpt.params = Parameters<float>::zeros(ckpt.config);

  auto tensors = ckpt.params.named();
  const auto& manifest = header.at("tensors");
  if (manifest.size() != tensors.size()) {
    throw CheckpointError("checkpoint tensor count does not match the model config");
  }
  std::vector<char> buf;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto& [name, m] = tensors[t];
    const auto& entry = manifest[t];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("shape")[0].get<Eigen::Index>() != m->rows() ||
        entry.at("shape")[1].get<Eigen::Index>() != m->cols()) {
      throw CheckpointError("checkpoint tensor '" + entry.at("name").get<std::string>() +
                            "' does not match expected '" + name + "'");
    }
    buf.resize(static_cast<std::size_t>(m->size()) * 4);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw CheckpointError("checkpoint truncated in tensor '" + name + "'");
    }
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[static_cast<std::size_t>(i) * 4 + static_cast<std::size_t>(b)])) << (8 * b);
      }
      std::memcpy(m->data() + i, &bits, 4);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError("trailing bytes after the last tensor in " + path.string());
  }
  return ckpt;
}

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError("empty checkpoint: " + path.string());
  ojson header;
  try {
    header = ojson::parse(line);
  } catch (const ojson::parse_error& e) {
    throw CheckpointError(std::string("checkpoint header is not JSON: ") + e.what());
  }
  if (!header.is_object() || header.value("format", "") != "kgdial-checkpoint" ||
      header.value("version", 0) != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint format in " + path.string());
  }
  try {
    return read_tensors(in, header, path);
  } catch (const ojson::exception& e) {
    throw CheckpointError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
}

Transformer<float> model_from_checkpoint(const Checkpoint& ckpt) {
  Transformer<float> model(ckpt.config);
  model.params() = ckpt.params;
  return model;
}

}  // namespace kgdial
