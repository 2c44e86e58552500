// Copyright (c) 2026 The sprune Authors. All Rights Reserved.
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

#include "sprune/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "sprune/errors.hpp"

namespace sprune {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void to_little_endian(std::vector<double>& values) {
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      bits = __builtin_bswap64(bits);
      v = std::bit_cast<double>(bits);
    }
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// Rebuilds the model structure from a flat name -> tensor table.
Model assemble(const ModelConfig& c, std::map<std::string, Tensor>& t) {
  auto take = [&](const std::string& name) {
    auto it = t.find(name);
    if (it == t.end()) throw CorruptionError("checkpoint is missing tensor " + name);
    return it->second;
  };
  Model m;
  m.config = c;
  m.word_embedding = take("embeddings.word");
  m.position_embedding = take("embeddings.position");
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    EncoderLayer layer;
    for (std::size_t h = 0; h < c.num_heads[l]; ++h) {
      const std::string hp = p + "heads." + std::to_string(h) + ".";
      AttentionHead head;
      head.query_weight = take(hp + "query.weight");
      head.query_bias = take(hp + "query.bias");
      head.key_weight = take(hp + "key.weight");
      head.key_bias = take(hp + "key.bias");
      head.value_weight = take(hp + "value.weight");
      head.value_bias = take(hp + "value.bias");
      head.output_weight = take(hp + "output.weight");
      head.output_bias = take(hp + "output.bias");
      layer.heads.push_back(std::move(head));
    }
    layer.ffn_in_weight = take(p + "ffn.in.weight");
    layer.ffn_in_bias = take(p + "ffn.in.bias");
    layer.ffn_out_weight = take(p + "ffn.out.weight");
    layer.ffn_out_bias = take(p + "ffn.out.bias");
    layer.attention_norm_gain = take(p + "attention_norm.gain");
    layer.attention_norm_bias = take(p + "attention_norm.bias");
    layer.ffn_norm_gain = take(p + "ffn_norm.gain");
    layer.ffn_norm_bias = take(p + "ffn_norm.bias");
    m.layers.push_back(std::move(layer));
  }
  m.classifier_weight = take("classifier.weight");
  m.classifier_bias = take("classifier.bias");
  if (c.has_lm_head && !c.lm_head_tied) m.lm_head_weight = take("lm_head.weight");
  return m;
}

}  // namespace

void save_model(const Model& model, const fs::path& directory) {
  model.validate();
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

  json manifest = json::array();
  std::ofstream weights(directory / "weights.bin", std::ios::binary | std::ios::trunc);
  if (!weights) throw IoError("cannot write " + (directory / "weights.bin").string());
  std::size_t offset = 0;
  for (const auto& [name, tensor] : model.named_parameters()) {
    std::vector<double> buf(tensor.data().begin(), tensor.data().end());
    to_little_endian(buf);
    const std::size_t bytes = buf.size() * sizeof(double);
    weights.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(bytes));
    manifest.push_back({{"name", name}, {"shape", tensor.shape()}, {"offset", offset}, {"length", bytes}});
    offset += bytes;
  }
  weights.close();
  if (!weights) throw IoError("write failed for " + (directory / "weights.bin").string());

  write_text(directory / "manifest.json", manifest.dump(2) + "\n");
  write_text(directory / "config.json", json(model.config).dump(2) + "\n");
}

Model load_model(const fs::path& directory) {
  ModelConfig config;
  try {
    config = read_json(directory / "config.json").get<ModelConfig>();
  } catch (const json::exception& e) {
    throw CorruptionError("config.json: " + std::string(e.what()));
  }
  config.validate();
  const json manifest = read_json(directory / "manifest.json");
  if (!manifest.is_array()) throw CorruptionError("manifest.json is not an array");

  const auto expected = parameter_shapes(config);
  if (manifest.size() != expected.size()) {
    throw CorruptionError("manifest lists " + std::to_string(manifest.size()) + " tensors, config implies " +
                          std::to_string(expected.size()));
  }

  const fs::path weights_path = directory / "weights.bin";
  std::ifstream in(weights_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + weights_path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);

  std::map<std::string, Tensor> tensors;
  std::size_t next_offset = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& rec = manifest[i];
    const auto& [name, shape] = expected[i];
    std::string rec_name;
    Shape rec_shape;
    std::size_t offset = 0, length = 0;
    try {
      rec_name = rec.at("name").get<std::string>();
      rec_shape = rec.at("shape").get<Shape>();
      offset = rec.at("offset").get<std::size_t>();
      length = rec.at("length").get<std::size_t>();
    } catch (const json::exception& e) {
      throw CorruptionError("manifest record " + std::to_string(i) + ": " + e.what());
    }
    if (rec_name != name) throw CorruptionError("manifest record " + std::to_string(i) + " is " + rec_name +
                                                ", expected " + name);
    if (rec_shape != shape) {
      throw CorruptionError("tensor " + name + " has manifest shape " + shape_string(rec_shape) +
                            ", config implies " + shape_string(shape));
    }
    if (length != shape_numel(shape) * sizeof(double) || offset != next_offset) {
      throw CorruptionError("tensor " + name + " has an inconsistent byte range in the manifest");
    }
    if (offset + length > file_size) {
      throw CorruptionError("tensor " + name + " extends past the end of weights.bin (truncated file?)");
    }
    std::vector<double> values(shape_numel(shape));
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(length));
    if (!in) throw CorruptionError("tensor " + name + ": short read from weights.bin");
    to_little_endian(values);
    tensors.emplace(name, Tensor(shape, std::move(values)));
    next_offset = offset + length;
  }
  if (next_offset != file_size) {
    throw CorruptionError("weights.bin has " + std::to_string(file_size - next_offset) + " trailing bytes");
  }
  Model model = assemble(config, tensors);
  model.validate();
  return model;
}

}  // namespace sprune
