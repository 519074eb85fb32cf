/*
 * Copyright 2026 The TeleViT-cpp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "televit/model.hpp"

namespace televit {

using nlohmann::json;

void ModelConfig::validate() const {
  encoder.validate();
  if (tokens.dim != encoder.dim) {
    throw ConfigError("tokenizer dimension " + std::to_string(tokens.dim) +
                      " differs from encoder dimension " + std::to_string(encoder.dim));
  }
  if (input.local_rows != input.local_cols) throw ConfigError("local window must be square");
  CountTokens(input, tokens, use_global, use_indices);
}

json ModelConfig::to_json() const {
  return {
      {"input",
       {{"local_channels", input.local_channels},
        {"local_rows", input.local_rows},
        {"local_cols", input.local_cols},
        {"global_channels", input.global_channels},
        {"global_rows", input.global_rows},
        {"global_cols", input.global_cols},
        {"index_channels", input.index_channels},
        {"index_steps", input.index_steps}}},
      {"tokens",
       {{"local_patch", tokens.local_patch},
        {"global_patch", tokens.global_patch},
        {"indices_patch", tokens.indices_patch},
        {"dim", tokens.dim}}},
      {"encoder",
       {{"layers", encoder.layers},
        {"heads", encoder.heads},
        {"dim", encoder.dim},
        {"mlp_dim", encoder.mlp_dim},
        {"dropout", encoder.dropout}}},
      {"use_global", use_global},
      {"use_indices", use_indices},
      {"shared_decoder", shared_decoder},
  };
}

ModelConfig ModelConfig::FromJson(const json& j) {
  try {
    ModelConfig c;
    const json& in = j.at("input");
    c.input.local_channels = in.at("local_channels");
    c.input.local_rows = in.at("local_rows");
    c.input.local_cols = in.at("local_cols");
    c.input.global_channels = in.at("global_channels");
    c.input.global_rows = in.at("global_rows");
    c.input.global_cols = in.at("global_cols");
    c.input.index_channels = in.at("index_channels");
    c.input.index_steps = in.at("index_steps");
    const json& t = j.at("tokens");
    c.tokens.local_patch = t.at("local_patch");
    c.tokens.global_patch = t.at("global_patch");
    c.tokens.indices_patch = t.at("indices_patch");
    c.tokens.dim = t.at("dim");
    const json& e = j.at("encoder");
    c.encoder.layers = e.at("layers");
    c.encoder.heads = e.at("heads");
    c.encoder.dim = e.at("dim");
    c.encoder.mlp_dim = e.at("mlp_dim");
    c.encoder.dropout = e.at("dropout");
    c.use_global = j.at("use_global");
    c.use_indices = j.at("use_indices");
    c.shared_decoder = j.at("shared_decoder");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model configuration: ") + e.what());
  }
}

InputShape InputShapeFor(const CubeStore& cube, const SampleConfig& config) {
  InputShape s;
  s.local_channels = ChannelCount(cube, config);
  s.local_rows = config.local_patch;
  s.local_cols = config.local_patch;
  s.global_channels = s.local_channels;
  // Global tensors are laid out (channel, lon, lat).
  s.global_rows = cube.n_lon() / config.coarsen_factor;
  s.global_cols = cube.n_lat() / config.coarsen_factor;
  s.index_channels = cube.indices().size();
  s.index_steps = config.index_steps;
  return s;
}

TeleViT::TeleViT(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  embedding = Embedding(config.input, config.tokens, config.use_global, config.use_indices);
  encoder = Encoder(config.encoder);
  DecoderConfig dc;
  dc.dim = config.tokens.dim;
  dc.patch = config.tokens.local_patch;
  dc.grid_rows = config.input.local_rows / config.tokens.local_patch;
  dc.grid_cols = config.input.local_cols / config.tokens.local_patch;
  dc.shared = config.shared_decoder;
  decoder = Decoder(dc);
  std::mt19937_64 rng(seed);
  embedding.init(rng);
  encoder.init(rng);
  decoder.init(rng);
}

TeleViT::Output TeleViT::forward(const Tensor3& x_local, const Tensor3& x_global,
                                 const Mat& x_indices, Tape* tape, bool record_attention,
                                 std::mt19937_64* dropout_rng) const {
  Tape local_tape;
  Tape& tp = tape ? *tape : local_tape;
  tp.tokens = embedding.tokenize(x_local, x_global, x_indices);
  tp.embedded = embedding.forward(tp.tokens);
  Output out;
  AttentionRecord record;
  tp.encoded.segments = tp.embedded.segments;
  tp.encoded.coords = tp.embedded.coords;
  tp.encoded.counts = tp.embedded.counts;
  tp.encoded.embeddings = encoder.forward(tp.embedded.embeddings, tape ? &tp.encoder : nullptr,
                                          record_attention ? &record : nullptr, dropout_rng);
  out.logits = decoder.forward(tp.encoded);
  if (record_attention) {
    record.counts = tp.embedded.counts;
    out.attention = std::move(record);
  }
  return out;
}

TeleViT::Output TeleViT::forward(const Sample& sample, Tape* tape, bool record_attention,
                                 std::mt19937_64* dropout_rng) const {
  return forward(sample.x_local, sample.x_global, sample.x_indices, tape, record_attention,
                 dropout_rng);
}

SourceGradients TeleViT::backward(const Tape& tape, const Tensor3& d_logits, bool param_grads) {
  const Mat d_encoded = decoder.backward(tape.encoded, d_logits, param_grads);
  const Mat d_embedded = encoder.backward(tape.encoder, d_encoded, param_grads);
  return embedding.backward(tape.tokens, d_embedded, param_grads);
}

ParamList TeleViT::parameters() {
  ParamList out;
  embedding.collect("embed", out);
  encoder.collect("encoder", out);
  decoder.collect("decoder", out);
  return out;
}

void TeleViT::zero_grad() {
  for (auto& [name, p] : parameters()) p->zero_grad();
}

std::size_t TeleViT::parameter_count() {
  std::size_t n = 0;
  for (auto& [name, p] : parameters()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

}  // namespace televit
