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

// The full forecaster: asymmetric tokenization -> transformer encoder ->
// per-local-token linear decoder. With use_global and use_indices both off it
// reduces to a plain ViT on the local window.

#ifndef TELEVIT_MODEL_HPP_
#define TELEVIT_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <random>

#include "json.hpp"
#include "televit/datacube.hpp"
#include "televit/decoder.hpp"
#include "televit/encoder.hpp"
#include "televit/tokenizer.hpp"

namespace televit {

struct ModelConfig {
  InputShape input;
  TokenizationSpec tokens;
  EncoderConfig encoder;
  bool use_global = true;
  bool use_indices = true;
  bool shared_decoder = true;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig FromJson(const nlohmann::json& j);
};

// Input shape implied by a cube and a sample configuration.
InputShape InputShapeFor(const CubeStore& cube, const SampleConfig& config);

class TeleViT {
 public:
  struct Tape {
    SourceTokens tokens;
    TokenSequence embedded;
    Encoder::Tape encoder;
    TokenSequence encoded;
  };

  struct Output {
    Tensor3 logits;  // 2 x H_l x W_l
    std::optional<AttentionRecord> attention;
  };

  TeleViT(const ModelConfig& config, std::uint64_t seed);

  Output forward(const Tensor3& x_local, const Tensor3& x_global, const Mat& x_indices,
                 Tape* tape = nullptr, bool record_attention = false,
                 std::mt19937_64* dropout_rng = nullptr) const;
  Output forward(const Sample& sample, Tape* tape = nullptr, bool record_attention = false,
                 std::mt19937_64* dropout_rng = nullptr) const;

  // Accumulates parameter gradients when param_grads is set; always returns
  // the gradient of the logits with respect to each raw input.
  SourceGradients backward(const Tape& tape, const Tensor3& d_logits, bool param_grads = true);

  ParamList parameters();
  void zero_grad();
  std::size_t parameter_count();

  const ModelConfig& config() const { return config_; }

  Embedding embedding;
  Encoder encoder;
  Decoder decoder;

 private:
  ModelConfig config_;
};

}  // namespace televit

#endif  // TELEVIT_MODEL_HPP_
