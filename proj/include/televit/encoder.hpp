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

// Pre-norm transformer encoder:
//   h   = x + Dropout(MHSA(LN1(x)))
//   out = h + Dropout(MLP(LN2(h)))     MLP = Linear -> GELU -> Linear
// followed by a final LayerNorm. Bidirectional attention, no masking.

#ifndef TELEVIT_ENCODER_HPP_
#define TELEVIT_ENCODER_HPP_

#include <random>
#include <vector>

#include "televit/layers.hpp"
#include "televit/tokenizer.hpp"

namespace televit {

struct EncoderConfig {
  std::size_t layers = 8;
  std::size_t heads = 8;
  std::size_t dim = 768;
  std::size_t mlp_dim = 1536;
  double dropout = 0.0;

  void validate() const;
};

// Post-softmax weights of every layer and head, stored [layer][head] as N x N.
struct AttentionRecord {
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::size_t tokens = 0;
  SegmentCounts counts;
  std::vector<Mat> weights;

  const Mat& at(std::size_t layer, std::size_t head) const { return weights[layer * heads + head]; }
  Mat& at(std::size_t layer, std::size_t head) { return weights[layer * heads + head]; }
};

// softmax(q k^T / sqrt(d_head)) v for one head; writes the weights if asked.
Mat ScaledDotProductAttention(const Mat& q, const Mat& k, const Mat& v, Mat* weights = nullptr);

class MultiHeadAttention {
 public:
  struct Cache {
    Mat input, q, k, v, concat;
    std::vector<Mat> probs;
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t dim, std::size_t heads);
  void init(std::mt19937_64& rng);

  Mat forward(const Mat& x, Cache* cache) const;
  Mat backward(const Cache& cache, const Mat& dy, bool param_grads);
  void collect(const std::string& prefix, ParamList& out);

  std::size_t heads() const { return heads_; }

  Linear query, key, value, output;

 private:
  std::size_t heads_ = 1;
};

class EncoderBlock {
 public:
  struct Cache {
    LayerNorm::Cache ln1, ln2;
    MultiHeadAttention::Cache attn;
    Mat ln2_out, mlp_pre, mlp_act;
    Mat attn_mask, mlp_mask;  // empty when dropout is inactive
  };

  EncoderBlock() = default;
  explicit EncoderBlock(const EncoderConfig& config);
  void init(std::mt19937_64& rng);

  Mat forward(const Mat& x, Cache* cache, std::mt19937_64* dropout_rng) const;
  Mat backward(const Cache& cache, const Mat& dy, bool param_grads);
  void collect(const std::string& prefix, ParamList& out);

  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  Linear fc1, fc2;
  double dropout = 0.0;
};

class Encoder {
 public:
  struct Tape {
    std::vector<EncoderBlock::Cache> blocks;
    LayerNorm::Cache final_norm;
  };

  Encoder() = default;
  explicit Encoder(const EncoderConfig& config);
  void init(std::mt19937_64& rng);

  // dropout_rng == nullptr selects inference mode.
  Mat forward(const Mat& x, Tape* tape, AttentionRecord* record,
              std::mt19937_64* dropout_rng = nullptr) const;
  Mat backward(const Tape& tape, const Mat& dy, bool param_grads);
  void collect(const std::string& prefix, ParamList& out);

  const EncoderConfig& config() const { return config_; }

  std::vector<EncoderBlock> blocks;
  LayerNorm final_norm;

 private:
  EncoderConfig config_;
};

// Runs the encoder over a token sequence, keeping segment labels and coords.
TokenSequence EncoderForward(const Encoder& encoder, const TokenSequence& seq,
                             AttentionRecord* record);

}  // namespace televit

#endif  // TELEVIT_ENCODER_HPP_
