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

// Asymmetric tokenization: each input source is cut into tokens with its own
// patch size, projected to the shared model width by its own linear map, and
// the three token runs are concatenated as [local, global, indices] before a
// single learnable positional table is added.
//
// Token layout within a spatial token is channel-major, then row, then column.
// Spatial tokens are ordered row-major over the patch grid. Index tokens are
// ordered index-major, then time block.

#ifndef TELEVIT_TOKENIZER_HPP_
#define TELEVIT_TOKENIZER_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "televit/common.hpp"
#include "televit/layers.hpp"

namespace televit {

struct TokenizationSpec {
  std::size_t local_patch = 16;
  std::size_t global_patch = 30;
  std::size_t indices_patch = 1;
  std::size_t dim = 768;
};

enum class Segment : std::uint8_t { kLocal = 0, kGlobal = 1, kIndices = 2 };

// Patch row/column for spatial tokens; (index id, time block) for indices.
struct TokenCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const TokenCoord&, const TokenCoord&) = default;
};

struct SegmentCounts {
  std::size_t local = 0;
  std::size_t global = 0;
  std::size_t indices = 0;
  std::size_t total() const { return local + global + indices; }
};

struct TokenSequence {
  Mat embeddings;  // N x D
  std::vector<Segment> segments;
  std::vector<TokenCoord> coords;
  SegmentCounts counts;

  std::size_t size() const { return segments.size(); }
};

// Shape of every model input, fixed at construction.
struct InputShape {
  std::size_t local_channels = 14;
  std::size_t local_rows = 80;
  std::size_t local_cols = 80;
  std::size_t global_channels = 14;
  std::size_t global_rows = 360;
  std::size_t global_cols = 180;
  std::size_t index_channels = 10;
  std::size_t index_steps = 10;
};

// (C, H, W) -> (H/P * W/P) x (C*P*P)
Mat TokenizeSpatial(const Tensor3& x, std::size_t patch);
// Inverse of TokenizeSpatial.
Tensor3 UntokenizeSpatial(const Mat& tokens, std::size_t channels, std::size_t rows,
                          std::size_t cols, std::size_t patch);

Mat TokenizeLocal(const Tensor3& x_local, const TokenizationSpec& spec);
Mat TokenizeGlobal(const Tensor3& x_global, const TokenizationSpec& spec);
// (C_i, T) -> (C_i * T/P_i) x P_i
Mat TokenizeIndices(const Mat& x_indices, const TokenizationSpec& spec);
Mat UntokenizeIndices(const Mat& tokens, std::size_t channels, std::size_t steps,
                      std::size_t patch);

SegmentCounts CountTokens(const InputShape& shape, const TokenizationSpec& spec, bool use_global,
                          bool use_indices);

struct SourceTokens {
  Mat local;
  Mat global;   // empty when the global source is disabled
  Mat indices;  // empty when the indices source is disabled
};

struct SourceGradients {
  Tensor3 local;
  Tensor3 global;
  Mat indices;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(const InputShape& shape, const TokenizationSpec& spec, bool use_global,
            bool use_indices);

  // Projections: uniform fan-in; positional table: N(0, 0.02^2).
  void init(std::mt19937_64& rng);

  SourceTokens tokenize(const Tensor3& x_local, const Tensor3& x_global,
                        const Mat& x_indices) const;
  TokenSequence forward(const SourceTokens& tokens) const;
  // Gradient of the embeddings with respect to the raw inputs.
  SourceGradients backward(const SourceTokens& tokens, const Mat& d_embeddings,
                           bool param_grads);

  void collect(const std::string& prefix, ParamList& out);

  const SegmentCounts& counts() const { return counts_; }
  const InputShape& shape() const { return shape_; }
  const TokenizationSpec& spec() const { return spec_; }
  bool use_global() const { return use_global_; }
  bool use_indices() const { return use_indices_; }

  Linear local;
  Linear global;
  Linear indices;
  Param positional;  // N x D

 private:
  InputShape shape_;
  TokenizationSpec spec_;
  bool use_global_ = true;
  bool use_indices_ = true;
  SegmentCounts counts_;
  std::vector<Segment> segments_;
  std::vector<TokenCoord> coords_;
};

}  // namespace televit

#endif  // TELEVIT_TOKENIZER_HPP_
