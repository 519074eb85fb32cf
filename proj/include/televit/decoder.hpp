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

#ifndef TELEVIT_DECODER_HPP_
#define TELEVIT_DECODER_HPP_

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "televit/layers.hpp"
#include "televit/tokenizer.hpp"

namespace televit {

struct DecoderConfig {
  std::size_t dim = 768;
  std::size_t patch = 16;      // local patch size P_l
  std::size_t grid_rows = 5;   // local token grid
  std::size_t grid_cols = 5;
  std::size_t classes = 2;
  bool shared = true;          // one projection for every local token
};

// Positive-class probabilities over a patch or a mosaic.
struct PredictionMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> scores;
  Tensor3 logits;                 // classes x rows x cols; may be empty for mosaics
  std::vector<std::uint8_t> valid;

  double score(std::size_t i, std::size_t j) const { return scores[i * cols + j]; }
};

// softmax over the class axis; scores = probability of class 1.
PredictionMap MakePredictionMap(Tensor3 logits, std::vector<std::uint8_t> valid = {});

// Linear head mapping each local token to the logits of its own patch.
// Projection output layout: class-major, then row, then column.
class Decoder {
 public:
  Decoder() = default;
  explicit Decoder(const DecoderConfig& config);
  void init(std::mt19937_64& rng);

  // Consumes only the local segment; logits are classes x (rows*P) x (cols*P).
  Tensor3 forward(const TokenSequence& encoded) const;
  // Gradient with respect to every encoded token (zero for non-local ones).
  Mat backward(const TokenSequence& encoded, const Tensor3& d_logits, bool param_grads);

  void collect(const std::string& prefix, ParamList& out);
  const DecoderConfig& config() const { return config_; }

  std::vector<Linear> heads;

 private:
  const Linear& head_for(std::size_t token) const { return heads[config_.shared ? 0 : token]; }
  void check_sequence(const TokenSequence& encoded) const;

  DecoderConfig config_;
};

PredictionMap Decode(const Decoder& decoder, const TokenSequence& encoded,
                     std::vector<std::uint8_t> valid = {});

struct PatchPrediction {
  std::size_t patch_row = 0;
  std::size_t patch_col = 0;
  PredictionMap map;
};

// Mosaics per-patch maps onto the patch grid. Missing patches get score 0 and
// are marked invalid. A patch given twice is a contract violation.
PredictionMap AssembleGlobe(const std::vector<PatchPrediction>& patches, std::size_t grid_rows,
                            std::size_t grid_cols, std::size_t patch);

// Inverse of AssembleGlobe (row-major over the grid, scores and validity only).
std::vector<PatchPrediction> DisassembleGlobe(const PredictionMap& globe, std::size_t patch);

}  // namespace televit

#endif  // TELEVIT_DECODER_HPP_
