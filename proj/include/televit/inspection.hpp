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

#ifndef TELEVIT_INSPECTION_HPP_
#define TELEVIT_INSPECTION_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "televit/encoder.hpp"
#include "televit/model.hpp"

namespace televit {

struct RolloutMatrix {
  Mat matrix;  // N x N, row-stochastic
  SegmentCounts counts;
};

// Per layer: head average, plus identity, row normalization; later layers
// multiply on the left so the result maps output tokens to input tokens.
RolloutMatrix Rollout(const AttentionRecord& record);
// Head-averaged raw attention of the final layer, without roll-out.
RolloutMatrix LastLayerAttention(const AttentionRecord& record);

struct BlockPartition {
  // blocks[from][to], indexed by Segment.
  Mat blocks[3][3];

  const Mat& at(Segment from, Segment to) const {
    return blocks[static_cast<int>(from)][static_cast<int>(to)];
  }
};

BlockPartition PartitionBlocks(const Mat& a, const SegmentCounts& counts);
Mat ReassembleBlocks(const BlockPartition& parts);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

// Statistics over the entries of the local-to-{local, global, indices} blocks.
struct TokenTypeStats {
  MeanStd local;
  MeanStd global;
  MeanStd indices;
};

TokenTypeStats ComputeTokenTypeStats(const Mat& a, const SegmentCounts& counts);

// Pools the block entries of many matrices into dataset-level statistics.
class TokenTypeAccumulator {
 public:
  void add(const Mat& a, const SegmentCounts& counts);
  TokenTypeStats result() const;
  std::size_t matrices() const { return matrices_; }

 private:
  struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x);
    MeanStd finish() const;
  };
  Moments local_, global_, indices_;
  std::size_t matrices_ = 0;
};

// F(x) and its gradient, written into grad (same length as x).
using ScalarGradFn = std::function<double(std::span<const double> x, std::vector<double>& grad)>;

struct IgResult {
  std::vector<double> attributions;
  std::size_t steps = 0;
  double f_input = 0.0;
  double f_baseline = 0.0;
  double gap = 0.0;  // |sum(attributions) - (F(x) - F(baseline))|
};

// Midpoint Riemann rule along the straight path from baseline to x with
// alpha_k = (k - 1/2) / m. Gradient sums are reduced in a fixed order.
IgResult IntegratedGradients(const ScalarGradFn& f, std::span<const double> x,
                             std::span<const double> baseline, std::size_t m);

struct AttributionMap {
  Tensor3 local;   // shape of x_local
  Tensor3 global;  // shape of x_global
  Mat indices;     // shape of x_indices
  std::string baseline = "zero";
  std::size_t steps = 0;
  double f_input = 0.0;
  double f_baseline = 0.0;
  double gap = 0.0;
};

// F = sum of positive-class scores over the local window (or over cells with
// mask != 0). Model parameters and their gradients are left untouched.
AttributionMap ModelIntegratedGradients(TeleViT& model, const Sample& sample, std::size_t m,
                                        const std::vector<std::uint8_t>* mask = nullptr);

// Positive-class score sum and its gradient with respect to all three inputs.
double PositiveScoreSum(TeleViT& model, const Tensor3& x_local, const Tensor3& x_global,
                        const Mat& x_indices, const std::vector<std::uint8_t>* mask,
                        SourceGradients* grads);

enum class AggregationMode { kAbsolute, kSigned };

struct VariableMap {
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::vector<std::size_t> channel;  // row-major over the patch grid

  std::size_t at(std::size_t r, std::size_t c) const { return channel[r * grid_cols + c]; }
};

// Per patch, the channel with the largest aggregated attribution; ties go to
// the lower channel index.
VariableMap MostImportantVariable(const Tensor3& attributions, std::size_t patch_rows,
                                  std::size_t patch_cols,
                                  AggregationMode mode = AggregationMode::kAbsolute);

}  // namespace televit

#endif  // TELEVIT_INSPECTION_HPP_
