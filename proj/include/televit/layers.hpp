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

// Dense building blocks with explicit backward passes. Activations are
// row-major (one token per row). Backward functions add into Param::grad when
// asked to and always return the gradient with respect to their input.

#ifndef TELEVIT_LAYERS_HPP_
#define TELEVIT_LAYERS_HPP_

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "televit/common.hpp"

namespace televit {

struct Param {
  Mat value;
  Mat grad;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value = Mat::Zero(rows, cols);
    grad = Mat::Zero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
};

using ParamList = std::vector<std::pair<std::string, Param*>>;

// y = x W + b, W is (in x out).
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out);

  // Uniform(-1/sqrt(in), 1/sqrt(in)) weights, zero bias.
  void init(std::mt19937_64& rng);

  Mat forward(const Mat& x) const;
  Mat backward(const Mat& x, const Mat& dy, bool param_grads);

  void collect(const std::string& prefix, ParamList& out);

  std::size_t in_features() const { return static_cast<std::size_t>(weight.value.rows()); }
  std::size_t out_features() const { return static_cast<std::size_t>(weight.value.cols()); }

  Param weight;
  Param bias;
};

class LayerNorm {
 public:
  struct Cache {
    Mat normalized;
    Eigen::VectorXd inv_std;
  };

  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim, double eps = 1e-6);

  Mat forward(const Mat& x, Cache* cache) const;
  Mat backward(const Cache& cache, const Mat& dy, bool param_grads);

  void collect(const std::string& prefix, ParamList& out);

  Param gamma;
  Param beta;
  double eps = 1e-6;
};

// Exact (erf) GELU and its derivative.
double Gelu(double x);
double GeluDerivative(double x);

// Row-wise softmax with max subtraction.
Mat RowSoftmax(const Mat& logits);

}  // namespace televit

#endif  // TELEVIT_LAYERS_HPP_
