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

#include "televit/layers.hpp"

#include <cmath>
#include <numbers>

namespace televit {

Linear::Linear(std::size_t in, std::size_t out) {
  weight.resize(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
  bias.resize(1, static_cast<Eigen::Index>(out));
}

void Linear::init(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, weight.value.rows())));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < weight.value.size(); ++i) weight.value.data()[i] = dist(rng);
  bias.value.setZero();
}

Mat Linear::forward(const Mat& x) const {
  Mat y = x * weight.value;
  y.rowwise() += bias.value.row(0);
  return y;
}

Mat Linear::backward(const Mat& x, const Mat& dy, bool param_grads) {
  if (param_grads) {
    weight.grad.noalias() += x.transpose() * dy;
    bias.grad.row(0) += dy.colwise().sum();
  }
  return dy * weight.value.transpose();
}

void Linear::collect(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".weight", &weight);
  out.emplace_back(prefix + ".bias", &bias);
}

LayerNorm::LayerNorm(std::size_t dim, double eps_) : eps(eps_) {
  gamma.resize(1, static_cast<Eigen::Index>(dim));
  beta.resize(1, static_cast<Eigen::Index>(dim));
  gamma.value.setOnes();
}

Mat LayerNorm::forward(const Mat& x, Cache* cache) const {
  const Eigen::Index n = x.rows();
  const double d = static_cast<double>(x.cols());
  Mat normalized(n, x.cols());
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().sum() / d;
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    normalized.row(i) = (x.row(i).array() - mean) * inv_std(i);
  }
  Mat y = normalized.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Mat LayerNorm::backward(const Cache& cache, const Mat& dy, bool param_grads) {
  const Mat& xhat = cache.normalized;
  if (param_grads) {
    gamma.grad.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
    beta.grad.row(0) += dy.colwise().sum();
  }
  const double d = static_cast<double>(dy.cols());
  const Mat dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double sum = dxhat.row(i).sum();
    const double dot = dxhat.row(i).dot(xhat.row(i));
    dx.row(i) = (cache.inv_std(i) / d) *
                (d * dxhat.row(i).array() - sum - xhat.row(i).array() * dot).matrix();
  }
  return dx;
}

void LayerNorm::collect(const std::string& prefix, ParamList& out) {
  out.emplace_back(prefix + ".gamma", &gamma);
  out.emplace_back(prefix + ".beta", &beta);
}

double Gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double GeluDerivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Mat RowSoftmax(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace televit
