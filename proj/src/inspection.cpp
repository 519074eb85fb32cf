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

#include "televit/inspection.hpp"

#include <cmath>

namespace televit {

namespace {

Mat HeadAverage(const AttentionRecord& record, std::size_t layer) {
  const auto n = static_cast<Eigen::Index>(record.tokens);
  Mat avg = Mat::Zero(n, n);
  for (std::size_t h = 0; h < record.heads; ++h) {
    const Mat& w = record.at(layer, h);
    if (w.rows() != n || w.cols() != n) {
      throw ContractViolation("attention weights for layer " + std::to_string(layer) + " head " +
                              std::to_string(h) + " are not " + std::to_string(n) + "x" +
                              std::to_string(n));
    }
    avg += w;
  }
  return avg / static_cast<double>(record.heads);
}

void CheckRecord(const AttentionRecord& record) {
  if (record.layers == 0 || record.heads == 0) throw ContractViolation("empty attention record");
  if (record.weights.size() != record.layers * record.heads) {
    throw ContractViolation("attention record holds " + std::to_string(record.weights.size()) +
                            " matrices, expected " +
                            std::to_string(record.layers * record.heads));
  }
  if (record.counts.total() != record.tokens) {
    throw ContractViolation("attention record segment counts do not sum to the token count");
  }
}

}  // namespace

RolloutMatrix Rollout(const AttentionRecord& record) {
  CheckRecord(record);
  const auto n = static_cast<Eigen::Index>(record.tokens);
  Mat acc = Mat::Identity(n, n);
  for (std::size_t l = 0; l < record.layers; ++l) {
    Mat a = HeadAverage(record, l) + Mat::Identity(n, n);
    const Eigen::VectorXd sums = a.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(sums(i) > 0.0) || !std::isfinite(sums(i))) {
        throw NumericFailure("roll-out row " + std::to_string(i) + " of layer " +
                             std::to_string(l) + " cannot be normalized");
      }
      a.row(i) /= sums(i);
    }
    acc = a * acc;
  }
  return {std::move(acc), record.counts};
}

RolloutMatrix LastLayerAttention(const AttentionRecord& record) {
  CheckRecord(record);
  return {HeadAverage(record, record.layers - 1), record.counts};
}

BlockPartition PartitionBlocks(const Mat& a, const SegmentCounts& counts) {
  if (a.rows() != a.cols()) throw ContractViolation("attention matrix is not square");
  if (static_cast<std::size_t>(a.rows()) != counts.total()) {
    throw ContractViolation("segment boundaries (" + std::to_string(counts.local) + "," +
                            std::to_string(counts.global) + "," + std::to_string(counts.indices) +
                            ") do not match a matrix of size " + std::to_string(a.rows()));
  }
  const Eigen::Index start[3] = {0, static_cast<Eigen::Index>(counts.local),
                                 static_cast<Eigen::Index>(counts.local + counts.global)};
  const Eigen::Index len[3] = {static_cast<Eigen::Index>(counts.local),
                               static_cast<Eigen::Index>(counts.global),
                               static_cast<Eigen::Index>(counts.indices)};
  BlockPartition p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.blocks[r][c] = a.block(start[r], start[c], len[r], len[c]);
  }
  return p;
}

Mat ReassembleBlocks(const BlockPartition& parts) {
  Eigen::Index len[3];
  for (int s = 0; s < 3; ++s) len[s] = parts.blocks[s][s].rows();
  const Eigen::Index n = len[0] + len[1] + len[2];
  Mat a(n, n);
  Eigen::Index r0 = 0;
  for (int r = 0; r < 3; ++r) {
    Eigen::Index c0 = 0;
    for (int c = 0; c < 3; ++c) {
      const Mat& b = parts.blocks[r][c];
      if (b.rows() != len[r] || b.cols() != len[c]) {
        throw ContractViolation("inconsistent block shapes in partition");
      }
      a.block(r0, c0, len[r], len[c]) = b;
      c0 += len[c];
    }
    r0 += len[r];
  }
  return a;
}

void TokenTypeAccumulator::Moments::add(double x) {
  ++n;
  const double d = x - mean;
  mean += d / static_cast<double>(n);
  m2 += d * (x - mean);
}

MeanStd TokenTypeAccumulator::Moments::finish() const {
  MeanStd out;
  out.count = n;
  if (n == 0) return out;
  out.mean = mean;
  out.std = std::sqrt(std::max(0.0, m2 / static_cast<double>(n)));
  return out;
}

void TokenTypeAccumulator::add(const Mat& a, const SegmentCounts& counts) {
  if (counts.local == 0) throw ContractViolation("token-type statistics need local tokens");
  const BlockPartition p = PartitionBlocks(a, counts);
  Moments* targets[3] = {&local_, &global_, &indices_};
  for (int c = 0; c < 3; ++c) {
    const Mat& b = p.blocks[0][c];
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      for (Eigen::Index j = 0; j < b.cols(); ++j) targets[c]->add(b(i, j));
    }
  }
  ++matrices_;
}

TokenTypeStats TokenTypeAccumulator::result() const {
  return {local_.finish(), global_.finish(), indices_.finish()};
}

TokenTypeStats ComputeTokenTypeStats(const Mat& a, const SegmentCounts& counts) {
  TokenTypeAccumulator acc;
  acc.add(a, counts);
  return acc.result();
}

IgResult IntegratedGradients(const ScalarGradFn& f, std::span<const double> x,
                             std::span<const double> baseline, std::size_t m) {
  if (m < 2) throw ConfigError("integrated gradients need at least 2 steps");
  if (x.size() != baseline.size()) throw ContractViolation("baseline shape differs from input");
  const std::size_t n = x.size();
  std::vector<double> grad_sum(n, 0.0), grad(n), point(n);
  for (std::size_t k = 1; k <= m; ++k) {
    const double alpha = (static_cast<double>(k) - 0.5) / static_cast<double>(m);
    for (std::size_t i = 0; i < n; ++i) point[i] = baseline[i] + alpha * (x[i] - baseline[i]);
    grad.assign(n, 0.0);
    f(point, grad);
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(grad[i])) {
        throw NumericFailure("non-finite gradient at alpha=" + std::to_string(alpha) +
                             " (step " + std::to_string(k) + " of " + std::to_string(m) + ")");
      }
      grad_sum[i] += grad[i];
    }
  }
  IgResult r;
  r.steps = m;
  r.attributions.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r.attributions[i] = (x[i] - baseline[i]) * grad_sum[i] / static_cast<double>(m);
    total += r.attributions[i];
  }
  r.f_input = f(x, grad);
  r.f_baseline = f(baseline, grad);
  r.gap = std::abs(total - (r.f_input - r.f_baseline));
  return r;
}

double PositiveScoreSum(TeleViT& model, const Tensor3& x_local, const Tensor3& x_global,
                        const Mat& x_indices, const std::vector<std::uint8_t>* mask,
                        SourceGradients* grads) {
  TeleViT::Tape tape;
  const auto out = model.forward(x_local, x_global, x_indices, grads ? &tape : nullptr);
  const Tensor3& z = out.logits;
  const std::size_t cells = z.rows * z.cols;
  if (mask && mask->size() != cells) throw ContractViolation("attribution mask has the wrong size");
  double f = 0.0;
  Tensor3 dz(2, z.rows, z.cols);
  for (std::size_t k = 0; k < cells; ++k) {
    if (mask && !(*mask)[k]) continue;
    const double p = 1.0 / (1.0 + std::exp(z.data[k] - z.data[cells + k]));
    f += p;
    dz.data[cells + k] = p * (1.0 - p);
    dz.data[k] = -p * (1.0 - p);
  }
  if (grads) *grads = model.backward(tape, dz, false);
  return f;
}

AttributionMap ModelIntegratedGradients(TeleViT& model, const Sample& sample, std::size_t m,
                                        const std::vector<std::uint8_t>* mask) {
  const Tensor3& xl = sample.x_local;
  const Tensor3& xg = sample.x_global;
  const Mat& xi = sample.x_indices;
  const std::size_t nl = xl.size(), ng = xg.size(), ni = static_cast<std::size_t>(xi.size());

  std::vector<double> flat(nl + ng + ni);
  std::copy(xl.data.begin(), xl.data.end(), flat.begin());
  std::copy(xg.data.begin(), xg.data.end(), flat.begin() + static_cast<std::ptrdiff_t>(nl));
  std::copy(xi.data(), xi.data() + ni, flat.begin() + static_cast<std::ptrdiff_t>(nl + ng));
  const std::vector<double> zero(flat.size(), 0.0);

  Tensor3 pl = xl, pg = xg;
  Mat pi = xi;
  const ScalarGradFn fn = [&](std::span<const double> x, std::vector<double>& grad) {
    std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nl), pl.data.begin());
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(nl),
              x.begin() + static_cast<std::ptrdiff_t>(nl + ng), pg.data.begin());
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(nl + ng), x.end(), pi.data());
    SourceGradients g;
    const double f = PositiveScoreSum(model, pl, pg, pi, mask, &g);
    std::copy(g.local.data.begin(), g.local.data.end(), grad.begin());
    // Disabled sources contribute nothing and keep zero gradient.
    if (!g.global.empty()) {
      std::copy(g.global.data.begin(), g.global.data.end(),
                grad.begin() + static_cast<std::ptrdiff_t>(nl));
    }
    if (g.indices.size() > 0) {
      std::copy(g.indices.data(), g.indices.data() + ni,
                grad.begin() + static_cast<std::ptrdiff_t>(nl + ng));
    }
    return f;
  };
  const IgResult ig = IntegratedGradients(fn, flat, zero, m);

  AttributionMap out;
  out.local = Tensor3(xl.channels, xl.rows, xl.cols);
  out.global = Tensor3(xg.channels, xg.rows, xg.cols);
  out.indices = Mat(xi.rows(), xi.cols());
  std::copy(ig.attributions.begin(), ig.attributions.begin() + static_cast<std::ptrdiff_t>(nl),
            out.local.data.begin());
  std::copy(ig.attributions.begin() + static_cast<std::ptrdiff_t>(nl),
            ig.attributions.begin() + static_cast<std::ptrdiff_t>(nl + ng), out.global.data.begin());
  std::copy(ig.attributions.begin() + static_cast<std::ptrdiff_t>(nl + ng), ig.attributions.end(),
            out.indices.data());
  out.steps = m;
  out.f_input = ig.f_input;
  out.f_baseline = ig.f_baseline;
  out.gap = ig.gap;
  return out;
}

VariableMap MostImportantVariable(const Tensor3& attributions, std::size_t patch_rows,
                                  std::size_t patch_cols, AggregationMode mode) {
  if (patch_rows == 0 || patch_cols == 0 || attributions.rows % patch_rows != 0 ||
      attributions.cols % patch_cols != 0) {
    throw ContractViolation("attribution map " + attributions.shape_string() +
                            " is not divisible into " + std::to_string(patch_rows) + "x" +
                            std::to_string(patch_cols) + " patches");
  }
  if (attributions.channels == 0) throw ContractViolation("attribution map has no channels");
  VariableMap map;
  map.grid_rows = attributions.rows / patch_rows;
  map.grid_cols = attributions.cols / patch_cols;
  map.channel.resize(map.grid_rows * map.grid_cols);
  std::vector<double> mass(attributions.channels);
  for (std::size_t gr = 0; gr < map.grid_rows; ++gr) {
    for (std::size_t gc = 0; gc < map.grid_cols; ++gc) {
      for (std::size_t c = 0; c < attributions.channels; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < patch_rows; ++i) {
          for (std::size_t j = 0; j < patch_cols; ++j) {
            const double v = attributions(c, gr * patch_rows + i, gc * patch_cols + j);
            s += mode == AggregationMode::kAbsolute ? std::abs(v) : v;
          }
        }
        mass[c] = s;
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < mass.size(); ++c) {
        if (mass[c] > mass[best]) best = c;
      }
      map.channel[gr * map.grid_cols + gc] = best;
    }
  }
  return map;
}

}  // namespace televit
