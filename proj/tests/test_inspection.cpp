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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "televit/inspection.hpp"
#include "televit/training.hpp"

using namespace televit;
using televit::testing::RandomSample;
using televit::testing::TinyModelConfig;

namespace {

// Random record whose matrices are row-stochastic softmax outputs.
AttentionRecord RandomRecord(std::size_t layers, std::size_t heads, SegmentCounts counts,
                             std::mt19937_64& rng) {
  AttentionRecord r;
  r.layers = layers;
  r.heads = heads;
  r.counts = counts;
  r.tokens = counts.total();
  std::normal_distribution<double> n(0.0, 2.0);
  const auto t = static_cast<Eigen::Index>(r.tokens);
  for (std::size_t k = 0; k < layers * heads; ++k) {
    Mat logits(t, t);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = n(rng);
    r.weights.push_back(RowSoftmax(logits));
  }
  return r;
}

// Roll-out with explicit loops, independent of the Eigen expression code.
std::vector<std::vector<double>> RolloutOracle(const AttentionRecord& r) {
  const std::size_t n = r.tokens;
  std::vector<std::vector<double>> acc(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) acc[i][i] = 1.0;
  for (std::size_t l = 0; l < r.layers; ++l) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0;
        for (std::size_t h = 0; h < r.heads; ++h) s += r.at(l, h)(i, j);
        a[i][j] = s / r.heads + (i == j ? 1.0 : 0.0);
        row += a[i][j];
      }
      for (std::size_t j = 0; j < n; ++j) a[i][j] /= row;
    }
    std::vector<std::vector<double>> next(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) next[i][j] += a[i][k] * acc[k][j];
    acc = std::move(next);
  }
  return acc;
}

// A few epochs on random samples so the attribution target is not an
// untrained network.
TeleViT TrainedTiny(std::uint64_t seed) {
  const ModelConfig c = TinyModelConfig(8, 2, 2);
  TeleViT model(c, seed);
  std::mt19937_64 rng(seed + 1000);
  std::vector<Sample> samples;
  for (int k = 0; k < 6; ++k) samples.push_back(RandomSample(c.input, rng));
  VectorSampleSource data(samples);
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 3;
  tc.lr = 1e-2;
  tc.seed = seed;
  Train(model, data, data, tc);
  return model;
}

}  // namespace

// ---------------------------------------------------------------------------
// Roll-out
// ---------------------------------------------------------------------------

TEST_CASE("identity attention rolls out to the identity") {
  AttentionRecord r;
  r.layers = 3;
  r.heads = 2;
  r.tokens = 5;
  r.counts = {3, 1, 1};
  for (int k = 0; k < 6; ++k) r.weights.push_back(Mat::Identity(5, 5));
  const RolloutMatrix m = Rollout(r);
  CHECK(m.matrix == Mat::Identity(5, 5));
}

TEST_CASE("uniform two-token attention rolls out to [[0.75, 0.25], [0.25, 0.75]]") {
  AttentionRecord r;
  r.layers = 1;
  r.heads = 1;
  r.tokens = 2;
  r.counts = {2, 0, 0};
  r.weights.push_back(Mat::Constant(2, 2, 0.5));
  const Mat m = Rollout(r).matrix;
  CHECK(m(0, 0) == 0.75);
  CHECK(m(0, 1) == 0.25);
  CHECK(m(1, 0) == 0.25);
  CHECK(m(1, 1) == 0.75);
}

TEST_CASE("roll-out equals the explicit-loop product") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const AttentionRecord r = RandomRecord(3, 2, {4, 2, 3}, rng);
    const Mat m = Rollout(r).matrix;
    const auto oracle = RolloutOracle(r);
    for (std::size_t i = 0; i < r.tokens; ++i)
      for (std::size_t j = 0; j < r.tokens; ++j)
        CHECK(std::abs(m(i, j) - oracle[i][j]) < 1e-10);
  }
}

TEST_CASE("roll-out rows are stochastic for random records") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> layers(1, 4), heads(1, 3), seg(1, 4);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const SegmentCounts c{static_cast<std::size_t>(seg(rng)), static_cast<std::size_t>(seg(rng) - 1),
                          static_cast<std::size_t>(seg(rng) - 1)};
    const AttentionRecord r = RandomRecord(layers(rng), heads(rng), c, rng);
    const Mat m = Rollout(r).matrix;
    worst = std::max(worst, (m.rowwise().sum().array() - 1.0).abs().maxCoeff());
    CHECK(m.minCoeff() >= 0.0);
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("roll-out of a row that sums to zero is a numeric failure") {
  AttentionRecord r;
  r.layers = 1;
  r.heads = 1;
  r.tokens = 2;
  r.counts = {2, 0, 0};
  Mat w(2, 2);
  w << -1.0, 0.0, 0.5, 0.5;
  r.weights.push_back(w);
  CHECK_THROWS_AS(Rollout(r), NumericFailure);
  r.weights.clear();
  CHECK_THROWS_AS(Rollout(r), ContractViolation);
}

TEST_CASE("last-layer attention is the head average of the final layer") {
  std::mt19937_64 rng(3);
  const AttentionRecord r = RandomRecord(2, 2, {2, 1, 1}, rng);
  const Mat m = LastLayerAttention(r).matrix;
  CHECK(((m - 0.5 * (r.at(1, 0) + r.at(1, 1))).cwiseAbs().maxCoeff()) == 0.0);
}

// ---------------------------------------------------------------------------
// Block partition and token statistics
// ---------------------------------------------------------------------------

TEST_CASE("full-scale segments partition into 25 x 72 and 25 x 100 blocks") {
  const SegmentCounts c{25, 72, 100};
  const Mat a = Mat::Random(197, 197);
  const BlockPartition p = PartitionBlocks(a, c);
  CHECK(p.at(Segment::kLocal, Segment::kLocal).rows() == 25);
  CHECK(p.at(Segment::kLocal, Segment::kGlobal).cols() == 72);
  CHECK(p.at(Segment::kLocal, Segment::kIndices).cols() == 100);
  CHECK(p.at(Segment::kIndices, Segment::kGlobal).rows() == 100);
  CHECK(p.at(Segment::kGlobal, Segment::kIndices)(3, 4) == a(25 + 3, 97 + 4));
  CHECK(ReassembleBlocks(p) == a);
}

TEST_CASE("an empty segment gives empty blocks") {
  const SegmentCounts c{3, 2, 0};
  const Mat a = Mat::Random(5, 5);
  const BlockPartition p = PartitionBlocks(a, c);
  CHECK(p.at(Segment::kLocal, Segment::kIndices).size() == 0);
  CHECK(p.at(Segment::kIndices, Segment::kIndices).size() == 0);
  CHECK(ReassembleBlocks(p) == a);
  CHECK_THROWS_AS(PartitionBlocks(a, SegmentCounts{3, 3, 0}), ContractViolation);
}

TEST_CASE("token statistics on uniform and identity matrices") {
  const SegmentCounts c{2, 3, 5};
  const auto u = ComputeTokenTypeStats(Mat::Constant(10, 10, 0.1), c);
  CHECK(u.local.mean == doctest::Approx(0.1));
  CHECK(u.global.mean == doctest::Approx(0.1));
  CHECK(u.indices.mean == doctest::Approx(0.1));
  CHECK(u.indices.std == doctest::Approx(0.0));
  CHECK(u.local.count == 4);
  CHECK(u.global.count == 6);
  CHECK(u.indices.count == 10);
  const auto id = ComputeTokenTypeStats(Mat::Identity(10, 10), c);
  CHECK(id.local.mean == 0.5);
  CHECK(id.local.std == 0.5);
  CHECK(id.global.mean == 0.0);
  CHECK(id.indices.mean == 0.0);
}

TEST_CASE("token statistics match a two-pass oracle; the accumulator pools entries") {
  std::mt19937_64 rng(4);
  const SegmentCounts c{3, 4, 2};
  std::vector<Mat> mats;
  for (int k = 0; k < 5; ++k) mats.push_back(RandomRecord(1, 1, c, rng).weights[0]);
  TokenTypeAccumulator acc;
  for (const Mat& m : mats) acc.add(m, c);
  CHECK(acc.matrices() == 5);
  // Oracle over the global block of every matrix.
  std::vector<double> entries;
  for (const Mat& m : mats)
    for (int i = 0; i < 3; ++i)
      for (int j = 3; j < 7; ++j) entries.push_back(m(i, j));
  double mean = 0;
  for (double e : entries) mean += e;
  mean /= entries.size();
  double var = 0;
  for (double e : entries) var += (e - mean) * (e - mean);
  const double sd = std::sqrt(var / entries.size());
  const TokenTypeStats s = acc.result();
  CHECK(s.global.count == entries.size());
  CHECK(s.global.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(s.global.std == doctest::Approx(sd).epsilon(1e-12));
  const auto single = ComputeTokenTypeStats(mats[0], c);
  CHECK(single.local.count == 9);
}

// ---------------------------------------------------------------------------
// Integrated gradients
// ---------------------------------------------------------------------------

TEST_CASE("integrated gradients are exact for a linear function at any m") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  std::vector<double> w(12), x(12), b(12);
  for (std::size_t k = 0; k < 12; ++k) {
    w[k] = n(rng);
    x[k] = n(rng);
    b[k] = n(rng);
  }
  const ScalarGradFn f = [&](std::span<const double> v, std::vector<double>& g) {
    double s = 0.7;
    for (std::size_t k = 0; k < v.size(); ++k) s += w[k] * v[k];
    g = w;
    return s;
  };
  for (std::size_t m : {2u, 3u, 17u, 256u}) {
    const IgResult r = IntegratedGradients(f, x, b, m);
    CHECK(r.steps == m);
    for (std::size_t k = 0; k < 12; ++k)
      CHECK(r.attributions[k] == doctest::Approx((x[k] - b[k]) * w[k]).epsilon(1e-12));
    CHECK(r.gap < 1e-12);
  }
}

TEST_CASE("a constant function attributes zero") {
  const ScalarGradFn f = [](std::span<const double> v, std::vector<double>& g) {
    g.assign(v.size(), 0.0);
    return 3.0;
  };
  const std::vector<double> x{1, 2, 3}, b{0, 0, 0};
  const IgResult r = IntegratedGradients(f, x, b, 8);
  for (double a : r.attributions) CHECK(a == 0.0);
  CHECK(r.gap == 0.0);
}

TEST_CASE("midpoint rule integrates a quadratic with the known error") {
  // F = x^2 from 0 to 1: midpoint sum gives 1 - 1/(12 m^2) ... for the
  // gradient 2 alpha x the midpoint rule is exact, so use F = x^3.
  const ScalarGradFn f = [](std::span<const double> v, std::vector<double>& g) {
    g.assign(1, 3 * v[0] * v[0]);
    return v[0] * v[0] * v[0];
  };
  const std::vector<double> x{1.0}, b{0.0};
  for (std::size_t m : {4u, 8u, 16u}) {
    const IgResult r = IntegratedGradients(f, x, b, m);
    const double md = static_cast<double>(m);
    CHECK(r.attributions[0] == doctest::Approx(1.0 - 1.0 / (4.0 * md * md)).epsilon(1e-12));
  }
}

TEST_CASE("integrated gradients reject bad arguments and non-finite gradients") {
  const ScalarGradFn f = [](std::span<const double> v, std::vector<double>& g) {
    g.assign(v.size(), 1.0);
    return 0.0;
  };
  const std::vector<double> x{1, 2}, b{0, 0}, short_b{0};
  CHECK_THROWS_AS(IntegratedGradients(f, x, b, 1), ConfigError);
  CHECK_THROWS_AS(IntegratedGradients(f, x, short_b, 4), ContractViolation);
  const ScalarGradFn bad = [](std::span<const double> v, std::vector<double>& g) {
    g.assign(v.size(), std::numeric_limits<double>::quiet_NaN());
    return 0.0;
  };
  CHECK_THROWS_AS(IntegratedGradients(bad, x, b, 4), NumericFailure);
}

TEST_CASE("model attributions: completeness within 1% at m=256 and close to m=4096") {
  TeleViT model = TrainedTiny(1);
  std::mt19937_64 rng(6);
  const Sample s = RandomSample(model.config().input, rng);
  const ParamList params = model.parameters();
  std::vector<Mat> before;
  for (const auto& [n, p] : params) before.push_back(p->value);
  const AttributionMap a = ModelIntegratedGradients(model, s, 256);
  CHECK(a.local.shape_string() == s.x_local.shape_string());
  CHECK(a.global.shape_string() == s.x_global.shape_string());
  CHECK(a.indices.rows() == s.x_indices.rows());
  CHECK(a.steps == 256);
  const double delta = std::abs(a.f_input - a.f_baseline);
  REQUIRE(delta > 0);
  MESSAGE("completeness gap " << a.gap << " of |F(x) - F(0)| " << delta);
  CHECK(a.gap <= 0.01 * delta);
  for (std::size_t k = 0; k < params.size(); ++k) CHECK(params[k].second->value == before[k]);

  const AttributionMap ref = ModelIntegratedGradients(model, s, 4096);
  double diff = 0, norm = 0;
  for (std::size_t k = 0; k < a.local.size(); ++k) {
    diff += std::abs(a.local.data[k] - ref.local.data[k]);
    norm += std::abs(ref.local.data[k]);
  }
  CHECK(diff <= 0.01 * norm);
}

TEST_CASE("median completeness gap does not grow as m doubles") {
  std::vector<std::vector<double>> gaps;  // [model][m]
  // m=4 is pre-asymptotic for the midpoint rule on these paths; start at 8.
  const std::vector<std::size_t> ms{8, 16, 32, 64, 128, 256};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TeleViT model(TinyModelConfig(8, 2, 2), 100 + seed);
    std::mt19937_64 rng(200 + seed);
    const Sample s = RandomSample(model.config().input, rng);
    std::vector<double> row;
    for (auto m : ms) row.push_back(ModelIntegratedGradients(model, s, m).gap);
    gaps.push_back(row);
  }
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ms.size(); ++k) {
    std::vector<double> col;
    for (const auto& row : gaps) col.push_back(row[k]);
    std::sort(col.begin(), col.end());
    const double median = 0.5 * (col[4] + col[5]);
    CHECK(median <= prev);
    prev = median;
  }
}

TEST_CASE("attribution mask restricts the target cells") {
  TeleViT model(TinyModelConfig(8, 1, 2), 7);
  std::mt19937_64 rng(8);
  const Sample s = RandomSample(model.config().input, rng);
  std::vector<std::uint8_t> mask(16, 0);
  CHECK(ModelIntegratedGradients(model, s, 4, &mask).f_input == 0.0);
  std::vector<std::uint8_t> wrong(3, 1);
  CHECK_THROWS_AS(ModelIntegratedGradients(model, s, 4, &wrong), ContractViolation);
}

// ---------------------------------------------------------------------------
// Most-important-variable map
// ---------------------------------------------------------------------------

TEST_CASE("single channel map selects channel 0 everywhere") {
  Tensor3 a(1, 4, 6);
  for (double& v : a.data) v = 1.0;
  const VariableMap m = MostImportantVariable(a, 2, 3);
  CHECK(m.grid_rows == 2);
  CHECK(m.grid_cols == 2);
  for (auto c : m.channel) CHECK(c == 0);
}

TEST_CASE("ties go to the lower channel") {
  Tensor3 a(3, 2, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      a(0, i, j) = 0.1;
      a(1, i, j) = 0.5;
      a(2, i, j) = -0.5;
    }
  CHECK(MostImportantVariable(a, 2, 2).at(0, 0) == 1);
  CHECK(MostImportantVariable(a, 2, 2, AggregationMode::kSigned).at(0, 0) == 1);
  a(1, 0, 0) = -0.5;
  a(2, 0, 0) = 0.5;
  // Absolute sums are now 2.0 for both channels 1 and 2.
  CHECK(MostImportantVariable(a, 2, 2).at(0, 0) == 1);
  CHECK(MostImportantVariable(a, 2, 2, AggregationMode::kSigned).at(0, 0) == 1);
}

TEST_CASE("variable map equals a brute-force argmax") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  Tensor3 a(5, 6, 8);
  for (double& v : a.data) v = n(rng);
  for (auto mode : {AggregationMode::kAbsolute, AggregationMode::kSigned}) {
    const VariableMap m = MostImportantVariable(a, 3, 2, mode);
    REQUIRE(m.grid_rows == 2);
    REQUIRE(m.grid_cols == 4);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        std::size_t best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t ch = 0; ch < 5; ++ch) {
          double s = 0;
          for (std::size_t i = 3 * r; i < 3 * r + 3; ++i)
            for (std::size_t j = 2 * c; j < 2 * c + 2; ++j)
              s += mode == AggregationMode::kAbsolute ? std::abs(a(ch, i, j)) : a(ch, i, j);
          if (s > best_v) {
            best_v = s;
            best = ch;
          }
        }
        CHECK(m.at(r, c) == best);
      }
  }
  CHECK_THROWS_AS(MostImportantVariable(a, 4, 2), ContractViolation);
}
