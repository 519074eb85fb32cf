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
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "televit/tokenizer.hpp"

using namespace televit;
using televit::testing::RandomMat;
using televit::testing::RandomTensor;

TEST_CASE("full-scale local window: 25 tokens of length 3584") {
  TokenizationSpec spec;
  const Mat t = TokenizeLocal(Tensor3(14, 80, 80), spec);
  CHECK(t.rows() == 25);
  CHECK(t.cols() == 3584);
}

TEST_CASE("full-scale global map: 72 tokens of length 12600") {
  TokenizationSpec spec;
  const Mat t = TokenizeGlobal(Tensor3(14, 360, 180), spec);
  CHECK(t.rows() == 72);
  CHECK(t.cols() == 12600);
}

TEST_CASE("full-scale indices: 100 scalar tokens; P_i=5 gives 20 tokens of length 5") {
  TokenizationSpec spec;
  const Mat x = Mat::Zero(10, 10);
  const Mat t = TokenizeIndices(x, spec);
  CHECK(t.rows() == 100);
  CHECK(t.cols() == 1);
  spec.indices_patch = 5;
  const Mat t5 = TokenizeIndices(x, spec);
  CHECK(t5.rows() == 20);
  CHECK(t5.cols() == 5);
}

TEST_CASE("unit patches give the scalars in row-major order") {
  Tensor3 x(1, 2, 2);
  x(0, 0, 0) = 1;
  x(0, 0, 1) = 2;
  x(0, 1, 0) = 3;
  x(0, 1, 1) = 4;
  const Mat t = TokenizeSpatial(x, 1);
  REQUIRE(t.rows() == 4);
  for (int k = 0; k < 4; ++k) CHECK(t(k, 0) == k + 1);

  Mat ix(2, 2);
  ix << 10, 20, 30, 40;  // [[a, b], [c, d]]
  TokenizationSpec spec;
  spec.indices_patch = 1;
  const Mat ti = TokenizeIndices(ix, spec);
  CHECK(ti(0, 0) == 10);
  CHECK(ti(1, 0) == 20);
  CHECK(ti(2, 0) == 30);
  CHECK(ti(3, 0) == 40);
}

TEST_CASE("a patch of sevens becomes a constant-7 token") {
  Tensor3 x(3, 8, 8, 1.0);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 4; i < 8; ++i)
      for (std::size_t j = 0; j < 4; ++j) x(c, i, j) = 7.0;
  const Mat t = TokenizeSpatial(x, 4);
  CHECK((t.row(2).array() == 7.0).all());
  CHECK((t.row(0).array() == 1.0).all());
}

TEST_CASE("constant global field gives identical tokens") {
  const Mat t = TokenizeSpatial(Tensor3(2, 6, 4, 3.5), 2);
  for (Eigen::Index r = 1; r < t.rows(); ++r) CHECK(t.row(r) == t.row(0));
}

TEST_CASE("token layout is channel-major, then row, then column") {
  std::mt19937_64 rng(5);
  const Tensor3 x = RandomTensor(3, 6, 9, rng);
  const std::size_t p = 3;
  const Mat t = TokenizeSpatial(x, p);
  // Brute-force oracle.
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t i = 0; i < p; ++i)
          for (std::size_t j = 0; j < p; ++j) {
            CHECK(t(static_cast<Eigen::Index>(r * 3 + c), static_cast<Eigen::Index>((ch * p + i) * p + j)) ==
                  x(ch, r * p + i, c * p + j));
          }
}

TEST_CASE("index tokens are index-major then time block") {
  Mat x(2, 4);
  x << 1, 2, 3, 4, 5, 6, 7, 8;
  TokenizationSpec spec;
  spec.indices_patch = 2;
  const Mat t = TokenizeIndices(x, spec);
  Mat expected(4, 2);
  expected << 1, 2, 3, 4, 5, 6, 7, 8;
  CHECK(t == expected);
  CHECK(UntokenizeIndices(t, 2, 4, 2) == x);
}

TEST_CASE("divisibility violations are configuration errors") {
  CHECK_THROWS_AS(TokenizeSpatial(Tensor3(1, 5, 4), 2), ConfigError);
  TokenizationSpec spec;
  spec.indices_patch = 3;
  CHECK_THROWS_AS(TokenizeIndices(Mat::Zero(2, 4), spec), ConfigError);
  InputShape shape;
  shape.local_rows = 81;
  CHECK_THROWS_AS(CountTokens(shape, TokenizationSpec{}, true, true), ConfigError);
}

TEST_CASE("property: token count and untokenize round trip over random shapes") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> small(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = small(rng), c = small(rng), gh = small(rng), gw = small(rng);
    const Tensor3 x = RandomTensor(c, gh * p, gw * p, rng);
    const Mat t = TokenizeSpatial(x, p);
    CHECK(static_cast<std::size_t>(t.rows()) == gh * gw);
    CHECK(static_cast<std::size_t>(t.cols()) == c * p * p);
    CHECK(UntokenizeSpatial(t, c, gh * p, gw * p, p).data == x.data);
  }
}

TEST_CASE("default configuration counts 25 + 72 + 100 = 197 tokens") {
  const SegmentCounts n = CountTokens(InputShape{}, TokenizationSpec{}, true, true);
  CHECK(n.local == 25);
  CHECK(n.global == 72);
  CHECK(n.indices == 100);
  CHECK(n.total() == 197);
  CHECK(CountTokens(InputShape{}, TokenizationSpec{}, false, false).total() == 25);
  CHECK(CountTokens(InputShape{}, TokenizationSpec{}, false, true).total() == 125);
}

namespace {

InputShape SmallShape() {
  InputShape s;
  s.local_channels = 2;
  s.local_rows = 4;
  s.local_cols = 6;
  s.global_channels = 2;
  s.global_rows = 4;
  s.global_cols = 2;
  s.index_channels = 3;
  s.index_steps = 2;
  return s;
}

TokenizationSpec SmallSpec() {
  TokenizationSpec t;
  t.local_patch = 2;
  t.global_patch = 2;
  t.indices_patch = 1;
  t.dim = 5;
  return t;
}

}  // namespace

TEST_CASE("embedding carries segment labels and coordinates") {
  Embedding emb(SmallShape(), SmallSpec(), true, true);
  std::mt19937_64 rng(1);
  emb.init(rng);
  const SourceTokens src = emb.tokenize(RandomTensor(2, 4, 6, rng), RandomTensor(2, 4, 2, rng),
                                        RandomMat(3, 2, rng));
  const TokenSequence seq = emb.forward(src);
  CHECK(seq.counts.local == 6);
  CHECK(seq.counts.global == 2);
  CHECK(seq.counts.indices == 6);
  CHECK(seq.embeddings.rows() == 14);
  CHECK(seq.embeddings.cols() == 5);
  CHECK(seq.segments[0] == Segment::kLocal);
  CHECK(seq.segments[6] == Segment::kGlobal);
  CHECK(seq.segments[8] == Segment::kIndices);
  // Coordinates are a bijection onto the patch grid within each segment.
  std::set<std::pair<std::size_t, std::size_t>> local;
  for (std::size_t k = 0; k < 6; ++k) local.insert({seq.coords[k].row, seq.coords[k].col});
  CHECK(local.size() == 6);
  CHECK(seq.coords[4] == TokenCoord{1, 1});
  CHECK(seq.coords[8 + 3] == TokenCoord{1, 1});  // index 1, time block 1
  // Positional table starts near N(0, 0.02^2).
  CHECK(emb.positional.value.cwiseAbs().maxCoeff() < 0.2);
  CHECK(emb.positional.value.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("zero inputs, biases and positional table give zero embeddings") {
  Embedding emb(SmallShape(), SmallSpec(), true, true);
  std::mt19937_64 rng(2);
  emb.init(rng);
  emb.positional.value.setZero();
  const SourceTokens src = emb.tokenize(Tensor3(2, 4, 6), Tensor3(2, 4, 2), Mat::Zero(3, 2));
  CHECK(emb.forward(src).embeddings.isZero(0.0));
}

TEST_CASE("embedding is linear in its inputs") {
  Embedding emb(SmallShape(), SmallSpec(), true, true);
  std::mt19937_64 rng(3);
  emb.init(rng);
  emb.positional.value.setZero();
  const Tensor3 l1 = RandomTensor(2, 4, 6, rng), l2 = RandomTensor(2, 4, 6, rng);
  const Tensor3 g1 = RandomTensor(2, 4, 2, rng), g2 = RandomTensor(2, 4, 2, rng);
  const Mat i1 = RandomMat(3, 2, rng), i2 = RandomMat(3, 2, rng);
  Tensor3 ls = l1, gs = g1;
  for (std::size_t k = 0; k < ls.size(); ++k) ls.data[k] = 2 * l1.data[k] + 3 * l2.data[k];
  for (std::size_t k = 0; k < gs.size(); ++k) gs.data[k] = 2 * g1.data[k] + 3 * g2.data[k];
  const Mat is = 2 * i1 + 3 * i2;
  // Biases are zero after init, so the maps are linear.
  const Mat e1 = emb.forward(emb.tokenize(l1, g1, i1)).embeddings;
  const Mat e2 = emb.forward(emb.tokenize(l2, g2, i2)).embeddings;
  const Mat es = emb.forward(emb.tokenize(ls, gs, is)).embeddings;
  CHECK((es - (2 * e1 + 3 * e2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("swapping two identical patches keeps the multiset of embeddings") {
  Embedding emb(SmallShape(), SmallSpec(), false, false);
  std::mt19937_64 rng(4);
  emb.init(rng);
  emb.positional.value.setZero();
  Tensor3 x = RandomTensor(2, 4, 6, rng);
  // Make patch (0,0) equal to patch (1,2), then swap patches (0,0) and (0,1).
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) x(c, 2 + i, 4 + j) = x(c, i, j);
  Tensor3 y = x;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) std::swap(y(c, i, j), y(c, i, 2 + j));
  const Mat ex = emb.forward(emb.tokenize(x, {}, {})).embeddings;
  const Mat ey = emb.forward(emb.tokenize(y, {}, {})).embeddings;
  auto rows = [](const Mat& m) {
    std::vector<std::vector<double>> r;
    for (Eigen::Index i = 0; i < m.rows(); ++i) r.emplace_back(m.row(i).begin(), m.row(i).end());
    std::sort(r.begin(), r.end());
    return r;
  };
  CHECK(rows(ex) == rows(ey));
}

TEST_CASE("shape mismatch at embedding is a configuration error") {
  Embedding emb(SmallShape(), SmallSpec(), true, true);
  std::mt19937_64 rng(5);
  emb.init(rng);
  CHECK_THROWS_AS(emb.tokenize(Tensor3(3, 4, 6), Tensor3(2, 4, 2), Mat::Zero(3, 2)), ConfigError);
  CHECK_THROWS_AS(emb.tokenize(Tensor3(2, 4, 6), Tensor3(2, 2, 4), Mat::Zero(3, 2)), ConfigError);
  CHECK_THROWS_AS(emb.tokenize(Tensor3(2, 4, 6), Tensor3(2, 4, 2), Mat::Zero(3, 4)), ConfigError);
}

TEST_CASE("embedding input gradient matches finite differences") {
  Embedding emb(SmallShape(), SmallSpec(), true, true);
  std::mt19937_64 rng(6);
  emb.init(rng);
  Tensor3 xl = RandomTensor(2, 4, 6, rng);
  const Tensor3 xg = RandomTensor(2, 4, 2, rng);
  const Mat xi = RandomMat(3, 2, rng);
  const Mat w = RandomMat(14, 5, rng);  // loss = <w, embeddings>
  auto loss = [&](const Tensor3& l, const Tensor3& g, const Mat& i) {
    return (emb.forward(emb.tokenize(l, g, i)).embeddings.array() * w.array()).sum();
  };
  const SourceTokens src = emb.tokenize(xl, xg, xi);
  const SourceGradients grads = emb.backward(src, w, false);
  const double h = 1e-6;
  for (std::size_t k : {0, 7, 19, 47}) {
    Tensor3 p = xl, m = xl;
    p.data[k] += h;
    m.data[k] -= h;
    CHECK(grads.local.data[k] == doctest::Approx((loss(p, xg, xi) - loss(m, xg, xi)) / (2 * h)).epsilon(1e-6));
  }
  Mat ip = xi, im = xi;
  ip(2, 1) += h;
  im(2, 1) -= h;
  CHECK(grads.indices(2, 1) == doctest::Approx((loss(xl, xg, ip) - loss(xl, xg, im)) / (2 * h)).epsilon(1e-6));
}
