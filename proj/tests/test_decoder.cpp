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

#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "televit/decoder.hpp"

using namespace televit;
using televit::testing::GradCheck;
using televit::testing::RandomMat;

namespace {

// Local tokens on a rows x cols grid, followed by n_other global tokens.
TokenSequence MakeSequence(std::size_t rows, std::size_t cols, std::size_t n_other,
                           std::size_t dim, std::mt19937_64& rng) {
  TokenSequence s;
  s.embeddings = RandomMat(rows * cols + n_other, dim, rng);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      s.segments.push_back(Segment::kLocal);
      s.coords.push_back({r, c});
    }
  for (std::size_t k = 0; k < n_other; ++k) {
    s.segments.push_back(Segment::kGlobal);
    s.coords.push_back({0, k});
  }
  s.counts = {rows * cols, n_other, 0};
  return s;
}

DecoderConfig Config(std::size_t dim, std::size_t patch, std::size_t rows, std::size_t cols,
                     bool shared = true) {
  DecoderConfig c;
  c.dim = dim;
  c.patch = patch;
  c.grid_rows = rows;
  c.grid_cols = cols;
  c.shared = shared;
  return c;
}

PatchPrediction Constant(std::size_t r, std::size_t c, std::size_t p, double v, bool valid = true) {
  PatchPrediction pp;
  pp.patch_row = r;
  pp.patch_col = c;
  pp.map.rows = pp.map.cols = p;
  pp.map.scores.assign(p * p, v);
  pp.map.valid.assign(p * p, valid ? 1 : 0);
  return pp;
}

}  // namespace

TEST_CASE("default configuration decodes 25 tokens into 2 x 80 x 80 logits") {
  std::mt19937_64 rng(1);
  Decoder dec(Config(768, 16, 5, 5));
  dec.init(rng);
  const TokenSequence seq = MakeSequence(5, 5, 172, 768, rng);
  const Tensor3 logits = dec.forward(seq);
  CHECK(logits.shape_string() == "(2,80,80)");
  CHECK(dec.heads.size() == 1);
  CHECK(dec.heads[0].out_features() == 2 * 16 * 16);
}

TEST_CASE("zero weights with bias b give softmax(b)_1 everywhere") {
  std::mt19937_64 rng(2);
  Decoder dec(Config(4, 2, 2, 3));
  dec.init(rng);
  dec.heads[0].weight.value.setZero();
  for (Eigen::Index q = 0; q < 4; ++q) dec.heads[0].bias.value(0, q) = 0.3;
  for (Eigen::Index q = 4; q < 8; ++q) dec.heads[0].bias.value(0, q) = -1.1;
  const PredictionMap map = Decode(dec, MakeSequence(2, 3, 1, 4, rng));
  const double expected = std::exp(-1.1) / (std::exp(0.3) + std::exp(-1.1));
  REQUIRE(map.scores.size() == 4 * 6);
  for (double s : map.scores) CHECK(s == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("class scores sum to one per cell") {
  std::mt19937_64 rng(3);
  Decoder dec(Config(4, 2, 2, 2));
  dec.init(rng);
  const PredictionMap map = Decode(dec, MakeSequence(2, 2, 0, 4, rng));
  for (std::size_t i = 0; i < map.rows; ++i)
    for (std::size_t j = 0; j < map.cols; ++j) {
      const double a = std::exp(map.logits(0, i, j)), b = std::exp(map.logits(1, i, j));
      CHECK(map.score(i, j) == doctest::Approx(b / (a + b)));
      CHECK(map.score(i, j) > 0.0);
      CHECK(map.score(i, j) < 1.0);
    }
}

TEST_CASE("decoder ignores non-local tokens") {
  std::mt19937_64 rng(4);
  Decoder dec(Config(4, 2, 2, 2));
  dec.init(rng);
  TokenSequence seq = MakeSequence(2, 2, 3, 4, rng);
  const Tensor3 a = dec.forward(seq);
  seq.embeddings.bottomRows(3) = RandomMat(3, 4, rng) * 100.0;
  CHECK(dec.forward(seq).data == a.data);
}

TEST_CASE("locality: a token only changes its own output block") {
  std::mt19937_64 rng(5);
  for (bool shared : {true, false}) {
    Decoder dec(Config(4, 3, 2, 3, shared));
    dec.init(rng);
    TokenSequence seq = MakeSequence(2, 3, 2, 4, rng);
    const Tensor3 base = dec.forward(seq);
    for (std::size_t t = 0; t < 6; ++t) {
      TokenSequence pert = seq;
      pert.embeddings.row(static_cast<Eigen::Index>(t)).array() += 0.5;
      const Tensor3 out = dec.forward(pert);
      const std::size_t r = t / 3, c = t % 3;
      for (std::size_t cls = 0; cls < 2; ++cls)
        for (std::size_t i = 0; i < 6; ++i)
          for (std::size_t j = 0; j < 9; ++j) {
            const bool inside = i / 3 == r && j / 3 == c;
            if (!inside) CHECK(out(cls, i, j) == base(cls, i, j));
          }
    }
  }
}

TEST_CASE("token at patch (r, c) fills rows [P r, P r + P) and cols [P c, P c + P)") {
  std::mt19937_64 rng(6);
  Decoder dec(Config(3, 2, 2, 2));
  dec.init(rng);
  const TokenSequence seq = MakeSequence(2, 2, 0, 3, rng);
  const Tensor3 out = dec.forward(seq);
  // Direct projection of token 3 (patch (1, 1)); layout class-major, row, col.
  const Mat proj = seq.embeddings.row(3) * dec.heads[0].weight.value + dec.heads[0].bias.value;
  CHECK(out(0, 2, 2) == doctest::Approx(proj(0, 0)));
  CHECK(out(0, 3, 3) == doctest::Approx(proj(0, 3)));
  CHECK(out(1, 2, 3) == doctest::Approx(proj(0, 5)));
}

TEST_CASE("missing local segment is a contract violation") {
  std::mt19937_64 rng(7);
  Decoder dec(Config(4, 2, 2, 2));
  dec.init(rng);
  TokenSequence seq = MakeSequence(2, 1, 2, 4, rng);
  CHECK_THROWS_AS(dec.forward(seq), ContractViolation);
  TokenSequence none = MakeSequence(0, 0, 4, 4, rng);
  CHECK_THROWS_AS(dec.forward(none), ContractViolation);
}

TEST_CASE("decoder gradients match central differences") {
  std::mt19937_64 rng(8);
  for (bool shared : {true, false}) {
    Decoder dec(Config(4, 2, 2, 2, shared));
    dec.init(rng);
    const TokenSequence seq = MakeSequence(2, 2, 1, 4, rng);
    Tensor3 w(2, 4, 4);
    for (double& v : w.data) v = std::normal_distribution<double>()(rng);
    auto loss = [&] {
      const Tensor3 o = dec.forward(seq);
      double s = 0;
      for (std::size_t k = 0; k < o.size(); ++k) s += o.data[k] * w.data[k];
      return s;
    };
    ParamList params;
    dec.collect("decoder", params);
    for (auto& [n, p] : params) p->zero_grad();
    const Mat d_tokens = dec.backward(seq, w, true);
    CHECK(GradCheck(params, loss, 60, rng).max_rel_error < 1e-6);
    CHECK(d_tokens.row(4).isZero(0.0));
  }
}

TEST_CASE("assembling a 2 x 2 grid of constant patches gives the block mosaic") {
  const auto globe = AssembleGlobe({Constant(0, 0, 2, 0.1), Constant(0, 1, 2, 0.2),
                                    Constant(1, 0, 2, 0.3), Constant(1, 1, 2, 0.4)},
                                   2, 2, 2);
  CHECK(globe.rows == 4);
  CHECK(globe.cols == 4);
  CHECK(globe.score(0, 0) == 0.1);
  CHECK(globe.score(1, 3) == 0.2);
  CHECK(globe.score(3, 0) == 0.3);
  CHECK(globe.score(2, 2) == 0.4);
  for (auto v : globe.valid) CHECK(v == 1);
}

TEST_CASE("absent ocean patch is masked with score zero") {
  const auto globe = AssembleGlobe({Constant(0, 0, 2, 0.5), Constant(1, 1, 2, 0.5)}, 2, 2, 2);
  CHECK(globe.score(0, 2) == 0.0);
  CHECK(globe.valid[0 * 4 + 2] == 0);
  CHECK(globe.valid[3 * 4 + 0] == 0);
  CHECK(globe.valid[3 * 4 + 3] == 1);
}

TEST_CASE("duplicate or misplaced patches are contract violations") {
  CHECK_THROWS_AS(AssembleGlobe({Constant(0, 0, 2, 0.1), Constant(0, 0, 2, 0.2)}, 1, 2, 2),
                  ContractViolation);
  CHECK_THROWS_AS(AssembleGlobe({Constant(0, 2, 2, 0.1)}, 1, 2, 2), ContractViolation);
  CHECK_THROWS_AS(AssembleGlobe({Constant(0, 0, 3, 0.1)}, 1, 2, 2), ContractViolation);
}

TEST_CASE("disassemble after assemble round-trips patch scores exactly") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<PatchPrediction> patches;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      PatchPrediction pp = Constant(r, c, 3, 0.0, (r + c) % 3 != 0);
      for (double& s : pp.map.scores) s = u(rng);
      patches.push_back(pp);
    }
  const auto back = DisassembleGlobe(AssembleGlobe(patches, 3, 4, 3), 3);
  REQUIRE(back.size() == patches.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].patch_row == patches[k].patch_row);
    CHECK(back[k].patch_col == patches[k].patch_col);
    CHECK(back[k].map.scores == patches[k].map.scores);
    CHECK(back[k].map.valid == patches[k].map.valid);
  }
}
