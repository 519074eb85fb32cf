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

#include "televit/decoder.hpp"

#include <cmath>

namespace televit {

PredictionMap MakePredictionMap(Tensor3 logits, std::vector<std::uint8_t> valid) {
  if (logits.channels < 2) throw ContractViolation("prediction needs at least two class logits");
  PredictionMap map;
  map.rows = logits.rows;
  map.cols = logits.cols;
  map.scores.resize(map.rows * map.cols);
  for (std::size_t i = 0; i < map.rows; ++i) {
    for (std::size_t j = 0; j < map.cols; ++j) {
      double m = logits(0, i, j);
      for (std::size_t c = 1; c < logits.channels; ++c) m = std::max(m, logits(c, i, j));
      double z = 0.0;
      for (std::size_t c = 0; c < logits.channels; ++c) z += std::exp(logits(c, i, j) - m);
      map.scores[i * map.cols + j] = std::exp(logits(1, i, j) - m) / z;
    }
  }
  map.valid = valid.empty() ? std::vector<std::uint8_t>(map.rows * map.cols, 1) : std::move(valid);
  if (map.valid.size() != map.scores.size()) throw ContractViolation("valid mask shape mismatch");
  map.logits = std::move(logits);
  return map;
}

Decoder::Decoder(const DecoderConfig& config) : config_(config) {
  if (config.classes < 2) throw ConfigError("decoder needs at least two classes");
  const std::size_t n_heads = config.shared ? 1 : config.grid_rows * config.grid_cols;
  heads.reserve(n_heads);
  for (std::size_t i = 0; i < n_heads; ++i) {
    heads.emplace_back(config.dim, config.classes * config.patch * config.patch);
  }
}

void Decoder::init(std::mt19937_64& rng) {
  for (auto& h : heads) h.init(rng);
}

void Decoder::check_sequence(const TokenSequence& encoded) const {
  const std::size_t n_local = config_.grid_rows * config_.grid_cols;
  std::size_t found = 0;
  for (std::size_t t = 0; t < encoded.size(); ++t) {
    if (encoded.segments[t] != Segment::kLocal) continue;
    if (t != found) throw ContractViolation("local tokens must form the leading segment");
    const TokenCoord& c = encoded.coords[t];
    if (c.row >= config_.grid_rows || c.col >= config_.grid_cols) {
      throw ContractViolation("local token coordinate outside the patch grid");
    }
    ++found;
  }
  if (found != n_local) {
    throw ContractViolation("decoder expects " + std::to_string(n_local) + " local tokens, got " +
                            std::to_string(found));
  }
}

Tensor3 Decoder::forward(const TokenSequence& encoded) const {
  check_sequence(encoded);
  const std::size_t p = config_.patch;
  const std::size_t k = config_.classes;
  Tensor3 logits(k, config_.grid_rows * p, config_.grid_cols * p);
  const std::size_t n_local = config_.grid_rows * config_.grid_cols;
  Mat projected;
  if (config_.shared) projected = heads[0].forward(encoded.embeddings.topRows(static_cast<Eigen::Index>(n_local)));
  for (std::size_t t = 0; t < n_local; ++t) {
    RowVec row = config_.shared
                     ? RowVec(projected.row(static_cast<Eigen::Index>(t)))
                     : RowVec(head_for(t).forward(encoded.embeddings.row(static_cast<Eigen::Index>(t))));
    const TokenCoord& c = encoded.coords[t];
    std::size_t q = 0;
    for (std::size_t cls = 0; cls < k; ++cls) {
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
          logits(cls, c.row * p + i, c.col * p + j) = row(static_cast<Eigen::Index>(q++));
        }
      }
    }
  }
  return logits;
}

Mat Decoder::backward(const TokenSequence& encoded, const Tensor3& d_logits, bool param_grads) {
  check_sequence(encoded);
  const std::size_t p = config_.patch;
  const std::size_t k = config_.classes;
  const std::size_t n_local = config_.grid_rows * config_.grid_cols;
  const auto out_dim = static_cast<Eigen::Index>(k * p * p);
  Mat dy(static_cast<Eigen::Index>(n_local), out_dim);
  for (std::size_t t = 0; t < n_local; ++t) {
    const TokenCoord& c = encoded.coords[t];
    std::size_t q = 0;
    for (std::size_t cls = 0; cls < k; ++cls) {
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
          dy(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(q++)) =
              d_logits(cls, c.row * p + i, c.col * p + j);
        }
      }
    }
  }
  Mat d_tokens = Mat::Zero(encoded.embeddings.rows(), encoded.embeddings.cols());
  const auto local = encoded.embeddings.topRows(static_cast<Eigen::Index>(n_local));
  if (config_.shared) {
    d_tokens.topRows(static_cast<Eigen::Index>(n_local)) = heads[0].backward(local, dy, param_grads);
  } else {
    for (std::size_t t = 0; t < n_local; ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      d_tokens.row(ti) = heads[t].backward(local.row(ti), dy.row(ti), param_grads);
    }
  }
  return d_tokens;
}

void Decoder::collect(const std::string& prefix, ParamList& out) {
  if (config_.shared) {
    heads[0].collect(prefix + ".head", out);
  } else {
    for (std::size_t i = 0; i < heads.size(); ++i) {
      heads[i].collect(prefix + ".heads." + std::to_string(i), out);
    }
  }
}

PredictionMap Decode(const Decoder& decoder, const TokenSequence& encoded,
                     std::vector<std::uint8_t> valid) {
  return MakePredictionMap(decoder.forward(encoded), std::move(valid));
}

PredictionMap AssembleGlobe(const std::vector<PatchPrediction>& patches, std::size_t grid_rows,
                            std::size_t grid_cols, std::size_t patch) {
  PredictionMap globe;
  globe.rows = grid_rows * patch;
  globe.cols = grid_cols * patch;
  globe.scores.assign(globe.rows * globe.cols, 0.0);
  globe.valid.assign(globe.rows * globe.cols, 0);
  std::vector<std::uint8_t> seen(grid_rows * grid_cols, 0);
  for (const auto& pp : patches) {
    if (pp.patch_row >= grid_rows || pp.patch_col >= grid_cols) {
      throw ContractViolation("patch outside the mosaic grid");
    }
    if (pp.map.rows != patch || pp.map.cols != patch) {
      throw ContractViolation("patch prediction has the wrong size");
    }
    auto& flag = seen[pp.patch_row * grid_cols + pp.patch_col];
    if (flag) {
      throw ContractViolation("duplicate patch (" + std::to_string(pp.patch_row) + "," +
                              std::to_string(pp.patch_col) + ") in mosaic");
    }
    flag = 1;
    for (std::size_t i = 0; i < patch; ++i) {
      for (std::size_t j = 0; j < patch; ++j) {
        const std::size_t g = (pp.patch_row * patch + i) * globe.cols + pp.patch_col * patch + j;
        globe.scores[g] = pp.map.scores[i * patch + j];
        globe.valid[g] = pp.map.valid[i * patch + j];
      }
    }
  }
  return globe;
}

std::vector<PatchPrediction> DisassembleGlobe(const PredictionMap& globe, std::size_t patch) {
  if (patch == 0 || globe.rows % patch != 0 || globe.cols % patch != 0) {
    throw ContractViolation("mosaic is not divisible into patches");
  }
  std::vector<PatchPrediction> out;
  for (std::size_t r = 0; r < globe.rows / patch; ++r) {
    for (std::size_t c = 0; c < globe.cols / patch; ++c) {
      PatchPrediction pp;
      pp.patch_row = r;
      pp.patch_col = c;
      pp.map.rows = patch;
      pp.map.cols = patch;
      pp.map.scores.resize(patch * patch);
      pp.map.valid.resize(patch * patch);
      for (std::size_t i = 0; i < patch; ++i) {
        for (std::size_t j = 0; j < patch; ++j) {
          const std::size_t g = (r * patch + i) * globe.cols + c * patch + j;
          pp.map.scores[i * patch + j] = globe.scores[g];
          pp.map.valid[i * patch + j] = globe.valid[g];
        }
      }
      out.push_back(std::move(pp));
    }
  }
  return out;
}

}  // namespace televit
