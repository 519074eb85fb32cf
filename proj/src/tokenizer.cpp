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

#include "televit/tokenizer.hpp"

namespace televit {

namespace {

void CheckSpatial(std::size_t rows, std::size_t cols, std::size_t patch, const char* what) {
  if (patch == 0 || rows % patch != 0 || cols % patch != 0) {
    throw ConfigError(std::string(what) + " input " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " is not divisible by patch size " +
                      std::to_string(patch));
  }
}

void CheckIndices(std::size_t steps, std::size_t patch) {
  if (patch == 0 || steps % patch != 0) {
    throw ConfigError("indices length " + std::to_string(steps) +
                      " is not divisible by indices patch " + std::to_string(patch));
  }
}

}  // namespace

Mat TokenizeSpatial(const Tensor3& x, std::size_t patch) {
  CheckSpatial(x.rows, x.cols, patch, "spatial");
  const std::size_t grid_r = x.rows / patch;
  const std::size_t grid_c = x.cols / patch;
  const std::size_t len = x.channels * patch * patch;
  Mat tokens(static_cast<Eigen::Index>(grid_r * grid_c), static_cast<Eigen::Index>(len));
  for (std::size_t pr = 0; pr < grid_r; ++pr) {
    for (std::size_t pc = 0; pc < grid_c; ++pc) {
      double* row = tokens.row(static_cast<Eigen::Index>(pr * grid_c + pc)).data();
      std::size_t k = 0;
      for (std::size_t c = 0; c < x.channels; ++c) {
        for (std::size_t i = 0; i < patch; ++i) {
          for (std::size_t j = 0; j < patch; ++j) row[k++] = x(c, pr * patch + i, pc * patch + j);
        }
      }
    }
  }
  return tokens;
}

Tensor3 UntokenizeSpatial(const Mat& tokens, std::size_t channels, std::size_t rows,
                          std::size_t cols, std::size_t patch) {
  CheckSpatial(rows, cols, patch, "spatial");
  const std::size_t grid_c = cols / patch;
  if (static_cast<std::size_t>(tokens.rows()) != (rows / patch) * grid_c ||
      static_cast<std::size_t>(tokens.cols()) != channels * patch * patch) {
    throw ContractViolation("token matrix does not match the spatial layout");
  }
  Tensor3 x(channels, rows, cols);
  for (std::size_t t = 0; t < static_cast<std::size_t>(tokens.rows()); ++t) {
    const std::size_t pr = t / grid_c, pc = t % grid_c;
    const double* row = tokens.row(static_cast<Eigen::Index>(t)).data();
    std::size_t k = 0;
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t i = 0; i < patch; ++i) {
        for (std::size_t j = 0; j < patch; ++j) x(c, pr * patch + i, pc * patch + j) = row[k++];
      }
    }
  }
  return x;
}

Mat TokenizeLocal(const Tensor3& x_local, const TokenizationSpec& spec) {
  CheckSpatial(x_local.rows, x_local.cols, spec.local_patch, "local");
  return TokenizeSpatial(x_local, spec.local_patch);
}

Mat TokenizeGlobal(const Tensor3& x_global, const TokenizationSpec& spec) {
  CheckSpatial(x_global.rows, x_global.cols, spec.global_patch, "global");
  return TokenizeSpatial(x_global, spec.global_patch);
}

Mat TokenizeIndices(const Mat& x_indices, const TokenizationSpec& spec) {
  const auto channels = static_cast<std::size_t>(x_indices.rows());
  const auto steps = static_cast<std::size_t>(x_indices.cols());
  CheckIndices(steps, spec.indices_patch);
  const std::size_t p = spec.indices_patch;
  const std::size_t blocks = steps / p;
  Mat tokens(static_cast<Eigen::Index>(channels * blocks), static_cast<Eigen::Index>(p));
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t k = 0; k < p; ++k) {
        tokens(static_cast<Eigen::Index>(c * blocks + b), static_cast<Eigen::Index>(k)) =
            x_indices(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(b * p + k));
      }
    }
  }
  return tokens;
}

Mat UntokenizeIndices(const Mat& tokens, std::size_t channels, std::size_t steps,
                      std::size_t patch) {
  CheckIndices(steps, patch);
  const std::size_t blocks = steps / patch;
  Mat x(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(steps));
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t k = 0; k < patch; ++k) {
        x(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(b * patch + k)) =
            tokens(static_cast<Eigen::Index>(c * blocks + b), static_cast<Eigen::Index>(k));
      }
    }
  }
  return x;
}

SegmentCounts CountTokens(const InputShape& shape, const TokenizationSpec& spec, bool use_global,
                          bool use_indices) {
  CheckSpatial(shape.local_rows, shape.local_cols, spec.local_patch, "local");
  SegmentCounts n;
  n.local = (shape.local_rows / spec.local_patch) * (shape.local_cols / spec.local_patch);
  if (use_global) {
    CheckSpatial(shape.global_rows, shape.global_cols, spec.global_patch, "global");
    n.global = (shape.global_rows / spec.global_patch) * (shape.global_cols / spec.global_patch);
  }
  if (use_indices) {
    CheckIndices(shape.index_steps, spec.indices_patch);
    n.indices = shape.index_channels * (shape.index_steps / spec.indices_patch);
  }
  return n;
}

Embedding::Embedding(const InputShape& shape, const TokenizationSpec& spec, bool use_global,
                     bool use_indices)
    : shape_(shape), spec_(spec), use_global_(use_global), use_indices_(use_indices) {
  if (spec.dim == 0) throw ConfigError("embedding dimension must be positive");
  counts_ = CountTokens(shape, spec, use_global, use_indices);
  local = Linear(shape.local_channels * spec.local_patch * spec.local_patch, spec.dim);
  if (use_global) {
    global = Linear(shape.global_channels * spec.global_patch * spec.global_patch, spec.dim);
  }
  if (use_indices) indices = Linear(spec.indices_patch, spec.dim);
  positional.resize(static_cast<Eigen::Index>(counts_.total()), static_cast<Eigen::Index>(spec.dim));

  const auto add_grid = [&](Segment seg, std::size_t grid_r, std::size_t grid_c) {
    for (std::size_t r = 0; r < grid_r; ++r) {
      for (std::size_t c = 0; c < grid_c; ++c) {
        segments_.push_back(seg);
        coords_.push_back({r, c});
      }
    }
  };
  add_grid(Segment::kLocal, shape.local_rows / spec.local_patch, shape.local_cols / spec.local_patch);
  if (use_global) {
    add_grid(Segment::kGlobal, shape.global_rows / spec.global_patch,
             shape.global_cols / spec.global_patch);
  }
  if (use_indices) {
    add_grid(Segment::kIndices, shape.index_channels, shape.index_steps / spec.indices_patch);
  }
}

void Embedding::init(std::mt19937_64& rng) {
  local.init(rng);
  if (use_global_) global.init(rng);
  if (use_indices_) indices.init(rng);
  std::normal_distribution<double> normal(0.0, 0.02);
  for (Eigen::Index i = 0; i < positional.value.size(); ++i) positional.value.data()[i] = normal(rng);
}

SourceTokens Embedding::tokenize(const Tensor3& x_local, const Tensor3& x_global,
                                 const Mat& x_indices) const {
  const auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  check(x_local.channels == shape_.local_channels && x_local.rows == shape_.local_rows &&
            x_local.cols == shape_.local_cols,
        "local input " + x_local.shape_string() + " does not match the model input shape");
  SourceTokens out;
  out.local = TokenizeLocal(x_local, spec_);
  if (use_global_) {
    check(x_global.channels == shape_.global_channels && x_global.rows == shape_.global_rows &&
              x_global.cols == shape_.global_cols,
          "global input " + x_global.shape_string() + " does not match the model input shape");
    out.global = TokenizeGlobal(x_global, spec_);
  }
  if (use_indices_) {
    check(static_cast<std::size_t>(x_indices.rows()) == shape_.index_channels &&
              static_cast<std::size_t>(x_indices.cols()) == shape_.index_steps,
          "indices input does not match the model input shape");
    out.indices = TokenizeIndices(x_indices, spec_);
  }
  return out;
}

TokenSequence Embedding::forward(const SourceTokens& tokens) const {
  const auto d = static_cast<Eigen::Index>(spec_.dim);
  if (static_cast<std::size_t>(tokens.local.rows()) != counts_.local ||
      static_cast<std::size_t>(tokens.local.cols()) != local.in_features()) {
    throw ConfigError("local tokens do not match the embedding parameters");
  }
  TokenSequence seq;
  seq.counts = counts_;
  seq.segments = segments_;
  seq.coords = coords_;
  seq.embeddings.resize(static_cast<Eigen::Index>(counts_.total()), d);
  const auto nl = static_cast<Eigen::Index>(counts_.local);
  const auto ng = static_cast<Eigen::Index>(counts_.global);
  const auto ni = static_cast<Eigen::Index>(counts_.indices);
  seq.embeddings.topRows(nl) = local.forward(tokens.local);
  if (use_global_) {
    if (tokens.global.rows() != ng || static_cast<std::size_t>(tokens.global.cols()) != global.in_features()) {
      throw ConfigError("global tokens do not match the embedding parameters");
    }
    seq.embeddings.middleRows(nl, ng) = global.forward(tokens.global);
  }
  if (use_indices_) {
    if (tokens.indices.rows() != ni || static_cast<std::size_t>(tokens.indices.cols()) != indices.in_features()) {
      throw ConfigError("index tokens do not match the embedding parameters");
    }
    seq.embeddings.bottomRows(ni) = indices.forward(tokens.indices);
  }
  seq.embeddings += positional.value;
  return seq;
}

SourceGradients Embedding::backward(const SourceTokens& tokens, const Mat& d_embeddings,
                                    bool param_grads) {
  const auto nl = static_cast<Eigen::Index>(counts_.local);
  const auto ng = static_cast<Eigen::Index>(counts_.global);
  const auto ni = static_cast<Eigen::Index>(counts_.indices);
  if (param_grads) positional.grad += d_embeddings;
  SourceGradients g;
  g.local = UntokenizeSpatial(local.backward(tokens.local, d_embeddings.topRows(nl), param_grads),
                              shape_.local_channels, shape_.local_rows, shape_.local_cols,
                              spec_.local_patch);
  if (use_global_) {
    g.global = UntokenizeSpatial(
        global.backward(tokens.global, d_embeddings.middleRows(nl, ng), param_grads),
        shape_.global_channels, shape_.global_rows, shape_.global_cols, spec_.global_patch);
  }
  if (use_indices_) {
    g.indices = UntokenizeIndices(
        indices.backward(tokens.indices, d_embeddings.bottomRows(ni), param_grads),
        shape_.index_channels, shape_.index_steps, spec_.indices_patch);
  }
  return g;
}

void Embedding::collect(const std::string& prefix, ParamList& out) {
  local.collect(prefix + ".local", out);
  if (use_global_) global.collect(prefix + ".global", out);
  if (use_indices_) indices.collect(prefix + ".indices", out);
  out.emplace_back(prefix + ".positional", &positional);
}

}  // namespace televit
