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

#include "televit/encoder.hpp"

#include <cmath>

namespace televit {

namespace {

Mat DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Mat mask(rows, cols);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : 0.0;
  return mask;
}

}  // namespace

void EncoderConfig::validate() const {
  if (dim == 0 || heads == 0 || layers == 0 || mlp_dim == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  if (dim % heads != 0) {
    throw ConfigError("model dimension " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
}

Mat ScaledDotProductAttention(const Mat& q, const Mat& k, const Mat& v, Mat* weights) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Mat probs = RowSoftmax((q * k.transpose()) * scale);
  Mat out = probs * v;
  if (weights) *weights = std::move(probs);
  return out;
}

// ---------------------------------------------------------------------------

MultiHeadAttention::MultiHeadAttention(std::size_t dim, std::size_t heads)
    : query(dim, dim), key(dim, dim), value(dim, dim), output(dim, dim), heads_(heads) {}

void MultiHeadAttention::init(std::mt19937_64& rng) {
  query.init(rng);
  key.init(rng);
  value.init(rng);
  output.init(rng);
}

Mat MultiHeadAttention::forward(const Mat& x, Cache* cache) const {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const Eigen::Index dh = d / static_cast<Eigen::Index>(heads_);
  Mat q = query.forward(x);
  Mat k = key.forward(x);
  Mat v = value.forward(x);
  Mat concat(n, d);
  std::vector<Mat> probs(heads_);
  for (std::size_t h = 0; h < heads_; ++h) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
    concat.middleCols(c0, dh) =
        ScaledDotProductAttention(q.middleCols(c0, dh), k.middleCols(c0, dh),
                                  v.middleCols(c0, dh), &probs[h]);
  }
  Mat y = output.forward(concat);
  if (cache) {
    cache->input = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
    cache->probs = std::move(probs);
  }
  return y;
}

Mat MultiHeadAttention::backward(const Cache& cache, const Mat& dy, bool param_grads) {
  const Eigen::Index n = dy.rows();
  const Eigen::Index d = dy.cols();
  const Eigen::Index dh = d / static_cast<Eigen::Index>(heads_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Mat d_concat = output.backward(cache.concat, dy, param_grads);
  Mat dq(n, d), dk(n, d), dv(n, d);
  for (std::size_t h = 0; h < heads_; ++h) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
    const Mat& p = cache.probs[h];
    const auto d_out = d_concat.middleCols(c0, dh);
    const Mat dp = d_out * cache.v.middleCols(c0, dh).transpose();
    dv.middleCols(c0, dh) = p.transpose() * d_out;
    // Softmax Jacobian, row by row: ds = p * (dp - <dp, p>).
    const Eigen::VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
    const Mat ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * scale;
    dq.middleCols(c0, dh) = ds * cache.k.middleCols(c0, dh);
    dk.middleCols(c0, dh) = ds.transpose() * cache.q.middleCols(c0, dh);
  }
  Mat dx = query.backward(cache.input, dq, param_grads);
  dx += key.backward(cache.input, dk, param_grads);
  dx += value.backward(cache.input, dv, param_grads);
  return dx;
}

void MultiHeadAttention::collect(const std::string& prefix, ParamList& out) {
  query.collect(prefix + ".query", out);
  key.collect(prefix + ".key", out);
  value.collect(prefix + ".value", out);
  output.collect(prefix + ".output", out);
}

// ---------------------------------------------------------------------------

EncoderBlock::EncoderBlock(const EncoderConfig& config)
    : ln1(config.dim),
      ln2(config.dim),
      attn(config.dim, config.heads),
      fc1(config.dim, config.mlp_dim),
      fc2(config.mlp_dim, config.dim),
      dropout(config.dropout) {}

void EncoderBlock::init(std::mt19937_64& rng) {
  attn.init(rng);
  fc1.init(rng);
  fc2.init(rng);
}

Mat EncoderBlock::forward(const Mat& x, Cache* cache, std::mt19937_64* dropout_rng) const {
  const bool drop = dropout_rng != nullptr && dropout > 0.0;
  LayerNorm::Cache ln1_cache, ln2_cache;
  MultiHeadAttention::Cache attn_cache;
  const bool keep = cache != nullptr;

  Mat a = attn.forward(ln1.forward(x, keep ? &ln1_cache : nullptr), keep ? &attn_cache : nullptr);
  Mat attn_mask;
  if (drop) {
    attn_mask = DropoutMask(a.rows(), a.cols(), dropout, *dropout_rng);
    a.array() *= attn_mask.array();
  }
  Mat h = x + a;

  Mat ln2_out = ln2.forward(h, keep ? &ln2_cache : nullptr);
  Mat pre = fc1.forward(ln2_out);
  Mat act = pre.unaryExpr([](double v) { return Gelu(v); });
  Mat m = fc2.forward(act);
  Mat mlp_mask;
  if (drop) {
    mlp_mask = DropoutMask(m.rows(), m.cols(), dropout, *dropout_rng);
    m.array() *= mlp_mask.array();
  }
  if (keep) {
    cache->ln1 = std::move(ln1_cache);
    cache->ln2 = std::move(ln2_cache);
    cache->attn = std::move(attn_cache);
    cache->ln2_out = std::move(ln2_out);
    cache->mlp_pre = std::move(pre);
    cache->mlp_act = std::move(act);
    cache->attn_mask = std::move(attn_mask);
    cache->mlp_mask = std::move(mlp_mask);
  }
  return h + m;
}

Mat EncoderBlock::backward(const Cache& cache, const Mat& dy, bool param_grads) {
  Mat dm = dy;
  if (cache.mlp_mask.size() > 0) dm.array() *= cache.mlp_mask.array();
  const Mat d_act = fc2.backward(cache.mlp_act, dm, param_grads);
  const Mat d_pre =
      (d_act.array() * cache.mlp_pre.unaryExpr([](double v) { return GeluDerivative(v); }).array())
          .matrix();
  const Mat d_ln2 = fc1.backward(cache.ln2_out, d_pre, param_grads);
  Mat dh = dy + ln2.backward(cache.ln2, d_ln2, param_grads);

  Mat da = dh;
  if (cache.attn_mask.size() > 0) da.array() *= cache.attn_mask.array();
  const Mat d_ln1 = attn.backward(cache.attn, da, param_grads);
  return dh + ln1.backward(cache.ln1, d_ln1, param_grads);
}

void EncoderBlock::collect(const std::string& prefix, ParamList& out) {
  ln1.collect(prefix + ".ln1", out);
  attn.collect(prefix + ".attn", out);
  ln2.collect(prefix + ".ln2", out);
  fc1.collect(prefix + ".mlp.fc1", out);
  fc2.collect(prefix + ".mlp.fc2", out);
}

// ---------------------------------------------------------------------------

Encoder::Encoder(const EncoderConfig& config) : final_norm(config.dim), config_(config) {
  config.validate();
  blocks.reserve(config.layers);
  for (std::size_t l = 0; l < config.layers; ++l) blocks.emplace_back(config);
}

void Encoder::init(std::mt19937_64& rng) {
  for (auto& b : blocks) b.init(rng);
}

Mat Encoder::forward(const Mat& x, Tape* tape, AttentionRecord* record,
                     std::mt19937_64* dropout_rng) const {
  if (static_cast<std::size_t>(x.cols()) != config_.dim) {
    throw ConfigError("token width " + std::to_string(x.cols()) +
                      " does not match encoder dimension " + std::to_string(config_.dim));
  }
  const bool need_cache = tape != nullptr || record != nullptr;
  if (tape) tape->blocks.assign(blocks.size(), {});
  if (record) {
    record->layers = blocks.size();
    record->heads = config_.heads;
    record->tokens = static_cast<std::size_t>(x.rows());
    record->weights.assign(blocks.size() * config_.heads, Mat());
  }
  Mat h = x;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    EncoderBlock::Cache local_cache;
    EncoderBlock::Cache* cache = tape ? &tape->blocks[l] : (need_cache ? &local_cache : nullptr);
    h = blocks[l].forward(h, cache, dropout_rng);
    if (!h.allFinite()) {
      throw NumericFailure("non-finite activations in encoder layer " + std::to_string(l));
    }
    if (record) {
      for (std::size_t a = 0; a < config_.heads; ++a) record->at(l, a) = cache->attn.probs[a];
    }
  }
  Mat out = final_norm.forward(h, tape ? &tape->final_norm : nullptr);
  if (!out.allFinite()) {
    throw NumericFailure("non-finite activations in encoder layer " +
                         std::to_string(blocks.size()) + " (final norm)");
  }
  return out;
}

Mat Encoder::backward(const Tape& tape, const Mat& dy, bool param_grads) {
  Mat d = final_norm.backward(tape.final_norm, dy, param_grads);
  for (std::size_t l = blocks.size(); l-- > 0;) d = blocks[l].backward(tape.blocks[l], d, param_grads);
  return d;
}

void Encoder::collect(const std::string& prefix, ParamList& out) {
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    blocks[l].collect(prefix + ".layers." + std::to_string(l), out);
  }
  final_norm.collect(prefix + ".final_norm", out);
}

TokenSequence EncoderForward(const Encoder& encoder, const TokenSequence& seq,
                             AttentionRecord* record) {
  TokenSequence out;
  out.segments = seq.segments;
  out.coords = seq.coords;
  out.counts = seq.counts;
  out.embeddings = encoder.forward(seq.embeddings, nullptr, record);
  if (record) record->counts = seq.counts;
  return out;
}

}  // namespace televit
