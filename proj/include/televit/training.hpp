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

#ifndef TELEVIT_TRAINING_HPP_
#define TELEVIT_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "televit/checkpoint.hpp"
#include "televit/datacube.hpp"
#include "televit/model.hpp"

namespace televit {

struct TrainConfig {
  std::size_t epochs = 30;
  double lr = 1e-4;
  double warmup = 0.05;  // fraction of total steps
  std::size_t batch_size = 16;
  std::uint64_t seed = 42;
  std::size_t horizon = 0;
  std::size_t max_steps = 0;  // 0: no cap
  bool mask_ocean_in_loss = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Stop after this many epochs while keeping the full-length schedule, so a
  // later resume continues the same run. 0 disables.
  std::size_t stop_after_epoch = 0;

  void validate() const;
};

// Mean over cells of -log softmax(logits)[target]. With a mask only cells with
// mask != 0 count. When d_logits is given it receives grad_scale * dL/dlogits.
double CrossEntropyLoss(const Tensor3& logits, const Tensor3& target,
                        const std::vector<std::uint8_t>* mask = nullptr,
                        Tensor3* d_logits = nullptr, double grad_scale = 1.0);

std::size_t WarmupSteps(std::size_t total_steps, double warmup_fraction);
// Linear ramp from 0 to peak over the warmup, then cosine decay to 0 at the
// final step (total_steps - 1).
double LearningRate(std::size_t step, std::size_t total_steps, double peak,
                    double warmup_fraction);

class Adam {
 public:
  Adam(ParamList params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(double lr);
  std::size_t steps() const { return t_; }

  // Moment estimates are named "adam.m.<param>" / "adam.v.<param>".
  void save_state(Checkpoint& ck) const;
  void load_state(const Checkpoint& ck);

 private:
  ParamList params_;
  std::vector<Mat> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual Sample get(std::size_t i) const = 0;
};

class VectorSampleSource : public SampleSource {
 public:
  explicit VectorSampleSource(std::vector<Sample> samples) : samples_(std::move(samples)) {}
  std::size_t size() const override { return samples_.size(); }
  Sample get(std::size_t i) const override { return samples_.at(i); }

 private:
  std::vector<Sample> samples_;
};

class ExtractorSampleSource : public SampleSource {
 public:
  ExtractorSampleSource(const SampleExtractor& extractor, std::vector<SampleIndex> indices)
      : extractor_(&extractor), indices_(std::move(indices)) {}
  std::size_t size() const override { return indices_.size(); }
  Sample get(std::size_t i) const override { return extractor_->extract(indices_.at(i)); }

 private:
  const SampleExtractor* extractor_;
  std::vector<SampleIndex> indices_;
};

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double loss = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  Checkpoint best;  // parameters from the lowest-validation-loss epoch
  Checkpoint last;  // parameters plus optimizer state, for resuming
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool finished = false;  // false when stopped early via stop_after_epoch
};

// 1-based index of the first minimum.
std::size_t SelectBestEpoch(std::span<const double> val_losses);

// Mean per-sample loss.
double EvaluateLoss(const TeleViT& model, const SampleSource& data, bool mask_ocean);

// Called after every epoch with the state so far; `last` is current.
using EpochCallback = std::function<void(const TrainResult&)>;

// Train in place. `resume` continues from a TrainResult produced by an earlier
// call with the same config; the step losses then match an uninterrupted run.
TrainResult Train(TeleViT& model, const SampleSource& train, const SampleSource& val,
                  const TrainConfig& config, std::ostream* log = nullptr,
                  const TrainResult* resume = nullptr, const EpochCallback& on_epoch = {});

// Rebuilds a resumable state from the checkpoints written by on_epoch.
TrainResult ResumeState(const Checkpoint& last, const Checkpoint& best);

}  // namespace televit

#endif  // TELEVIT_TRAINING_HPP_
