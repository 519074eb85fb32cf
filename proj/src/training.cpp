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

#include "televit/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace televit {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be a finite non-negative number");
  if (!(warmup >= 0.0 && warmup < 1.0)) throw ConfigError("train.warmup must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

double CrossEntropyLoss(const Tensor3& logits, const Tensor3& target,
                        const std::vector<std::uint8_t>* mask, Tensor3* d_logits,
                        double grad_scale) {
  if (logits.channels != 2) throw ContractViolation("loss expects 2-class logits");
  if (target.channels != 1 || target.rows != logits.rows || target.cols != logits.cols) {
    throw ContractViolation("target shape " + target.shape_string() + " does not match logits " +
                            logits.shape_string());
  }
  const std::size_t cells = logits.rows * logits.cols;
  if (mask && mask->size() != cells) throw ContractViolation("loss mask has the wrong size");
  std::size_t counted = 0;
  for (std::size_t k = 0; k < cells; ++k) {
    const double y = target.data[k];
    if (y != 0.0 && y != 1.0) {
      throw ContractViolation("target is not binary (value " + std::to_string(y) + ")");
    }
    if (!mask || (*mask)[k]) ++counted;
  }
  if (d_logits) *d_logits = Tensor3(2, logits.rows, logits.cols);
  if (counted == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(counted);
  double total = 0.0;
  for (std::size_t k = 0; k < cells; ++k) {
    if (mask && !(*mask)[k]) continue;
    const double a = logits.data[k], b = logits.data[cells + k];
    const double m = std::max(a, b);
    const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
    const bool pos = target.data[k] == 1.0;
    total += lse - (pos ? b : a);
    if (d_logits) {
      const double p1 = std::exp(b - lse);
      const double p0 = std::exp(a - lse);
      d_logits->data[k] = grad_scale * inv * (p0 - (pos ? 0.0 : 1.0));
      d_logits->data[cells + k] = grad_scale * inv * (p1 - (pos ? 1.0 : 0.0));
    }
  }
  return total * inv;
}

std::size_t WarmupSteps(std::size_t total_steps, double warmup_fraction) {
  return static_cast<std::size_t>(std::ceil(warmup_fraction * static_cast<double>(total_steps)));
}

double LearningRate(std::size_t step, std::size_t total_steps, double peak,
                    double warmup_fraction) {
  if (step >= total_steps) {
    throw ContractViolation("step " + std::to_string(step) + " outside schedule of " +
                            std::to_string(total_steps) + " steps");
  }
  const std::size_t w = WarmupSteps(total_steps, warmup_fraction);
  if (step < w) return peak * static_cast<double>(step) / static_cast<double>(w);
  const std::size_t span = total_steps - 1 - std::min(w, total_steps - 1);
  if (span == 0) return peak;
  const double progress = static_cast<double>(step - w) / static_cast<double>(span);
  return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

Adam::Adam(ParamList params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, p] : params_) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i].second;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
    if (lr == 0.0) continue;  // keep parameters bitwise unchanged
    p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

void Adam::save_state(Checkpoint& ck) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ck.tensors.emplace_back("adam.m." + params_[i].first, m_[i]);
    ck.tensors.emplace_back("adam.v." + params_[i].first, v_[i]);
  }
  ck.metadata["adam_step"] = t_;
}

void Adam::load_state(const Checkpoint& ck) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Mat* m = ck.find("adam.m." + params_[i].first);
    const Mat* v = ck.find("adam.v." + params_[i].first);
    if (!m || !v || m->rows() != m_[i].rows() || m->cols() != m_[i].cols() ||
        v->rows() != v_[i].rows() || v->cols() != v_[i].cols()) {
      throw ContractViolation("optimizer state missing or malformed for " + params_[i].first);
    }
    m_[i] = *m;
    v_[i] = *v;
  }
  t_ = ck.metadata.value("adam_step", std::size_t{0});
}

std::size_t SelectBestEpoch(std::span<const double> val_losses) {
  if (val_losses.empty()) throw ContractViolation("no validation losses to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_losses.size(); ++i) {
    if (val_losses[i] < val_losses[best]) best = i;
  }
  return best + 1;
}

double EvaluateLoss(const TeleViT& model, const SampleSource& data, bool mask_ocean) {
  if (data.size() == 0) throw ContractViolation("cannot evaluate loss on an empty dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample s = data.get(i);
    const auto out = model.forward(s);
    total += CrossEntropyLoss(out.logits, s.y, mask_ocean ? &s.land : nullptr);
  }
  return total / static_cast<double>(data.size());
}

namespace {

std::vector<std::size_t> EpochOrder(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Seeded per epoch so that a resumed run sees the same order.
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void Emit(std::ostream* log, const json& record) {
  if (log) *log << record.dump() << '\n' << std::flush;
}

}  // namespace

TrainResult ResumeState(const Checkpoint& last, const Checkpoint& best) {
  TrainResult r;
  r.last = last;
  r.best = best;
  try {
    r.best_epoch = last.metadata.at("best_epoch");
    r.finished = last.metadata.at("finished");
    for (const auto& e : last.metadata.at("epochs")) {
      r.epochs.push_back({e.at("epoch"), e.at("train_loss"), e.at("val_loss")});
    }
    if (last.metadata.contains("steps")) {
      for (const auto& s : last.metadata["steps"]) {
        r.steps.push_back({s.at(0), s.at(1), s.at(2), s.at(3)});
      }
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("checkpoint lacks resume metadata: ") + e.what());
  }
  return r;
}

TrainResult Train(TeleViT& model, const SampleSource& train, const SampleSource& val,
                  const TrainConfig& config, std::ostream* log, const TrainResult* resume,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train.size() == 0) throw ConfigError("training set is empty");
  if (val.size() == 0) throw ConfigError("validation set is empty");

  const std::size_t per_epoch = (train.size() + config.batch_size - 1) / config.batch_size;
  std::size_t total = per_epoch * config.epochs;
  if (config.max_steps > 0) total = std::min(total, config.max_steps);

  ParamList params = model.parameters();
  Adam adam(params, config.beta1, config.beta2, config.eps);

  TrainResult result;
  std::size_t step = 0;
  std::size_t first_epoch = 1;
  double best_val = std::numeric_limits<double>::infinity();
  if (resume) {
    if (resume->finished) throw ContractViolation("cannot resume a finished run");
    RestoreParameters(model, resume->last);
    adam.load_state(resume->last);
    result.steps = resume->steps;
    result.epochs = resume->epochs;
    result.best = resume->best;
    result.best_epoch = resume->best_epoch;
    step = resume->last.metadata.at("step");
    first_epoch = resume->last.metadata.at("epochs_done").get<std::size_t>() + 1;
    if (!result.epochs.empty()) best_val = result.epochs[result.best_epoch - 1].val_loss;
  }

  const double dropout = model.config().encoder.dropout;
  const auto snapshot = [&](std::size_t epochs_done) {
    result.finished = step >= total;
    result.last = CaptureCheckpoint(model);
    adam.save_state(result.last);
    result.last.epoch = epochs_done;
    result.last.metadata["step"] = step;
    result.last.metadata["epochs_done"] = epochs_done;
    result.last.metadata["best_epoch"] = result.best_epoch;
    result.last.metadata["finished"] = result.finished;
    json epochs = json::array();
    for (const auto& e : result.epochs) {
      epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
    }
    result.last.metadata["epochs"] = std::move(epochs);
    json steps = json::array();
    for (const auto& s : result.steps) steps.push_back({s.step, s.epoch, s.lr, s.loss});
    result.last.metadata["steps"] = std::move(steps);
  };
  std::size_t epoch = first_epoch;
  for (; epoch <= config.epochs && step < total; ++epoch) {
    const auto order = EpochOrder(train.size(), config.seed, epoch);
    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t b = 0; b < per_epoch && step < total; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(train.size(), lo + config.batch_size);
      const double scale = 1.0 / static_cast<double>(hi - lo);
      model.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = lo; k < hi; ++k) {
        const Sample s = train.get(order[k]);
        TeleViT::Tape tape;
        std::optional<std::mt19937_64> drop_rng;
        if (dropout > 0.0) {
          std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                            static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(k)};
          drop_rng.emplace(seq);
        }
        TeleViT::Output out;
        try {
          out = model.forward(s, &tape, false, drop_rng ? &*drop_rng : nullptr);
        } catch (const NumericFailure& e) {
          throw NumericFailure("training step " + std::to_string(step) + " (epoch " +
                               std::to_string(epoch) + "): " + e.what());
        }
        Tensor3 d_logits;
        const double loss = CrossEntropyLoss(
            out.logits, s.y, config.mask_ocean_in_loss ? &s.land : nullptr, &d_logits, scale);
        if (!std::isfinite(loss)) {
          throw NumericFailure("non-finite training loss at step " + std::to_string(step) +
                               " (epoch " + std::to_string(epoch) + ")");
        }
        batch_loss += loss * scale;
        model.backward(tape, d_logits, true);
      }
      const double lr = LearningRate(step, total, config.lr, config.warmup);
      adam.step(lr);
      result.steps.push_back({step, epoch, lr, batch_loss});
      Emit(log, {{"type", "step"}, {"step", step}, {"epoch", epoch}, {"lr", lr}, {"loss", batch_loss}});
      epoch_loss += batch_loss;
      ++epoch_steps;
      ++step;
    }
    const double val_loss = EvaluateLoss(model, val, config.mask_ocean_in_loss);
    if (!std::isfinite(val_loss)) {
      throw NumericFailure("non-finite validation loss after epoch " + std::to_string(epoch));
    }
    result.epochs.push_back({epoch, epoch_loss / static_cast<double>(epoch_steps), val_loss});
    Emit(log, {{"type", "epoch"},
               {"epoch", epoch},
               {"step", step},
               {"train_loss", result.epochs.back().train_loss},
               {"val_loss", val_loss}});
    if (val_loss < best_val) {
      best_val = val_loss;
      result.best_epoch = epoch;
      result.best = CaptureCheckpoint(model);
      result.best.epoch = epoch;
      result.best.val_loss = val_loss;
    }
    if (on_epoch) {
      snapshot(epoch);
      on_epoch(result);
    }
    if (config.stop_after_epoch > 0 && epoch >= config.stop_after_epoch && step < total) {
      ++epoch;
      break;
    }
  }
  snapshot(epoch - 1);
  return result;
}

}  // namespace televit
