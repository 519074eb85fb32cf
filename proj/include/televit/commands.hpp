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

// Workflows behind the command-line subcommands. Every command writes under
// RunConfig::output and leaves a manifest.json next to its artifacts.
//
//   <output>/h<h>/{best.ckpt,last.ckpt,train_log.jsonl,manifest.json}
//   <output>/eval/{report.tsv,pr_<model>_h<h>.tsv,hist_<model>_h<h>.tsv,manifest.json}
//   <output>/predict/h<h>_<date>/{scores.npy,valid.npy,manifest.json}
//   <output>/inspect/h<h>_t<t>_r<r>_c<c>/{rollout.npy,...,manifest.json}

#ifndef TELEVIT_COMMANDS_HPP_
#define TELEVIT_COMMANDS_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "televit/config.hpp"

namespace televit {

struct SynthOptions {
  std::optional<std::filesystem::path> out;  // defaults to cube.path, then <output>/cube.zarr
};

struct TrainOptions {
  bool resume = false;
  std::size_t stop_after_epoch = 0;
};

struct EvaluateOptions {
  std::optional<std::filesystem::path> checkpoint_dir;  // defaults to <output>
  bool climatology_only = false;
};

struct PredictOptions {
  std::optional<std::filesystem::path> checkpoint_dir;
  std::optional<std::string> date;
  std::optional<std::size_t> t;
  std::size_t horizon = 0;
  std::optional<double> mask_below;  // also write scores_masked.npy
};

struct InspectOptions {
  std::optional<std::filesystem::path> checkpoint_dir;
  std::vector<SampleSelector> extra_samples;
};

std::filesystem::path CmdSynth(const RunConfig& run, const SynthOptions& options, std::ostream& out);
void CmdTrain(const RunConfig& run, const TrainOptions& options, std::ostream& out);
void CmdEvaluate(const RunConfig& run, const EvaluateOptions& options, std::ostream& out);
void CmdPredict(const RunConfig& run, const PredictOptions& options, std::ostream& out);
void CmdInspect(const RunConfig& run, const InspectOptions& options, std::ostream& out);

// "<date or t>:<row>:<col>", e.g. "2019-07-12:2:3" or "500:0:1".
SampleSelector ParseSelectorString(const std::string& text);
SampleIndex ResolveSelector(const SampleSelector& selector, const CubeStore& cube,
                            std::size_t horizon);

std::string VariantName(bool use_global, bool use_indices);

}  // namespace televit

#endif  // TELEVIT_COMMANDS_HPP_
