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

// Checkpoint file layout (little endian):
//   8 bytes   magic "TVCKPT01"
//   8 bytes   header length L
//   L bytes   JSON header: epoch, val_loss, fingerprints, config, metadata and
//             a tensor table {name, rows, cols, offset}
//   payload   float64 tensor data, row-major, at the listed offsets

#ifndef TELEVIT_CHECKPOINT_HPP_
#define TELEVIT_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "televit/datacube.hpp"
#include "televit/model.hpp"

namespace televit {

struct Checkpoint {
  std::vector<std::pair<std::string, Mat>> tensors;
  nlohmann::json config = nlohmann::json::object();    // "model" holds ModelConfig
  nlohmann::json metadata = nlohmann::json::object();  // stats, horizon, optimizer step, ...
  std::size_t epoch = 0;
  double val_loss = 0.0;
  std::string data_fingerprint;
  std::string stats_fingerprint;

  const Mat* find(const std::string& name) const;
};

Checkpoint CaptureCheckpoint(TeleViT& model);
void RestoreParameters(TeleViT& model, const Checkpoint& checkpoint);
TeleViT ModelFromCheckpoint(const Checkpoint& checkpoint);

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

nlohmann::json StatsToJson(const NormalizationStats& stats);
NormalizationStats StatsFromJson(const nlohmann::json& j);

}  // namespace televit

#endif  // TELEVIT_CHECKPOINT_HPP_
