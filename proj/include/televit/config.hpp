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

// Declarative run configuration. A run file is merged over the defaults from
// DefaultConfigJson(); any key absent from the defaults is rejected with its
// dotted path, as is a value of the wrong JSON type.

#ifndef TELEVIT_CONFIG_HPP_
#define TELEVIT_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "televit/datacube.hpp"
#include "televit/encoder.hpp"
#include "televit/inspection.hpp"
#include "televit/model.hpp"
#include "televit/synthetic.hpp"
#include "televit/tokenizer.hpp"
#include "televit/training.hpp"
#include "televit/zarr.hpp"

namespace televit {

// Picks one sample: either a date (YYYY-MM-DD, mapped to its 8-day step) or a
// raw time step, plus a patch position.
struct SampleSelector {
  std::optional<std::string> date;
  std::optional<std::size_t> t;
  std::size_t patch_row = 0;
  std::size_t patch_col = 0;
};

struct RunConfig {
  std::filesystem::path cube_path;
  CubeSchema schema;
  Splits splits;
  std::vector<std::size_t> horizons;
  SampleConfig sample;
  std::size_t max_train_samples = 0;  // 0 keeps every sample
  std::size_t max_val_samples = 0;
  std::size_t max_test_samples = 0;

  TokenizationSpec tokens;
  EncoderConfig encoder;
  bool use_global = true;
  bool use_indices = true;
  bool shared_decoder = true;
  TrainConfig train;

  std::size_t histogram_bins = 20;

  std::size_t ig_steps = 128;
  AggregationMode aggregation = AggregationMode::kAbsolute;
  bool raw_last_layer = false;
  std::vector<SampleSelector> inspect_samples;

  SyntheticConfig synth;
  std::string synth_compressor = "zlib";

  std::filesystem::path output;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;

  nlohmann::json resolved;  // merged JSON, recorded in manifests
};

nlohmann::json DefaultConfigJson();

// Recursively overlays `user` on `defaults`. Arrays replace wholesale.
nlohmann::json MergeConfig(const nlohmann::json& defaults, const nlohmann::json& user,
                           const std::string& path = "");

// Applies "dotted.key=value"; value is parsed as JSON when possible, otherwise
// taken as a string.
void ApplyOverride(nlohmann::json& config, const std::string& assignment);

RunConfig ParseRunConfig(const nlohmann::json& user);
RunConfig LoadRunConfig(const std::optional<std::filesystem::path>& file,
                        const std::vector<std::string>& overrides);

ModelConfig MakeModelConfig(const RunConfig& run, const CubeStore& cube);
// Deterministic per-horizon seed derived from the root seed.
std::uint64_t HorizonSeed(std::uint64_t root, std::size_t horizon);

// Maps YYYY-MM-DD to the cube time step holding that date.
std::size_t DateToStep(const std::string& date, int start_year, std::size_t n_time);
std::string StepToDate(std::size_t t, int start_year);

}  // namespace televit

#endif  // TELEVIT_CONFIG_HPP_
