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

#ifndef TELEVIT_SYNTHETIC_HPP_
#define TELEVIT_SYNTHETIC_HPP_

#include <cstdint>

#include "televit/datacube.hpp"

namespace televit {

// Synthetic cube used as the test fixture.
//
// Driver 0 is the "fire driver": burned area is max(0, driver0 - threshold) on
// land, with the threshold set to the (1 - target_rate) quantile of driver0
// over land cells, so the target is a known function of one input. Driver 1
// is non-negative and declared log1p. Remaining drivers are independent
// distractors. Each driver is a seasonal cycle plus a per-step smooth anomaly
// plus white noise, all derived from hashed counters so that any plane can be
// regenerated on its own.
struct SyntheticConfig {
  std::uint64_t seed = 7;
  std::size_t years = 4;
  int start_year = 2016;
  std::size_t n_lat = 80;
  std::size_t n_lon = 160;
  std::size_t n_drivers = 3;
  std::size_t n_indices = 3;
  double land_fraction = 0.6;
  bool all_land = false;
  double target_rate = 0.03;
  double noise = 0.3;
  std::size_t regions = 4;  // land region labels 1..regions (at most 14)
  bool materialize = true;  // false: planes generated on demand
};

CubeStore MakeSyntheticCube(const SyntheticConfig& config);

// Threshold applied to driver 0 by the generator for this config.
double SyntheticFireThreshold(const SyntheticConfig& config);

}  // namespace televit

#endif  // TELEVIT_SYNTHETIC_HPP_
