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

#ifndef TELEVIT_EVALUATION_HPP_
#define TELEVIT_EVALUATION_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "televit/datacube.hpp"
#include "televit/decoder.hpp"

namespace televit {

struct PRPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;  // one per distinct score, descending threshold
  double auprc = 0.0;
};

// Average precision: sum over descending distinct thresholds of
// precision * delta recall. Equal scores enter together.
PRCurve PrecisionRecallCurve(std::span<const double> scores, std::span<const std::uint8_t> labels);
double Auprc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Burn frequency per (lat, lon, week of year) over a set of years.
class ClimatologyTable {
 public:
  ClimatologyTable() = default;
  ClimatologyTable(std::size_t n_lat, std::size_t n_lon, std::size_t n_years);

  double at(std::size_t i, std::size_t j, std::size_t week) const {
    return freq_[(i * n_lon_ + j) * kStepsPerYear + week];
  }
  double& at(std::size_t i, std::size_t j, std::size_t week) {
    return freq_[(i * n_lon_ + j) * kStepsPerYear + week];
  }
  std::size_t n_lat() const { return n_lat_; }
  std::size_t n_lon() const { return n_lon_; }
  std::size_t n_years() const { return n_years_; }
  const std::vector<double>& values() const { return freq_; }

 private:
  std::size_t n_lat_ = 0, n_lon_ = 0, n_years_ = 0;
  std::vector<double> freq_;
};

ClimatologyTable BuildClimatology(const CubeStore& cube, YearRange train);
// Same, for an explicit list of years in any order.
ClimatologyTable BuildClimatology(const CubeStore& cube, const std::vector<int>& years);

// Whole-grid prediction for time step t; valid cells are land.
PredictionMap PredictClimatology(const ClimatologyTable& table, const CubeStore& cube,
                                 std::size_t t);

// Labels 1..14 in this order; 0 means unlabeled.
const std::vector<std::string>& GfedRegionNames();

struct RegionScore {
  int region = 0;  // 0 for the global row
  std::string name;
  std::optional<double> auprc;  // nullopt when the region has no positives
  std::size_t n_pos = 0;
  std::size_t n_total = 0;
};

struct RegionalReport {
  RegionScore global;
  std::vector<RegionScore> regions;  // one per declared region, label order
};

RegionalReport MakeRegionalReport(std::span<const double> scores,
                                  std::span<const std::uint8_t> labels,
                                  std::span<const std::int32_t> regions,
                                  const std::vector<std::string>& region_names = GfedRegionNames());

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges over [0, 1]
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

// Fixed-bin counts of valid scores over [0, 1]; a score of 1 lands in the last bin.
Histogram ScoreHistogram(const PredictionMap& map, std::size_t bins);
Histogram ScoreHistogram(std::span<const double> scores, std::size_t bins);

}  // namespace televit

#endif  // TELEVIT_EVALUATION_HPP_
