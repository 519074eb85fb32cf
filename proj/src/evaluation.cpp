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

#include "televit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace televit {

PRCurve PrecisionRecallCurve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ContractViolation("scores and labels differ in length (" + std::to_string(scores.size()) +
                            " vs " + std::to_string(labels.size()) + ")");
  }
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!std::isfinite(scores[k])) throw InputDomainError("non-finite score at position " + std::to_string(k));
    if (labels[k] > 1) throw ContractViolation("labels must be 0 or 1");
    n_pos += labels[k];
  }
  if (n_pos == 0) throw UndefinedMetric("AUPRC is undefined without positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  PRCurve curve;
  std::size_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double thr = scores[order[k]];
    // The whole tie group crosses the threshold at once.
    for (; k < order.size() && scores[order[k]] == thr; ++k) {
      if (labels[order[k]]) ++tp; else ++fp;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    curve.auprc += precision * (recall - prev_recall);
    prev_recall = recall;
    curve.points.push_back({thr, recall, precision});
  }
  return curve;
}

double Auprc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  return PrecisionRecallCurve(scores, labels).auprc;
}

ClimatologyTable::ClimatologyTable(std::size_t n_lat, std::size_t n_lon, std::size_t n_years)
    : n_lat_(n_lat), n_lon_(n_lon), n_years_(n_years),
      freq_(n_lat * n_lon * kStepsPerYear, 0.0) {}

ClimatologyTable BuildClimatology(const CubeStore& cube, YearRange train) {
  if (train.last < train.first) throw ConfigError("empty climatology year range");
  // Clip to the years the cube actually holds.
  const int first = std::max(train.first, cube.start_year());
  const int last = std::min(train.last, cube.start_year() + static_cast<int>(cube.n_years()) - 1);
  std::vector<int> years;
  for (int y = first; y <= last; ++y) years.push_back(y);
  if (years.empty()) {
    throw ConfigError("cube holds none of the climatology years " + std::to_string(train.first) +
                      "-" + std::to_string(train.last));
  }
  return BuildClimatology(cube, years);
}

ClimatologyTable BuildClimatology(const CubeStore& cube, const std::vector<int>& years) {
  const std::set<int> unique(years.begin(), years.end());
  if (unique.empty()) throw ConfigError("climatology needs at least one training year");
  if (unique.size() != years.size()) throw ConfigError("climatology year list has duplicates");
  const std::size_t n_lat = cube.n_lat(), n_lon = cube.n_lon();
  std::vector<std::uint32_t> counts(n_lat * n_lon * kStepsPerYear, 0);
  for (int year : years) {
    if (year < cube.start_year() || year >= cube.start_year() + static_cast<int>(cube.n_years())) {
      throw ConfigError("climatology year " + std::to_string(year) + " is not in the cube");
    }
    const auto [t0, t1] = cube.time_range(year, year);
    for (std::size_t t = t0; t < t1; ++t) {
      const std::size_t w = cube.week_of_year(t);
      const PlaneView plane = cube.burned_area().plane(t);
      for (std::size_t k = 0; k < n_lat * n_lon; ++k) {
        // NaN compares false, so missing burned area counts as unburned.
        if (plane.values[k] > 0.0f) ++counts[k * kStepsPerYear + w];
      }
    }
  }
  ClimatologyTable table(n_lat, n_lon, years.size());
  const double inv = 1.0 / static_cast<double>(years.size());
  for (std::size_t i = 0; i < n_lat; ++i) {
    for (std::size_t j = 0; j < n_lon; ++j) {
      for (std::size_t w = 0; w < kStepsPerYear; ++w) {
        table.at(i, j, w) = counts[(i * n_lon + j) * kStepsPerYear + w] * inv;
      }
    }
  }
  return table;
}

PredictionMap PredictClimatology(const ClimatologyTable& table, const CubeStore& cube,
                                 std::size_t t) {
  if (table.n_lat() != cube.n_lat() || table.n_lon() != cube.n_lon()) {
    throw ContractViolation("climatology table does not match the cube grid");
  }
  if (t >= cube.n_time()) throw InputDomainError("time step " + std::to_string(t) + " outside cube");
  PredictionMap map;
  map.rows = cube.n_lat();
  map.cols = cube.n_lon();
  map.scores.resize(map.rows * map.cols);
  const std::size_t w = cube.week_of_year(t);
  for (std::size_t i = 0; i < map.rows; ++i) {
    for (std::size_t j = 0; j < map.cols; ++j) map.scores[i * map.cols + j] = table.at(i, j, w);
  }
  map.valid = cube.land_mask();
  return map;
}

const std::vector<std::string>& GfedRegionNames() {
  static const std::vector<std::string> names = {"BONA", "TENA", "CEAM", "NHSA", "SHSA",
                                                 "EURO", "MIDE", "NHAF", "SHAF", "BOAS",
                                                 "CEAS", "SEAS", "EQAS", "AUST"};
  return names;
}

namespace {

RegionScore ScoreSubset(int region, std::string name, std::span<const double> scores,
                        std::span<const std::uint8_t> labels) {
  RegionScore r;
  r.region = region;
  r.name = std::move(name);
  r.n_total = scores.size();
  for (auto l : labels) r.n_pos += l;
  if (r.n_pos > 0) r.auprc = Auprc(scores, labels);
  return r;
}

}  // namespace

RegionalReport MakeRegionalReport(std::span<const double> scores,
                                  std::span<const std::uint8_t> labels,
                                  std::span<const std::int32_t> regions,
                                  const std::vector<std::string>& region_names) {
  if (scores.size() != labels.size() || scores.size() != regions.size()) {
    throw ContractViolation("regional report inputs are not aligned");
  }
  const auto n_regions = static_cast<std::int32_t>(region_names.size());
  std::vector<std::vector<double>> s(region_names.size());
  std::vector<std::vector<std::uint8_t>> l(region_names.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const std::int32_t r = regions[k];
    if (r < 0 || r > n_regions) {
      throw ContractViolation("region label " + std::to_string(r) + " outside the declared set");
    }
    if (r == 0) continue;
    s[static_cast<std::size_t>(r - 1)].push_back(scores[k]);
    l[static_cast<std::size_t>(r - 1)].push_back(labels[k]);
  }
  RegionalReport report;
  report.global = ScoreSubset(0, "GLOBAL", scores, labels);
  for (std::size_t r = 0; r < region_names.size(); ++r) {
    report.regions.push_back(ScoreSubset(static_cast<int>(r + 1), region_names[r], s[r], l[r]));
  }
  return report;
}

Histogram ScoreHistogram(std::span<const double> scores, std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ContractViolation("score outside [0, 1]");
    const auto b = std::min(bins - 1, static_cast<std::size_t>(s * static_cast<double>(bins)));
    ++h.counts[b];
    ++h.total;
  }
  return h;
}

Histogram ScoreHistogram(const PredictionMap& map, std::size_t bins) {
  std::vector<double> kept;
  for (std::size_t k = 0; k < map.scores.size(); ++k) {
    if (map.valid.empty() || map.valid[k]) kept.push_back(map.scores[k]);
  }
  return ScoreHistogram(kept, bins);
}

}  // namespace televit
