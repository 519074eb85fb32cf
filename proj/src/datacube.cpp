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

#include "televit/datacube.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace televit {

namespace {

constexpr double kMinStd = 1e-8;

// Welford accumulator; deterministic for a fixed visiting order.
struct RunningMoments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  double stddev() const { return count > 0.0 ? std::sqrt(m2 / count) : 0.0; }
};

void Finalize(const RunningMoments& m, double& mean, double& sd) {
  mean = m.count > 0.0 ? m.mean : 0.0;
  sd = m.stddev();
  if (!(sd >= kMinStd)) sd = 1.0;
}

double Standardize(double raw, double mean, double sd) {
  if (!std::isfinite(raw)) return 0.0;
  return (raw - mean) / sd;
}

double ApplyTransform(double v, Transform t) {
  return t == Transform::kLog1p ? std::log1p(v) : v;
}

std::vector<double> TransformedPlane(const DriverVariable& var, std::size_t t) {
  const PlaneView view = var.field->plane(t);
  std::vector<double> out(view.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = view.values[i];
    if (var.spec.transform == Transform::kLog1p && std::isfinite(v) && v < 0.0) {
      throw InputDomainError("negative value " + std::to_string(v) + " in log1p variable '" +
                             var.spec.name + "' at time " + std::to_string(t));
    }
    out[i] = ApplyTransform(v, var.spec.transform);
  }
  return out;
}

std::vector<double> CoarseCenters(std::size_t n, double lo, double span_deg, bool descending) {
  std::vector<double> c(n);
  const double step = span_deg / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double off = (static_cast<double>(i) + 0.5) * step;
    c[i] = descending ? lo + span_deg - off : lo + off;
  }
  return c;
}

}  // namespace

Transform ParseTransform(std::string_view name) {
  if (name == "identity" || name.empty()) return Transform::kIdentity;
  if (name == "log1p") return Transform::kLog1p;
  throw ConfigError("unknown transform '" + std::string(name) + "'");
}

std::string_view TransformName(Transform t) {
  return t == Transform::kLog1p ? "log1p" : "identity";
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

InMemoryField::InMemoryField(std::size_t n_time, std::size_t n_lat, std::size_t n_lon,
                             std::vector<float> values)
    : Field(n_time, n_lat, n_lon),
      values_(std::make_shared<const std::vector<float>>(std::move(values))) {
  if (values_->size() != n_time * n_lat * n_lon) {
    throw ContractViolation("InMemoryField: value count does not match (time, lat, lon) shape");
  }
}

PlaneView InMemoryField::plane(std::size_t t) const {
  if (t >= n_time()) throw ContractViolation("plane index out of range");
  return {values_, std::span<const float>(values_->data() + t * plane_size(), plane_size())};
}

CachedField::CachedField(std::size_t n_time, std::size_t n_lat, std::size_t n_lon,
                         std::size_t cache_planes)
    : Field(n_time, n_lat, n_lon), capacity_(std::max<std::size_t>(1, cache_planes)) {}

PlaneView CachedField::plane(std::size_t t) const {
  if (t >= n_time()) throw ContractViolation("plane index out of range");
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(t); it != cache_.end()) {
      return {it->second, std::span<const float>(*it->second)};
    }
  }
  auto values = std::make_shared<std::vector<float>>(plane_size());
  produce_plane(t, *values);
  std::shared_ptr<const std::vector<float>> frozen = std::move(values);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.emplace(t, frozen);
  if (inserted) {
    order_.push_back(t);
    if (order_.size() > capacity_) {
      cache_.erase(order_.front());
      order_.erase(order_.begin());
    }
  }
  return {it->second, std::span<const float>(*it->second)};
}

ProceduralField::ProceduralField(std::size_t n_time, std::size_t n_lat, std::size_t n_lon,
                                 Generator generator, std::size_t cache_planes)
    : CachedField(n_time, n_lat, n_lon, cache_planes), generator_(std::move(generator)) {}

void ProceduralField::produce_plane(std::size_t t, std::span<float> out) const {
  generator_(t, out);
}

// ---------------------------------------------------------------------------
// CubeStore
// ---------------------------------------------------------------------------

CubeStore::CubeStore(CubeDescriptor descriptor, std::vector<DriverVariable> drivers,
                     std::vector<IndexVariable> indices, std::vector<std::uint8_t> land_mask,
                     std::shared_ptr<const Field> burned_area,
                     std::vector<std::int32_t> region_mask)
    : desc_(descriptor),
      drivers_(std::move(drivers)),
      indices_(std::move(indices)),
      land_(std::move(land_mask)),
      burned_(std::move(burned_area)),
      regions_(std::move(region_mask)) {
  if (desc_.n_time == 0 || desc_.n_lat == 0 || desc_.n_lon == 0) {
    throw ConfigError("cube has an empty axis");
  }
  if (desc_.n_time % kStepsPerYear != 0) {
    throw ConfigError("cube time length " + std::to_string(desc_.n_time) +
                      " is not a multiple of " + std::to_string(kStepsPerYear));
  }
  const auto check_field = [&](const Field& f, const std::string& name) {
    if (f.n_time() != desc_.n_time || f.n_lat() != desc_.n_lat || f.n_lon() != desc_.n_lon) {
      throw ConfigError("variable '" + name + "' does not share the cube (time, lat, lon) shape");
    }
  };
  for (const auto& d : drivers_) {
    if (!d.field) throw ConfigError("driver '" + d.spec.name + "' has no data");
    check_field(*d.field, d.spec.name);
  }
  if (!burned_) throw ConfigError("cube has no burned-area variable");
  check_field(*burned_, "burned_area");
  for (const auto& ix : indices_) {
    if (ix.values.size() != desc_.n_time) {
      throw ConfigError("index '" + ix.spec.name + "' does not share the cube time axis");
    }
  }
  const std::size_t cells = desc_.n_lat * desc_.n_lon;
  if (land_.size() != cells) throw ConfigError("land mask shape does not match the grid");
  if (regions_.empty()) regions_.assign(cells, 0);
  if (regions_.size() != cells) throw ConfigError("region mask shape does not match the grid");
}

int CubeStore::year_of(std::size_t t) const {
  return desc_.start_year + static_cast<int>(t / kStepsPerYear);
}

std::pair<std::size_t, std::size_t> CubeStore::time_range(int first_year, int last_year) const {
  const int last_cube_year = desc_.start_year + static_cast<int>(n_years()) - 1;
  const int lo = std::max(first_year, desc_.start_year);
  const int hi = std::min(last_year, last_cube_year);
  if (lo > hi) return {0, 0};
  return {static_cast<std::size_t>(lo - desc_.start_year) * kStepsPerYear,
          static_cast<std::size_t>(hi - desc_.start_year + 1) * kStepsPerYear};
}

double CubeStore::lat_center(std::size_t row) const {
  return 90.0 - (static_cast<double>(row) + 0.5) * 180.0 / static_cast<double>(desc_.n_lat);
}

double CubeStore::lon_center(std::size_t col) const {
  return -180.0 + (static_cast<double>(col) + 0.5) * 360.0 / static_cast<double>(desc_.n_lon);
}

std::vector<double> CubeStore::lat_centers() const {
  return CoarseCenters(desc_.n_lat, -90.0, 180.0, true);
}

std::vector<double> CubeStore::lon_centers() const {
  return CoarseCenters(desc_.n_lon, -180.0, 360.0, false);
}

const DriverVariable& CubeStore::driver(std::string_view name) const {
  for (const auto& d : drivers_) {
    if (d.spec.name == name) return d;
  }
  throw ConfigError("cube has no driver variable '" + std::string(name) + "'");
}

std::string CubeStore::fingerprint() const {
  Fingerprint fp;
  fp.update_values(std::span<const std::size_t>(&desc_.n_time, 1));
  fp.update_values(std::span<const std::size_t>(&desc_.n_lat, 1));
  fp.update_values(std::span<const std::size_t>(&desc_.n_lon, 1));
  fp.update_values(std::span<const int>(&desc_.start_year, 1));
  for (const auto& d : drivers_) fp.update(d.spec.name);
  for (const auto& ix : indices_) {
    fp.update(ix.spec.name);
    fp.update_values(std::span<const float>(ix.values));
  }
  fp.update_values(std::span<const std::uint8_t>(land_));
  return fp.hex();
}

// ---------------------------------------------------------------------------
// Elementwise helpers
// ---------------------------------------------------------------------------

std::vector<double> TransformValues(std::span<const double> values, const VariableSpec& spec) {
  std::vector<double> out(values.begin(), values.end());
  if (spec.transform == Transform::kIdentity) return out;
  for (double& v : out) {
    if (std::isfinite(v) && v < 0.0) {
      throw InputDomainError("log1p applied to negative value " + std::to_string(v) +
                             " of variable '" + spec.name + "'");
    }
    v = std::log1p(v);
  }
  return out;
}

void TransformInPlace(std::span<float> values, const VariableSpec& spec) {
  if (spec.transform == Transform::kIdentity) return;
  for (float& v : values) {
    if (std::isfinite(v) && v < 0.0f) {
      throw InputDomainError("log1p applied to negative value of variable '" + spec.name + "'");
    }
    v = std::log1p(v);
  }
}

std::vector<double> CoarsenGlobal(std::span<const double> field, std::size_t n_lat,
                                  std::size_t n_lon, std::size_t factor) {
  if (factor == 0 || n_lat % factor != 0 || n_lon % factor != 0) {
    throw ConfigError("grid " + std::to_string(n_lat) + "x" + std::to_string(n_lon) +
                      " is not divisible by coarsening factor " + std::to_string(factor));
  }
  if (field.size() != n_lat * n_lon) throw ContractViolation("field size mismatch in coarsen");
  const std::size_t out_lat = n_lat / factor;
  const std::size_t out_lon = n_lon / factor;
  std::vector<double> out(out_lat * out_lon);
  for (std::size_t bi = 0; bi < out_lat; ++bi) {
    for (std::size_t bj = 0; bj < out_lon; ++bj) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = bi * factor; i < (bi + 1) * factor; ++i) {
        for (std::size_t j = bj * factor; j < (bj + 1) * factor; ++j) {
          const double v = field[i * n_lon + j];
          if (std::isfinite(v)) {
            sum += v;
            ++n;
          }
        }
      }
      out[bi * out_lon + bj] = n > 0 ? sum / static_cast<double>(n)
                                     : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

Tensor3 PositionalFields(std::span<const double> lat_deg, std::span<const double> lon_deg) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  Tensor3 out(kPositionalChannels, lat_deg.size(), lon_deg.size());
  for (std::size_t i = 0; i < lat_deg.size(); ++i) {
    const double la = lat_deg[i] * kDeg;
    for (std::size_t j = 0; j < lon_deg.size(); ++j) {
      const double lo = lon_deg[j] * kDeg;
      out(0, i, j) = std::cos(lo);
      out(1, i, j) = std::sin(lo);
      out(2, i, j) = std::cos(la);
      out(3, i, j) = std::sin(la);
    }
  }
  return out;
}

std::size_t ChannelCount(const CubeStore& cube, const SampleConfig& config) {
  return cube.drivers().size() + (config.use_positional ? kPositionalChannels : 0);
}

std::size_t PatchRows(const CubeStore& cube, const SampleConfig& config) {
  if (config.local_patch == 0 || cube.n_lat() % config.local_patch != 0) {
    throw ConfigError("grid latitude count " + std::to_string(cube.n_lat()) +
                      " is not divisible by local patch " + std::to_string(config.local_patch));
  }
  return cube.n_lat() / config.local_patch;
}

std::size_t PatchCols(const CubeStore& cube, const SampleConfig& config) {
  if (config.local_patch == 0 || cube.n_lon() % config.local_patch != 0) {
    throw ConfigError("grid longitude count " + std::to_string(cube.n_lon()) +
                      " is not divisible by local patch " + std::to_string(config.local_patch));
  }
  return cube.n_lon() / config.local_patch;
}

std::vector<std::uint8_t> CoarseLandMask(const CubeStore& cube, std::size_t factor) {
  if (factor == 0 || cube.n_lat() % factor != 0 || cube.n_lon() % factor != 0) {
    throw ConfigError("grid is not divisible by coarsening factor " + std::to_string(factor));
  }
  const std::size_t out_lat = cube.n_lat() / factor;
  const std::size_t out_lon = cube.n_lon() / factor;
  std::vector<std::uint8_t> out(out_lat * out_lon, 0);
  for (std::size_t i = 0; i < cube.n_lat(); ++i) {
    for (std::size_t j = 0; j < cube.n_lon(); ++j) {
      if (cube.is_land(i, j)) out[(i / factor) * out_lon + j / factor] = 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Enumeration and statistics
// ---------------------------------------------------------------------------

namespace {

bool PatchHasLand(const CubeStore& cube, std::size_t pr, std::size_t pc, std::size_t size) {
  for (std::size_t i = pr * size; i < (pr + 1) * size; ++i) {
    for (std::size_t j = pc * size; j < (pc + 1) * size; ++j) {
      if (cube.is_land(i, j)) return true;
    }
  }
  return false;
}

std::optional<std::string> AvailabilityReason(const CubeStore& cube, const SampleConfig& config,
                                              const SampleIndex& idx) {
  if (idx.t >= cube.n_time()) return "input time beyond the cube time axis";
  if (idx.t + idx.horizon >= cube.n_time()) {
    return "target time t+h=" + std::to_string(idx.t + idx.horizon) +
           " beyond the cube time axis";
  }
  const std::size_t lookback = config.index_stride * config.index_steps;
  if (!cube.indices().empty() && idx.t < lookback) {
    return "index window needs " + std::to_string(lookback) +
           " steps before t=" + std::to_string(idx.t);
  }
  return std::nullopt;
}

}  // namespace

Enumeration EnumerateSamples(const CubeStore& cube, const Splits& splits, Split split,
                             std::size_t horizon, const SampleConfig& config) {
  const YearRange years = split == Split::kTrain ? splits.train
                          : split == Split::kVal ? splits.val
                                                 : splits.test;
  const std::size_t rows = PatchRows(cube, config);
  const std::size_t cols = PatchCols(cube, config);
  std::vector<std::uint8_t> has_land(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      has_land[r * cols + c] = PatchHasLand(cube, r, c, config.local_patch) ? 1 : 0;
    }
  }
  Enumeration out;
  const auto [t0, t1] = cube.time_range(years.first, years.last);
  for (std::size_t t = t0; t < t1; ++t) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (!has_land[r * cols + c]) continue;
        SampleIndex idx{t, r, c, horizon};
        if (auto reason = AvailabilityReason(cube, config, idx)) {
          out.skipped.push_back({idx, *reason});
        } else {
          out.samples.push_back(idx);
        }
      }
    }
  }
  return out;
}

NormalizationStats NormalizationStats::Identity(std::size_t local_channels,
                                                std::size_t global_channels,
                                                std::size_t index_channels) {
  NormalizationStats s;
  s.local_mean.assign(local_channels, 0.0);
  s.local_std.assign(local_channels, 1.0);
  s.global_mean.assign(global_channels, 0.0);
  s.global_std.assign(global_channels, 1.0);
  s.index_mean.assign(index_channels, 0.0);
  s.index_std.assign(index_channels, 1.0);
  return s;
}

std::string NormalizationStats::fingerprint() const {
  Fingerprint fp;
  for (const auto* v : {&local_mean, &local_std, &global_mean, &global_std, &index_mean,
                        &index_std}) {
    fp.update_values(std::span<const double>(*v));
  }
  return fp.hex();
}

NormalizationStats ComputeStats(const CubeStore& cube, YearRange train,
                                const SampleConfig& config) {
  const auto [t0, t1] = cube.time_range(train.first, train.last);
  if (t0 >= t1) {
    throw ConfigError("training range " + std::to_string(train.first) + "-" +
                      std::to_string(train.last) + " selects no time steps of the cube");
  }
  const std::size_t n_drivers = cube.drivers().size();
  const std::size_t channels = ChannelCount(cube, config);
  const std::size_t factor = config.coarsen_factor;
  const std::size_t cells = cube.n_lat() * cube.n_lon();
  const auto coarse_land = CoarseLandMask(cube, factor);
  const std::size_t n_lat_c = cube.n_lat() / factor;
  const std::size_t n_lon_c = cube.n_lon() / factor;

  std::vector<RunningMoments> local(channels), global(channels);
  for (std::size_t v = 0; v < n_drivers; ++v) {
    const auto& var = cube.drivers()[v];
    for (std::size_t t = t0; t < t1; ++t) {
      const auto plane = TransformedPlane(var, t);
      for (std::size_t k = 0; k < cells; ++k) {
        if (cube.land_mask()[k] && std::isfinite(plane[k])) local[v].add(plane[k]);
      }
      const auto coarse = CoarsenGlobal(plane, cube.n_lat(), cube.n_lon(), factor);
      for (std::size_t k = 0; k < coarse.size(); ++k) {
        if (coarse_land[k] && std::isfinite(coarse[k])) global[v].add(coarse[k]);
      }
    }
  }
  if (config.use_positional) {
    // Time-invariant, so one pass over the land cells gives the same moments
    // as repeating it for every training step.
    const auto fine = PositionalFields(cube.lat_centers(), cube.lon_centers());
    const auto lat_c = CoarseCenters(n_lat_c, -90.0, 180.0, true);
    const auto lon_c = CoarseCenters(n_lon_c, -180.0, 360.0, false);
    const auto coarse = PositionalFields(lat_c, lon_c);
    for (std::size_t p = 0; p < kPositionalChannels; ++p) {
      for (std::size_t k = 0; k < cells; ++k) {
        if (cube.land_mask()[k]) local[n_drivers + p].add(fine.channel(p)[k]);
      }
      for (std::size_t k = 0; k < coarse_land.size(); ++k) {
        if (coarse_land[k]) global[n_drivers + p].add(coarse.channel(p)[k]);
      }
    }
  }

  NormalizationStats stats;
  stats.local_mean.resize(channels);
  stats.local_std.resize(channels);
  stats.global_mean.resize(channels);
  stats.global_std.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    Finalize(local[c], stats.local_mean[c], stats.local_std[c]);
    Finalize(global[c], stats.global_mean[c], stats.global_std[c]);
  }
  const std::size_t n_idx = cube.indices().size();
  stats.index_mean.resize(n_idx);
  stats.index_std.resize(n_idx);
  for (std::size_t c = 0; c < n_idx; ++c) {
    const auto& ix = cube.indices()[c];
    RunningMoments m;
    for (std::size_t t = t0; t < t1; ++t) {
      const double v = ApplyTransform(ix.values[t], ix.spec.transform);
      if (std::isfinite(v)) m.add(v);
    }
    Finalize(m, stats.index_mean[c], stats.index_std[c]);
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

SampleExtractor::SampleExtractor(const CubeStore& cube, NormalizationStats stats,
                                 SampleConfig config, std::size_t global_cache_steps)
    : cube_(&cube),
      stats_(std::move(stats)),
      config_(config),
      cache_capacity_(std::max<std::size_t>(1, global_cache_steps)) {
  const std::size_t channels = ChannelCount(cube, config_);
  if (stats_.local_mean.size() != channels || stats_.global_mean.size() != channels ||
      stats_.index_mean.size() != cube.indices().size()) {
    throw ConfigError("normalization statistics do not match the cube channel layout");
  }
  PatchRows(cube, config_);
  PatchCols(cube, config_);
  const std::size_t factor = config_.coarsen_factor;
  if (factor == 0 || cube.n_lat() % factor != 0 || cube.n_lon() % factor != 0) {
    throw ConfigError("grid is not divisible by coarsening factor " + std::to_string(factor));
  }
  if (config_.use_positional) {
    local_positional_ = PositionalFields(cube.lat_centers(), cube.lon_centers());
    global_positional_ =
        PositionalFields(CoarseCenters(cube.n_lat() / factor, -90.0, 180.0, true),
                         CoarseCenters(cube.n_lon() / factor, -180.0, 360.0, false));
  }
}

std::optional<std::string> SampleExtractor::unavailable_reason(const SampleIndex& idx) const {
  const std::size_t rows = cube_->n_lat() / config_.local_patch;
  const std::size_t cols = cube_->n_lon() / config_.local_patch;
  if (idx.patch_row >= rows || idx.patch_col >= cols) return "patch outside the patch grid";
  return AvailabilityReason(*cube_, config_, idx);
}

std::shared_ptr<const Tensor3> SampleExtractor::global_at(std::size_t t) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = global_cache_.find(t); it != global_cache_.end()) return it->second;
  }
  const CubeStore& cube = *cube_;
  const std::size_t factor = config_.coarsen_factor;
  const std::size_t n_lat_c = cube.n_lat() / factor;
  const std::size_t n_lon_c = cube.n_lon() / factor;
  const std::size_t n_drivers = cube.drivers().size();
  const std::size_t channels = ChannelCount(cube, config_);
  auto out = std::make_shared<Tensor3>(channels, n_lon_c, n_lat_c);
  for (std::size_t v = 0; v < n_drivers; ++v) {
    const auto plane = TransformedPlane(cube.drivers()[v], t);
    const auto coarse = CoarsenGlobal(plane, cube.n_lat(), cube.n_lon(), factor);
    for (std::size_t i = 0; i < n_lat_c; ++i) {
      for (std::size_t j = 0; j < n_lon_c; ++j) {
        (*out)(v, j, i) =
            Standardize(coarse[i * n_lon_c + j], stats_.global_mean[v], stats_.global_std[v]);
      }
    }
  }
  if (config_.use_positional) {
    for (std::size_t p = 0; p < kPositionalChannels; ++p) {
      const std::size_t c = n_drivers + p;
      for (std::size_t i = 0; i < n_lat_c; ++i) {
        for (std::size_t j = 0; j < n_lon_c; ++j) {
          (*out)(c, j, i) =
              Standardize(global_positional_(p, i, j), stats_.global_mean[c], stats_.global_std[c]);
        }
      }
    }
  }
  std::shared_ptr<const Tensor3> frozen = std::move(out);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = global_cache_.emplace(t, frozen);
  if (inserted) {
    global_order_.push_back(t);
    if (global_order_.size() > cache_capacity_) {
      global_cache_.erase(global_order_.front());
      global_order_.erase(global_order_.begin());
    }
  }
  return it->second;
}

Sample SampleExtractor::extract(const SampleIndex& idx) const {
  if (auto reason = unavailable_reason(idx)) {
    throw SampleUnavailable("sample (t=" + std::to_string(idx.t) + ", patch=" +
                            std::to_string(idx.patch_row) + "," + std::to_string(idx.patch_col) +
                            ", h=" + std::to_string(idx.horizon) + ") skipped: " + *reason);
  }
  const CubeStore& cube = *cube_;
  const std::size_t size = config_.local_patch;
  const std::size_t row0 = idx.patch_row * size;
  const std::size_t col0 = idx.patch_col * size;
  const std::size_t n_lon = cube.n_lon();
  const std::size_t n_drivers = cube.drivers().size();
  const std::size_t channels = ChannelCount(cube, config_);

  Sample s;
  s.index = idx;
  s.land.resize(size * size);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      s.land[i * size + j] = cube.is_land(row0 + i, col0 + j) ? 1 : 0;
    }
  }

  s.x_local = Tensor3(channels, size, size);
  for (std::size_t v = 0; v < n_drivers; ++v) {
    const auto& var = cube.drivers()[v];
    const PlaneView view = var.field->plane(idx.t);
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = 0; j < size; ++j) {
        if (config_.fill_ocean && !s.land[i * size + j]) continue;
        const double raw = view.values[(row0 + i) * n_lon + col0 + j];
        if (var.spec.transform == Transform::kLog1p && std::isfinite(raw) && raw < 0.0) {
          throw InputDomainError("negative value in log1p variable '" + var.spec.name + "'");
        }
        s.x_local(v, i, j) = Standardize(ApplyTransform(raw, var.spec.transform),
                                         stats_.local_mean[v], stats_.local_std[v]);
      }
    }
  }
  if (config_.use_positional) {
    for (std::size_t p = 0; p < kPositionalChannels; ++p) {
      const std::size_t c = n_drivers + p;
      for (std::size_t i = 0; i < size; ++i) {
        for (std::size_t j = 0; j < size; ++j) {
          s.x_local(c, i, j) = Standardize(local_positional_(p, row0 + i, col0 + j),
                                           stats_.local_mean[c], stats_.local_std[c]);
        }
      }
    }
  }

  s.x_global = *global_at(idx.t);

  const std::size_t n_idx = cube.indices().size();
  const std::size_t steps = config_.index_steps;
  s.x_indices = Mat::Zero(static_cast<Eigen::Index>(n_idx), static_cast<Eigen::Index>(steps));
  for (std::size_t c = 0; c < n_idx; ++c) {
    const auto& ix = cube.indices()[c];
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t t = idx.t - config_.index_stride * (steps - k);
      s.x_indices(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) =
          Standardize(ApplyTransform(ix.values[t], ix.spec.transform), stats_.index_mean[c],
                      stats_.index_std[c]);
    }
  }

  s.y = Tensor3(1, size, size);
  const PlaneView target = cube.burned_area().plane(idx.t + idx.horizon);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const float v = target.values[(row0 + i) * n_lon + col0 + j];
      s.y(0, i, j) = (std::isfinite(v) && v > 0.0f) ? 1.0 : 0.0;
    }
  }
  return s;
}

Sample ExtractSample(const CubeStore& cube, const NormalizationStats& stats,
                     const SampleConfig& config, const SampleIndex& idx) {
  return SampleExtractor(cube, stats, config, 1).extract(idx);
}

}  // namespace televit
