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

// Spatiotemporal datacube model. Gridded fields (the burned-area target among
// them) live on a regular lat/lon grid at 8-day steps, next to index series
// and static masks. Sample extraction turns a (time, patch, horizon) triple
// into the model inputs.

#ifndef TELEVIT_DATACUBE_HPP_
#define TELEVIT_DATACUBE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "televit/common.hpp"

namespace televit {

inline constexpr std::size_t kStepsPerYear = 46;
inline constexpr std::size_t kPositionalChannels = 4;

enum class Transform { kIdentity, kLog1p };
enum class VariableRole { kDriver, kIndex, kPositional, kTarget };

struct VariableSpec {
  std::string name;
  Transform transform = Transform::kIdentity;
  VariableRole role = VariableRole::kDriver;
};

Transform ParseTransform(std::string_view name);
std::string_view TransformName(Transform t);

// ---------------------------------------------------------------------------
// Field storage. A field is a (time, lat, lon) float array read one time
// plane at a time; implementations may hold it in memory, generate it, or
// page it in from disk.
// ---------------------------------------------------------------------------

struct PlaneView {
  std::shared_ptr<const void> owner;
  std::span<const float> values;
};

class Field {
 public:
  Field(std::size_t n_time, std::size_t n_lat, std::size_t n_lon)
      : n_time_(n_time), n_lat_(n_lat), n_lon_(n_lon) {}
  virtual ~Field() = default;

  std::size_t n_time() const { return n_time_; }
  std::size_t n_lat() const { return n_lat_; }
  std::size_t n_lon() const { return n_lon_; }
  std::size_t plane_size() const { return n_lat_ * n_lon_; }

  // Thread-safe.
  virtual PlaneView plane(std::size_t t) const = 0;

 private:
  std::size_t n_time_, n_lat_, n_lon_;
};

class InMemoryField final : public Field {
 public:
  InMemoryField(std::size_t n_time, std::size_t n_lat, std::size_t n_lon,
                std::vector<float> values);
  PlaneView plane(std::size_t t) const override;

 private:
  std::shared_ptr<const std::vector<float>> values_;
};

// Base for fields whose planes are produced on demand and kept in a bounded
// cache.
class CachedField : public Field {
 public:
  CachedField(std::size_t n_time, std::size_t n_lat, std::size_t n_lon,
              std::size_t cache_planes);
  PlaneView plane(std::size_t t) const override;

 protected:
  virtual void produce_plane(std::size_t t, std::span<float> out) const = 0;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const std::vector<float>>> cache_;
  mutable std::vector<std::size_t> order_;
};

class ProceduralField final : public CachedField {
 public:
  using Generator = std::function<void(std::size_t t, std::span<float> out)>;
  ProceduralField(std::size_t n_time, std::size_t n_lat, std::size_t n_lon,
                  Generator generator, std::size_t cache_planes = 64);

 protected:
  void produce_plane(std::size_t t, std::span<float> out) const override;

 private:
  Generator generator_;
};

// ---------------------------------------------------------------------------
// CubeStore
// ---------------------------------------------------------------------------

struct DriverVariable {
  VariableSpec spec;
  std::shared_ptr<const Field> field;
};

struct IndexVariable {
  VariableSpec spec;
  std::vector<float> values;  // one per time step
};

struct CubeDescriptor {
  std::size_t n_time = 0;
  std::size_t n_lat = 0;
  std::size_t n_lon = 0;
  int start_year = 2001;
};

class CubeStore {
 public:
  CubeStore(CubeDescriptor descriptor, std::vector<DriverVariable> drivers,
            std::vector<IndexVariable> indices, std::vector<std::uint8_t> land_mask,
            std::shared_ptr<const Field> burned_area, std::vector<std::int32_t> region_mask);

  std::size_t n_time() const { return desc_.n_time; }
  std::size_t n_lat() const { return desc_.n_lat; }
  std::size_t n_lon() const { return desc_.n_lon; }
  int start_year() const { return desc_.start_year; }
  std::size_t n_years() const { return desc_.n_time / kStepsPerYear; }
  const CubeDescriptor& descriptor() const { return desc_; }

  int year_of(std::size_t t) const;
  std::size_t week_of_year(std::size_t t) const { return t % kStepsPerYear; }
  // Half-open [first, last) time-step range covering the calendar years.
  std::pair<std::size_t, std::size_t> time_range(int first_year, int last_year) const;

  // Cell-centre coordinates in degrees; row 0 is the northernmost row.
  double lat_center(std::size_t row) const;
  double lon_center(std::size_t col) const;
  std::vector<double> lat_centers() const;
  std::vector<double> lon_centers() const;

  const std::vector<DriverVariable>& drivers() const { return drivers_; }
  const std::vector<IndexVariable>& indices() const { return indices_; }
  const DriverVariable& driver(std::string_view name) const;
  const std::vector<std::uint8_t>& land_mask() const { return land_; }
  const std::vector<std::int32_t>& region_mask() const { return regions_; }
  const Field& burned_area() const { return *burned_; }

  bool is_land(std::size_t row, std::size_t col) const { return land_[row * desc_.n_lon + col] != 0; }

  std::string fingerprint() const;

 private:
  CubeDescriptor desc_;
  std::vector<DriverVariable> drivers_;
  std::vector<IndexVariable> indices_;
  std::vector<std::uint8_t> land_;
  std::shared_ptr<const Field> burned_;
  std::vector<std::int32_t> regions_;
};

// ---------------------------------------------------------------------------
// Samples
// ---------------------------------------------------------------------------

struct SampleConfig {
  std::size_t local_patch = 80;   // cells per side of a local window
  std::size_t coarsen_factor = 4; // per axis, local grid -> global grid
  std::size_t index_steps = 10;   // T
  std::size_t index_stride = 4;   // 8-day steps between index samples
  bool use_positional = true;
  bool fill_ocean = true;         // ocean driver cells -> 0 after standardization
  double land_threshold = 0.5;    // used by loaders for fractional land masks
};

struct SampleIndex {
  std::size_t t = 0;
  std::size_t patch_row = 0;
  std::size_t patch_col = 0;
  std::size_t horizon = 0;

  friend bool operator==(const SampleIndex&, const SampleIndex&) = default;
};

struct Sample {
  Tensor3 x_local;   // C_l x H_l x W_l (lat, lon)
  Tensor3 x_global;  // C_g x n_lon_coarse x n_lat_coarse
  Mat x_indices;     // C_i x T, oldest sample first
  Tensor3 y;         // 1 x H_l x W_l, binary
  std::vector<std::uint8_t> land;  // H_l x W_l
  SampleIndex index;
};

struct NormalizationStats {
  std::vector<double> local_mean, local_std;
  std::vector<double> global_mean, global_std;
  std::vector<double> index_mean, index_std;

  // mean 0 / std 1 everywhere; extraction then returns raw (transformed) values.
  static NormalizationStats Identity(std::size_t local_channels, std::size_t global_channels,
                                     std::size_t index_channels);
  std::string fingerprint() const;
};

struct YearRange {
  int first = 0;
  int last = 0;  // inclusive
};

struct Splits {
  YearRange train{2003, 2017};
  YearRange val{2018, 2018};
  YearRange test{2019, 2019};
};

enum class Split { kTrain, kVal, kTest };
std::string_view SplitName(Split split);

struct SkippedSample {
  SampleIndex index;
  std::string reason;
};

struct Enumeration {
  std::vector<SampleIndex> samples;
  std::vector<SkippedSample> skipped;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::vector<double> TransformValues(std::span<const double> values, const VariableSpec& spec);
void TransformInPlace(std::span<float> values, const VariableSpec& spec);

// Block mean over factor x factor blocks ignoring non-finite cells; a block with
// no finite cell yields NaN.
std::vector<double> CoarsenGlobal(std::span<const double> field, std::size_t n_lat,
                                  std::size_t n_lon, std::size_t factor);

// Channels [cos lon, sin lon, cos lat, sin lat] over the lat x lon grid.
Tensor3 PositionalFields(std::span<const double> lat_deg, std::span<const double> lon_deg);

std::size_t ChannelCount(const CubeStore& cube, const SampleConfig& config);

std::size_t PatchRows(const CubeStore& cube, const SampleConfig& config);
std::size_t PatchCols(const CubeStore& cube, const SampleConfig& config);

// Land mask coarsened with "any land" semantics (lat x lon coarse).
std::vector<std::uint8_t> CoarseLandMask(const CubeStore& cube, std::size_t factor);

Enumeration EnumerateSamples(const CubeStore& cube, const Splits& splits, Split split,
                             std::size_t horizon, const SampleConfig& config);

NormalizationStats ComputeStats(const CubeStore& cube, YearRange train,
                                const SampleConfig& config);

// Extracts samples; caches per-time-step global tensors. Thread-safe.
class SampleExtractor {
 public:
  SampleExtractor(const CubeStore& cube, NormalizationStats stats, SampleConfig config,
                  std::size_t global_cache_steps = 32);

  Sample extract(const SampleIndex& idx) const;
  // Reason the sample cannot be built, or nullopt when it can.
  std::optional<std::string> unavailable_reason(const SampleIndex& idx) const;

  const CubeStore& cube() const { return *cube_; }
  const NormalizationStats& stats() const { return stats_; }
  const SampleConfig& config() const { return config_; }

 private:
  std::shared_ptr<const Tensor3> global_at(std::size_t t) const;

  const CubeStore* cube_;
  NormalizationStats stats_;
  SampleConfig config_;
  Tensor3 local_positional_;   // full-resolution, unstandardized
  Tensor3 global_positional_;  // coarse, unstandardized, lat x lon
  std::size_t cache_capacity_;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, std::shared_ptr<const Tensor3>> global_cache_;
  mutable std::vector<std::size_t> global_order_;
};

Sample ExtractSample(const CubeStore& cube, const NormalizationStats& stats,
                     const SampleConfig& config, const SampleIndex& idx);

}  // namespace televit

#endif  // TELEVIT_DATACUBE_HPP_
