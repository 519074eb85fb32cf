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

#include "televit/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace televit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t Key(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return SplitMix(SplitMix(SplitMix(SplitMix(seed) ^ a) ^ b) ^ c);
}

double Uniform01(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

// Box-Muller on two hashed uniforms.
double HashedNormal(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  const std::uint64_t h = Key(seed, a, b, c);
  const double u1 = Uniform01(h);
  const double u2 = Uniform01(SplitMix(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

struct Mode {
  double kx, ky, phase, amp;
};

struct DriverModel {
  double season_amp;
  double season_phase;
  std::array<Mode, 3> spatial;
  std::array<Mode, 4> anomaly;  // amp scaled per step by a hashed normal
};

struct Generator {
  SyntheticConfig config;
  std::vector<DriverModel> drivers;
  std::vector<double> lat_rad, lon_rad;

  double raw(std::size_t v, std::size_t t, std::size_t i, std::size_t j) const {
    const DriverModel& m = drivers[v];
    const double x = lon_rad[j];
    const double y = lat_rad[i];
    const double week = static_cast<double>(t % kStepsPerYear) / kStepsPerYear;
    // Opposite seasonal phase in the two hemispheres.
    const double hemi = y >= 0.0 ? 0.0 : std::numbers::pi;
    double val = m.season_amp * std::cos(kTwoPi * week - m.season_phase - hemi) *
                 (0.4 + 0.6 * std::cos(y));
    for (const Mode& s : m.spatial) val += s.amp * std::sin(s.kx * x + s.ky * y + s.phase);
    for (std::size_t k = 0; k < m.anomaly.size(); ++k) {
      const Mode& a = m.anomaly[k];
      const double w = HashedNormal(config.seed, 1000 + v, k, t);
      val += w * a.amp * std::sin(a.kx * x + a.ky * y + a.phase);
    }
    val += config.noise *
           HashedNormal(config.seed, 2000 + v, t, static_cast<std::uint64_t>(i) * 1000003ULL + j);
    return val;
  }

  double value(std::size_t v, std::size_t t, std::size_t i, std::size_t j) const {
    const double r = raw(v, t, i, j);
    // Driver 1 is precipitation-like: non-negative and skewed.
    if (v == 1) return 2.0 * std::exp(r);
    return r;
  }

  void fill(std::size_t v, std::size_t t, std::span<float> out) const {
    for (std::size_t i = 0; i < config.n_lat; ++i) {
      for (std::size_t j = 0; j < config.n_lon; ++j) {
        out[i * config.n_lon + j] = static_cast<float>(value(v, t, i, j));
      }
    }
  }
};

std::shared_ptr<const Generator> MakeGenerator(const SyntheticConfig& config) {
  if (config.n_lat == 0 || config.n_lon == 0 || config.years == 0) {
    throw ConfigError("synthetic cube needs non-empty dimensions");
  }
  if (config.n_drivers == 0) throw ConfigError("synthetic cube needs at least one driver");
  if (config.target_rate <= 0.0 || config.target_rate >= 1.0) {
    throw ConfigError("synthetic target_rate must lie in (0, 1)");
  }
  auto gen = std::make_shared<Generator>();
  gen->config = config;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> wave(1, 4);
  for (std::size_t v = 0; v < config.n_drivers; ++v) {
    DriverModel m{};
    m.season_amp = 0.8 + 0.6 * unit(rng);
    m.season_phase = phase(rng);
    for (Mode& s : m.spatial) {
      s = {static_cast<double>(wave(rng)), static_cast<double>(wave(rng)), phase(rng),
           0.3 + 0.4 * unit(rng)};
    }
    for (Mode& a : m.anomaly) {
      a = {static_cast<double>(wave(rng)), static_cast<double>(wave(rng)), phase(rng),
           0.4 + 0.3 * unit(rng)};
    }
    gen->drivers.push_back(m);
  }
  constexpr double kDeg = std::numbers::pi / 180.0;
  for (std::size_t i = 0; i < config.n_lat; ++i) {
    gen->lat_rad.push_back((90.0 - (i + 0.5) * 180.0 / config.n_lat) * kDeg);
  }
  for (std::size_t j = 0; j < config.n_lon; ++j) {
    gen->lon_rad.push_back((-180.0 + (j + 0.5) * 360.0 / config.n_lon) * kDeg);
  }
  return gen;
}

std::vector<std::uint8_t> MakeLand(const SyntheticConfig& config, const Generator& gen) {
  const std::size_t cells = config.n_lat * config.n_lon;
  if (config.all_land) return std::vector<std::uint8_t>(cells, 1);
  std::mt19937_64 rng(config.seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  std::uniform_int_distribution<int> wave(1, 3);
  std::array<Mode, 4> modes{};
  for (Mode& m : modes) {
    m = {static_cast<double>(wave(rng)), static_cast<double>(wave(rng)), phase(rng), 1.0};
  }
  std::vector<double> height(cells);
  for (std::size_t i = 0; i < config.n_lat; ++i) {
    for (std::size_t j = 0; j < config.n_lon; ++j) {
      double h = 0.0;
      for (const Mode& m : modes) {
        h += m.amp * std::sin(m.kx * gen.lon_rad[j] + m.ky * 2.0 * gen.lat_rad[i] + m.phase);
      }
      height[i * config.n_lon + j] = h;
    }
  }
  std::vector<double> sorted = height;
  const double frac = std::clamp(config.land_fraction, 0.0, 1.0);
  const auto k = static_cast<std::size_t>((1.0 - frac) * static_cast<double>(cells - 1));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double cut = sorted[k];
  std::vector<std::uint8_t> land(cells);
  for (std::size_t c = 0; c < cells; ++c) land[c] = height[c] > cut ? 1 : 0;
  if (frac >= 1.0) std::fill(land.begin(), land.end(), 1);
  return land;
}

double CalibrateThreshold(const SyntheticConfig& config, const Generator& gen,
                          const std::vector<std::uint8_t>& land) {
  const std::size_t n_time = config.years * kStepsPerYear;
  // Exact quantile for small cubes, strided subsample otherwise.
  const std::size_t cells = config.n_lat * config.n_lon;
  const std::size_t t_stride = cells * n_time > 4'000'000 ? 7 : 1;
  const std::size_t c_stride = cells > 200'000 ? 13 : 1;
  std::vector<double> values;
  for (std::size_t t = 0; t < n_time; t += t_stride) {
    for (std::size_t c = 0; c < cells; c += c_stride) {
      if (!land[c]) continue;
      values.push_back(gen.value(0, t, c / config.n_lon, c % config.n_lon));
    }
  }
  if (values.empty()) return 0.0;
  const auto k = static_cast<std::size_t>((1.0 - config.target_rate) *
                                          static_cast<double>(values.size() - 1));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

}  // namespace

double SyntheticFireThreshold(const SyntheticConfig& config) {
  const auto gen = MakeGenerator(config);
  return CalibrateThreshold(config, *gen, MakeLand(config, *gen));
}

CubeStore MakeSyntheticCube(const SyntheticConfig& config) {
  const auto gen = MakeGenerator(config);
  const std::size_t n_time = config.years * kStepsPerYear;
  const std::size_t n_lat = config.n_lat;
  const std::size_t n_lon = config.n_lon;
  const std::size_t cells = n_lat * n_lon;
  auto land = MakeLand(config, *gen);
  const double threshold = CalibrateThreshold(config, *gen, land);
  auto land_shared = std::make_shared<const std::vector<std::uint8_t>>(land);

  std::vector<DriverVariable> drivers;
  for (std::size_t v = 0; v < config.n_drivers; ++v) {
    VariableSpec spec{v == 0 ? "fire_driver" : "driver" + std::to_string(v),
                      v == 1 ? Transform::kLog1p : Transform::kIdentity, VariableRole::kDriver};
    std::shared_ptr<const Field> field;
    if (config.materialize) {
      std::vector<float> values(n_time * cells);
      for (std::size_t t = 0; t < n_time; ++t) {
        gen->fill(v, t, std::span<float>(values.data() + t * cells, cells));
      }
      field = std::make_shared<InMemoryField>(n_time, n_lat, n_lon, std::move(values));
    } else {
      field = std::make_shared<ProceduralField>(
          n_time, n_lat, n_lon, [gen, v](std::size_t t, std::span<float> out) {
            gen->fill(v, t, out);
          });
    }
    drivers.push_back({std::move(spec), std::move(field)});
  }

  const auto fire = drivers.front().field;
  const auto burn_plane = [fire, land_shared, threshold](std::size_t t, std::span<float> out) {
    const PlaneView d0 = fire->plane(t);
    for (std::size_t c = 0; c < out.size(); ++c) {
      const double excess = static_cast<double>(d0.values[c]) - threshold;
      out[c] = ((*land_shared)[c] && excess > 0.0) ? static_cast<float>(excess) : 0.0f;
    }
  };
  std::shared_ptr<const Field> burned;
  if (config.materialize) {
    std::vector<float> values(n_time * cells);
    for (std::size_t t = 0; t < n_time; ++t) {
      burn_plane(t, std::span<float>(values.data() + t * cells, cells));
    }
    burned = std::make_shared<InMemoryField>(n_time, n_lat, n_lon, std::move(values));
  } else {
    burned = std::make_shared<ProceduralField>(n_time, n_lat, n_lon, burn_plane);
  }

  std::vector<IndexVariable> indices;
  std::mt19937_64 rng(config.seed ^ 0x1d1ceULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < config.n_indices; ++k) {
    IndexVariable ix;
    ix.spec = {"index" + std::to_string(k), Transform::kIdentity, VariableRole::kIndex};
    ix.values.resize(n_time);
    double x = normal(rng);
    for (std::size_t t = 0; t < n_time; ++t) {
      x = 0.9 * x + std::sqrt(1.0 - 0.81) * normal(rng);
      ix.values[t] = static_cast<float>(x);
    }
    indices.push_back(std::move(ix));
  }

  const std::size_t n_regions = std::clamp<std::size_t>(config.regions, 1, 14);
  std::vector<std::int32_t> regions(cells, 0);
  for (std::size_t i = 0; i < n_lat; ++i) {
    for (std::size_t j = 0; j < n_lon; ++j) {
      if (land[i * n_lon + j]) {
        regions[i * n_lon + j] = static_cast<std::int32_t>(1 + (j * n_regions) / n_lon);
      }
    }
  }

  CubeDescriptor desc{n_time, n_lat, n_lon, config.start_year};
  return CubeStore(desc, std::move(drivers), std::move(indices), std::move(land),
                   std::move(burned), std::move(regions));
}

}  // namespace televit
