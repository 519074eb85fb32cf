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

// Shared fixtures for the unit tests.

#ifndef TELEVIT_TESTS_HELPERS_HPP_
#define TELEVIT_TESTS_HELPERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "televit/datacube.hpp"
#include "televit/model.hpp"
#include "televit/synthetic.hpp"

namespace televit::testing {

// Removes the directory on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("televit_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// (t, row, col) -> value
using CellFn = std::function<float(std::size_t, std::size_t, std::size_t)>;

struct HandCube {
  std::size_t years = 2;
  std::size_t n_lat = 8;
  std::size_t n_lon = 8;
  int start_year = 2016;
  std::vector<CellFn> drivers;
  std::vector<Transform> transforms;  // defaults to identity
  std::vector<std::function<float(std::size_t)>> indices;
  std::function<bool(std::size_t, std::size_t)> land = [](std::size_t, std::size_t) { return true; };
  CellFn burned = [](std::size_t, std::size_t, std::size_t) { return 0.0f; };
  std::function<std::int32_t(std::size_t, std::size_t)> region = [](std::size_t, std::size_t) {
    return 1;
  };
};

inline std::shared_ptr<const Field> MaterializeField(std::size_t n_time, std::size_t n_lat,
                                                     std::size_t n_lon, const CellFn& fn) {
  std::vector<float> values(n_time * n_lat * n_lon);
  for (std::size_t t = 0; t < n_time; ++t)
    for (std::size_t i = 0; i < n_lat; ++i)
      for (std::size_t j = 0; j < n_lon; ++j) values[(t * n_lat + i) * n_lon + j] = fn(t, i, j);
  return std::make_shared<InMemoryField>(n_time, n_lat, n_lon, std::move(values));
}

inline CubeStore BuildHandCube(const HandCube& h) {
  const std::size_t n_time = h.years * kStepsPerYear;
  std::vector<DriverVariable> drivers;
  for (std::size_t d = 0; d < h.drivers.size(); ++d) {
    DriverVariable v;
    v.spec.name = "driver" + std::to_string(d);
    v.spec.transform = d < h.transforms.size() ? h.transforms[d] : Transform::kIdentity;
    v.field = MaterializeField(n_time, h.n_lat, h.n_lon, h.drivers[d]);
    drivers.push_back(std::move(v));
  }
  std::vector<IndexVariable> indices;
  for (std::size_t k = 0; k < h.indices.size(); ++k) {
    IndexVariable v;
    v.spec.name = "index" + std::to_string(k);
    v.spec.role = VariableRole::kIndex;
    for (std::size_t t = 0; t < n_time; ++t) v.values.push_back(h.indices[k](t));
    indices.push_back(std::move(v));
  }
  std::vector<std::uint8_t> land(h.n_lat * h.n_lon);
  std::vector<std::int32_t> regions(h.n_lat * h.n_lon);
  for (std::size_t i = 0; i < h.n_lat; ++i)
    for (std::size_t j = 0; j < h.n_lon; ++j) {
      land[i * h.n_lon + j] = h.land(i, j) ? 1 : 0;
      regions[i * h.n_lon + j] = h.land(i, j) ? h.region(i, j) : 0;
    }
  CubeDescriptor desc{n_time, h.n_lat, h.n_lon, h.start_year};
  return CubeStore(desc, std::move(drivers), std::move(indices), std::move(land),
                   MaterializeField(n_time, h.n_lat, h.n_lon, h.burned), std::move(regions));
}

// Tiny model over small random inputs.
inline ModelConfig TinyModelConfig(std::size_t dim = 8, std::size_t layers = 2,
                                   std::size_t heads = 2) {
  ModelConfig c;
  c.input.local_channels = 2;
  c.input.local_rows = 4;
  c.input.local_cols = 4;
  c.input.global_channels = 2;
  c.input.global_rows = 4;
  c.input.global_cols = 2;
  c.input.index_channels = 2;
  c.input.index_steps = 2;
  c.tokens.local_patch = 2;   // 4 local tokens
  c.tokens.global_patch = 2;  // 2 global tokens
  c.tokens.indices_patch = 2; // 2 index tokens
  c.tokens.dim = dim;
  c.encoder.layers = layers;
  c.encoder.heads = heads;
  c.encoder.dim = dim;
  c.encoder.mlp_dim = 2 * dim;
  return c;
}

inline Tensor3 RandomTensor(std::size_t c, std::size_t h, std::size_t w, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor3 t(c, h, w);
  for (double& v : t.data) v = n(rng);
  return t;
}

inline Mat RandomMat(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline Sample RandomSample(const InputShape& s, std::mt19937_64& rng, double positive_rate = 0.3) {
  Sample out;
  out.x_local = RandomTensor(s.local_channels, s.local_rows, s.local_cols, rng);
  out.x_global = RandomTensor(s.global_channels, s.global_rows, s.global_cols, rng);
  out.x_indices = RandomMat(s.index_channels, s.index_steps, rng);
  out.y = Tensor3(1, s.local_rows, s.local_cols);
  std::bernoulli_distribution b(positive_rate);
  for (double& v : out.y.data) v = b(rng) ? 1.0 : 0.0;
  out.land.assign(s.local_rows * s.local_cols, 1);
  return out;
}

// Learnable synthetic task: the target is a threshold of driver 0.
struct SyntheticTask {
  std::unique_ptr<CubeStore> cube;
  SampleConfig sample;
  Splits splits;
  NormalizationStats stats;
  std::unique_ptr<SampleExtractor> extractor;

  std::vector<SampleIndex> indices(Split split, std::size_t horizon = 0) const {
    return EnumerateSamples(*cube, splits, split, horizon, sample).samples;
  }
  std::vector<Sample> samples(const std::vector<SampleIndex>& idx) const {
    std::vector<Sample> out;
    for (const auto& i : idx) out.push_back(extractor->extract(i));
    return out;
  }
};

inline SyntheticTask MakeSyntheticTask(std::uint64_t seed, std::size_t n_lat = 32,
                                       std::size_t n_lon = 64) {
  SyntheticConfig sc;
  sc.seed = seed;
  sc.n_lat = n_lat;
  sc.n_lon = n_lon;
  SyntheticTask task;
  task.cube = std::make_unique<CubeStore>(MakeSyntheticCube(sc));
  task.sample.local_patch = 16;
  task.sample.coarsen_factor = 4;
  task.splits = Splits{{2016, 2017}, {2018, 2018}, {2019, 2019}};
  task.stats = ComputeStats(*task.cube, task.splits.train, task.sample);
  task.extractor = std::make_unique<SampleExtractor>(*task.cube, task.stats, task.sample);
  return task;
}

// Small TeleViT over the task inputs: 16 local, 8 global and 30 index tokens.
inline ModelConfig TaskModelConfig(const SyntheticTask& task, std::size_t dim = 64,
                                   std::size_t layers = 2, std::size_t heads = 4) {
  ModelConfig c;
  c.input = InputShapeFor(*task.cube, task.sample);
  c.tokens.local_patch = 4;
  c.tokens.global_patch = 4;
  c.tokens.indices_patch = 1;
  c.tokens.dim = dim;
  c.encoder.layers = layers;
  c.encoder.heads = heads;
  c.encoder.dim = dim;
  c.encoder.mlp_dim = 2 * dim;
  return c;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t probes = 0;
};

// Central differences on randomly drawn scalars of the parameter list,
// compared with the analytic gradients already stored in Param::grad.
// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
// near-zero gradients from turning round-off into large ratios.
inline GradCheckResult GradCheck(const ParamList& params, const std::function<double()>& loss,
                                 std::size_t probes, std::mt19937_64& rng, double h = 1e-5,
                                 double floor = 1e-4) {
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& [name, p] : params) {
    offsets.push_back(total);
    total += static_cast<std::size_t>(p->value.size());
  }
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  GradCheckResult out;
  for (std::size_t k = 0; k < probes; ++k) {
    const std::size_t flat = pick(rng);
    std::size_t which = offsets.size() - 1;
    while (offsets[which] > flat) --which;
    Param& p = *params[which].second;
    double& v = p.value.data()[flat - offsets[which]];
    const double analytic = p.grad.data()[flat - offsets[which]];
    const double saved = v;
    v = saved + h;
    const double up = loss();
    v = saved - h;
    const double down = loss();
    v = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
    ++out.probes;
  }
  return out;
}

}  // namespace televit::testing

#endif  // TELEVIT_TESTS_HELPERS_HPP_
