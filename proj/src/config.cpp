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

#include "televit/config.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace televit {

using nlohmann::json;

json DefaultConfigJson() {
  return json::parse(R"({
    "cube": {
      "path": "",
      "drivers": [],
      "indices": [],
      "land_mask": "land_mask",
      "burned_area": "burned_area",
      "region_mask": "region_mask",
      "start_year": 0,
      "land_threshold": 0.5,
      "cache_planes": 64
    },
    "splits": {"train": [2003, 2017], "val": [2018, 2018], "test": [2019, 2019]},
    "horizons": [0, 1, 2, 4, 8, 16],
    "sample": {
      "local_patch": 80,
      "coarsen_factor": 4,
      "index_steps": 10,
      "index_stride": 4,
      "use_positional": true,
      "fill_ocean": true,
      "max_train_samples": 0,
      "max_val_samples": 0,
      "max_test_samples": 0
    },
    "tokens": {"local_patch": 16, "global_patch": 30, "indices_patch": 1, "dim": 768},
    "encoder": {"layers": 8, "heads": 8, "mlp_dim": 1536, "dropout": 0.0},
    "model": {"use_global": true, "use_indices": true, "shared_decoder": true},
    "train": {
      "epochs": 30,
      "lr": 1e-4,
      "warmup": 0.05,
      "batch_size": 16,
      "max_steps": 0,
      "mask_ocean_in_loss": false
    },
    "evaluate": {"histogram_bins": 20},
    "inspect": {"ig_steps": 128, "aggregation": "abs", "raw_last_layer": false, "samples": []},
    "synth": {
      "seed": 7,
      "years": 4,
      "start_year": 2016,
      "n_lat": 80,
      "n_lon": 160,
      "n_drivers": 3,
      "n_indices": 3,
      "land_fraction": 0.6,
      "all_land": false,
      "target_rate": 0.03,
      "noise": 0.3,
      "regions": 4,
      "compressor": "zlib"
    },
    "output": "runs/default",
    "seed": 42,
    "jobs": 1
  })");
}

namespace {

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const char* KindName(const json& j) {
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  if (j.is_object()) return "object";
  return "null";
}

bool SameKind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return std::string(KindName(a)) == KindName(b);
}

template <typename T>
T Get(const json& j, const std::string& path) {
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!j.is_number_integer() || (j.is_number_integer() && j.get<std::int64_t>() < 0)) {
        throw ConfigError("'" + path + "' must be a non-negative integer");
      }
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!j.is_number_integer()) throw ConfigError("'" + path + "' must be an integer");
    }
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

YearRange ParseYears(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("'" + path + "' must be [first, last]");
  YearRange r{Get<int>(j[0], path), Get<int>(j[1], path)};
  if (r.last < r.first) throw ConfigError("'" + path + "' has last year before first");
  return r;
}

std::vector<VariableSpec> ParseVariables(const json& list, const std::string& path,
                                         VariableRole role) {
  std::vector<VariableSpec> out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    const json& item = list[k];
    VariableSpec spec;
    spec.role = role;
    if (item.is_string()) {
      spec.name = item.get<std::string>();
    } else if (item.is_object()) {
      for (const auto& [key, value] : item.items()) {
        if (key != "name" && key != "transform") throw ConfigError("unknown key '" + Join(p, key) + "'");
      }
      if (!item.contains("name")) throw ConfigError("'" + p + "' needs a name");
      spec.name = Get<std::string>(item["name"], Join(p, "name"));
      if (item.contains("transform")) {
        spec.transform = ParseTransform(Get<std::string>(item["transform"], Join(p, "transform")));
      }
    } else {
      throw ConfigError("'" + p + "' must be a name or {name, transform}");
    }
    out.push_back(std::move(spec));
  }
  return out;
}

SampleSelector ParseSelector(const json& item, const std::string& p) {
  if (!item.is_object()) throw ConfigError("'" + p + "' must be an object");
  SampleSelector s;
  for (const auto& [key, value] : item.items()) {
    if (key != "date" && key != "t" && key != "patch") throw ConfigError("unknown key '" + Join(p, key) + "'");
  }
  if (item.contains("date")) s.date = Get<std::string>(item["date"], Join(p, "date"));
  if (item.contains("t")) s.t = Get<std::size_t>(item["t"], Join(p, "t"));
  if (s.date.has_value() == s.t.has_value()) {
    throw ConfigError("'" + p + "' needs exactly one of date or t");
  }
  if (!item.contains("patch") || !item["patch"].is_array() || item["patch"].size() != 2) {
    throw ConfigError("'" + Join(p, "patch") + "' must be [row, col]");
  }
  s.patch_row = Get<std::size_t>(item["patch"][0], Join(p, "patch"));
  s.patch_col = Get<std::size_t>(item["patch"][1], Join(p, "patch"));
  return s;
}

}  // namespace

json MergeConfig(const json& defaults, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("configuration " + (path.empty() ? "root" : "'" + path + "'") + " must be an object");
  json out = defaults;
  for (const auto& [key, value] : user.items()) {
    const std::string p = Join(path, key);
    if (!defaults.contains(key)) throw ConfigError("unknown configuration key '" + p + "'");
    const json& d = defaults[key];
    if (!SameKind(d, value)) {
      throw ConfigError("'" + p + "' must be a " + KindName(d) + ", got a " + KindName(value));
    }
    out[key] = d.is_object() ? MergeConfig(d, value, p) : value;
  }
  return out;
}

void ApplyOverride(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  if (key.front() == '.' || key.back() == '.' || key.find("..") != std::string::npos) {
    throw ConfigError("override key '" + key + "' has an empty component");
  }
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  // Build a nested object so the merge applies the same key checks.
  json patch = value;
  std::size_t end = key.size();
  while (true) {
    const auto dot = key.rfind('.', end - 1);
    const std::size_t start = dot == std::string::npos ? 0 : dot + 1;
    const std::string part = key.substr(start, end - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    patch = json{{part, patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  config = MergeConfig(config, patch);
}

RunConfig ParseRunConfig(const json& user) {
  const json j = MergeConfig(DefaultConfigJson(), user);
  RunConfig c;
  c.resolved = j;

  const json& cube = j["cube"];
  c.cube_path = Get<std::string>(cube["path"], "cube.path");
  c.schema.drivers = ParseVariables(cube["drivers"], "cube.drivers", VariableRole::kDriver);
  c.schema.indices = ParseVariables(cube["indices"], "cube.indices", VariableRole::kIndex);
  c.schema.land_mask = Get<std::string>(cube["land_mask"], "cube.land_mask");
  c.schema.burned_area = Get<std::string>(cube["burned_area"], "cube.burned_area");
  c.schema.region_mask = Get<std::string>(cube["region_mask"], "cube.region_mask");
  c.schema.land_threshold = Get<double>(cube["land_threshold"], "cube.land_threshold");
  // 0 defers to the store's start_year attribute.
  if (const int y = Get<int>(cube["start_year"], "cube.start_year"); y != 0) c.schema.start_year = y;
  c.schema.cache_planes = Get<std::size_t>(cube["cache_planes"], "cube.cache_planes");

  c.splits.train = ParseYears(j["splits"]["train"], "splits.train");
  c.splits.val = ParseYears(j["splits"]["val"], "splits.val");
  c.splits.test = ParseYears(j["splits"]["test"], "splits.test");

  for (std::size_t k = 0; k < j["horizons"].size(); ++k) {
    c.horizons.push_back(Get<std::size_t>(j["horizons"][k], "horizons[" + std::to_string(k) + "]"));
  }
  if (c.horizons.empty()) throw ConfigError("'horizons' must list at least one horizon");

  const json& s = j["sample"];
  c.sample.local_patch = Get<std::size_t>(s["local_patch"], "sample.local_patch");
  c.sample.coarsen_factor = Get<std::size_t>(s["coarsen_factor"], "sample.coarsen_factor");
  c.sample.index_steps = Get<std::size_t>(s["index_steps"], "sample.index_steps");
  c.sample.index_stride = Get<std::size_t>(s["index_stride"], "sample.index_stride");
  c.sample.use_positional = Get<bool>(s["use_positional"], "sample.use_positional");
  c.sample.fill_ocean = Get<bool>(s["fill_ocean"], "sample.fill_ocean");
  c.sample.land_threshold = c.schema.land_threshold;
  c.max_train_samples = Get<std::size_t>(s["max_train_samples"], "sample.max_train_samples");
  c.max_val_samples = Get<std::size_t>(s["max_val_samples"], "sample.max_val_samples");
  c.max_test_samples = Get<std::size_t>(s["max_test_samples"], "sample.max_test_samples");
  if (c.sample.local_patch == 0 || c.sample.coarsen_factor == 0 || c.sample.index_steps == 0 ||
      c.sample.index_stride == 0) {
    throw ConfigError("sample sizes must be positive");
  }

  const json& t = j["tokens"];
  c.tokens.local_patch = Get<std::size_t>(t["local_patch"], "tokens.local_patch");
  c.tokens.global_patch = Get<std::size_t>(t["global_patch"], "tokens.global_patch");
  c.tokens.indices_patch = Get<std::size_t>(t["indices_patch"], "tokens.indices_patch");
  c.tokens.dim = Get<std::size_t>(t["dim"], "tokens.dim");

  const json& e = j["encoder"];
  c.encoder.layers = Get<std::size_t>(e["layers"], "encoder.layers");
  c.encoder.heads = Get<std::size_t>(e["heads"], "encoder.heads");
  c.encoder.mlp_dim = Get<std::size_t>(e["mlp_dim"], "encoder.mlp_dim");
  c.encoder.dropout = Get<double>(e["dropout"], "encoder.dropout");
  c.encoder.dim = c.tokens.dim;
  c.encoder.validate();

  const json& m = j["model"];
  c.use_global = Get<bool>(m["use_global"], "model.use_global");
  c.use_indices = Get<bool>(m["use_indices"], "model.use_indices");
  c.shared_decoder = Get<bool>(m["shared_decoder"], "model.shared_decoder");

  c.seed = Get<std::uint64_t>(j["seed"], "seed");
  c.jobs = Get<std::size_t>(j["jobs"], "jobs");
  if (c.jobs == 0) throw ConfigError("'jobs' must be at least 1");
  c.output = Get<std::string>(j["output"], "output");

  const json& tr = j["train"];
  c.train.epochs = Get<std::size_t>(tr["epochs"], "train.epochs");
  c.train.lr = Get<double>(tr["lr"], "train.lr");
  c.train.warmup = Get<double>(tr["warmup"], "train.warmup");
  c.train.batch_size = Get<std::size_t>(tr["batch_size"], "train.batch_size");
  c.train.max_steps = Get<std::size_t>(tr["max_steps"], "train.max_steps");
  c.train.mask_ocean_in_loss = Get<bool>(tr["mask_ocean_in_loss"], "train.mask_ocean_in_loss");
  c.train.seed = c.seed;
  c.train.validate();

  c.histogram_bins = Get<std::size_t>(j["evaluate"]["histogram_bins"], "evaluate.histogram_bins");
  if (c.histogram_bins == 0) throw ConfigError("'evaluate.histogram_bins' must be positive");

  const json& in = j["inspect"];
  c.ig_steps = Get<std::size_t>(in["ig_steps"], "inspect.ig_steps");
  if (c.ig_steps < 2) throw ConfigError("'inspect.ig_steps' must be at least 2");
  const auto agg = Get<std::string>(in["aggregation"], "inspect.aggregation");
  if (agg == "abs") {
    c.aggregation = AggregationMode::kAbsolute;
  } else if (agg == "signed") {
    c.aggregation = AggregationMode::kSigned;
  } else {
    throw ConfigError("'inspect.aggregation' must be \"abs\" or \"signed\", got \"" + agg + "\"");
  }
  c.raw_last_layer = Get<bool>(in["raw_last_layer"], "inspect.raw_last_layer");
  for (std::size_t k = 0; k < in["samples"].size(); ++k) {
    c.inspect_samples.push_back(
        ParseSelector(in["samples"][k], "inspect.samples[" + std::to_string(k) + "]"));
  }

  const json& sy = j["synth"];
  c.synth.seed = Get<std::uint64_t>(sy["seed"], "synth.seed");
  c.synth.years = Get<std::size_t>(sy["years"], "synth.years");
  c.synth.start_year = Get<int>(sy["start_year"], "synth.start_year");
  c.synth.n_lat = Get<std::size_t>(sy["n_lat"], "synth.n_lat");
  c.synth.n_lon = Get<std::size_t>(sy["n_lon"], "synth.n_lon");
  c.synth.n_drivers = Get<std::size_t>(sy["n_drivers"], "synth.n_drivers");
  c.synth.n_indices = Get<std::size_t>(sy["n_indices"], "synth.n_indices");
  c.synth.land_fraction = Get<double>(sy["land_fraction"], "synth.land_fraction");
  c.synth.all_land = Get<bool>(sy["all_land"], "synth.all_land");
  c.synth.target_rate = Get<double>(sy["target_rate"], "synth.target_rate");
  c.synth.noise = Get<double>(sy["noise"], "synth.noise");
  c.synth.regions = Get<std::size_t>(sy["regions"], "synth.regions");
  c.synth_compressor = Get<std::string>(sy["compressor"], "synth.compressor");
  return c;
}

RunConfig LoadRunConfig(const std::optional<std::filesystem::path>& file,
                        const std::vector<std::string>& overrides) {
  json user = json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw IoError("cannot read config file " + file->string());
    try {
      user = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + file->string() + " is not valid JSON: " + e.what());
    }
  }
  json merged = MergeConfig(DefaultConfigJson(), user);
  for (const auto& o : overrides) ApplyOverride(merged, o);
  return ParseRunConfig(merged);
}

ModelConfig MakeModelConfig(const RunConfig& run, const CubeStore& cube) {
  ModelConfig m;
  m.input = InputShapeFor(cube, run.sample);
  m.tokens = run.tokens;
  m.encoder = run.encoder;
  m.use_global = run.use_global;
  m.use_indices = run.use_indices;
  m.shared_decoder = run.shared_decoder;
  m.validate();
  return m;
}

std::uint64_t HorizonSeed(std::uint64_t root, std::size_t horizon) {
  // splitmix64 finalizer over (root, horizon)
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(horizon) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::size_t DateToStep(const std::string& date, int start_year, std::size_t n_time) {
  using namespace std::chrono;
  int y = 0;
  unsigned mo = 0, d = 0;
  char tail = 0;
  if (std::sscanf(date.c_str(), "%d-%u-%u%c", &y, &mo, &d, &tail) != 3) {
    throw ConfigError("date '" + date + "' is not YYYY-MM-DD");
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) throw ConfigError("date '" + date + "' does not exist");
  const auto doy = (sys_days{ymd} - sys_days{year{y} / January / 1}).count();
  const auto week = std::min<std::size_t>(kStepsPerYear - 1, static_cast<std::size_t>(doy) / 8);
  if (y < start_year) throw InputDomainError("date " + date + " precedes the cube");
  const std::size_t t = static_cast<std::size_t>(y - start_year) * kStepsPerYear + week;
  if (t >= n_time) throw InputDomainError("date " + date + " lies after the cube");
  return t;
}

std::string StepToDate(std::size_t t, int start_year) {
  using namespace std::chrono;
  const int y = start_year + static_cast<int>(t / kStepsPerYear);
  const sys_days day0 = sys_days{year{y} / January / 1} + days{static_cast<int>((t % kStepsPerYear) * 8)};
  const year_month_day ymd{day0};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace televit
