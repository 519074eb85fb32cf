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

#include "televit/zarr.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

namespace televit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DType {
  char endian = '<';
  char kind = 'f';
  std::size_t size = 4;
};

DType ParseDType(const std::string& s) {
  if (s.size() < 3) throw IoError("unsupported zarr dtype '" + s + "'");
  DType d;
  d.endian = s[0];
  d.kind = s[1];
  d.size = static_cast<std::size_t>(std::stoul(s.substr(2)));
  const bool ok = (d.kind == 'f' && (d.size == 4 || d.size == 8)) ||
                  ((d.kind == 'i' || d.kind == 'u') &&
                   (d.size == 1 || d.size == 2 || d.size == 4 || d.size == 8)) ||
                  (d.kind == 'b' && d.size == 1);
  if (!ok) throw IoError("unsupported zarr dtype '" + s + "'");
  return d;
}

template <typename T>
T LoadValue(const unsigned char* p, bool swap) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, p, sizeof(T));
  if (swap) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

double Decode(const unsigned char* p, const DType& d) {
  const bool swap = (d.endian == '>') != (std::endian::native == std::endian::big) &&
                    d.endian != '|' && d.size > 1;
  switch (d.kind) {
    case 'f':
      return d.size == 4 ? LoadValue<float>(p, swap) : LoadValue<double>(p, swap);
    case 'i':
      switch (d.size) {
        case 1: return LoadValue<std::int8_t>(p, swap);
        case 2: return LoadValue<std::int16_t>(p, swap);
        case 4: return LoadValue<std::int32_t>(p, swap);
        default: return static_cast<double>(LoadValue<std::int64_t>(p, swap));
      }
    case 'u':
      switch (d.size) {
        case 1: return LoadValue<std::uint8_t>(p, swap);
        case 2: return LoadValue<std::uint16_t>(p, swap);
        case 4: return LoadValue<std::uint32_t>(p, swap);
        default: return static_cast<double>(LoadValue<std::uint64_t>(p, swap));
      }
    default:
      return *p != 0 ? 1.0 : 0.0;
  }
}

template <typename T>
void StoreValue(unsigned char* p, T v) {
  static_assert(std::endian::native == std::endian::little, "writer assumes little endian");
  std::memcpy(p, &v, sizeof(T));
}

void Encode(unsigned char* p, double v, const DType& d) {
  if (d.kind == 'f') {
    d.size == 4 ? StoreValue<float>(p, static_cast<float>(v)) : StoreValue<double>(p, v);
  } else if (d.kind == 'i' && d.size == 4) {
    StoreValue<std::int32_t>(p, static_cast<std::int32_t>(std::isfinite(v) ? v : 0));
  } else if (d.kind == 'u' && d.size == 1) {
    StoreValue<std::uint8_t>(p, static_cast<std::uint8_t>(std::isfinite(v) ? v : 0));
  } else {
    throw IoError("writer does not support this dtype");
  }
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFile(const fs::path& p, const void* data, std::size_t n) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("short write to " + p.string());
}

void WriteJson(const fs::path& p, const json& j) {
  const std::string s = j.dump(2);
  WriteFile(p, s.data(), s.size());
}

json ReadJson(const fs::path& p) {
  try {
    return json::parse(ReadFile(p));
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

std::string Inflate(const std::string& compressed, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  // 15 + 32: accept both zlib and gzip headers.
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw IoError("zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) throw IoError("corrupt compressed zarr chunk");
  return out;
}

std::string Deflate(const unsigned char* data, std::size_t n, int level, bool gzip) {
  z_stream zs{};
  if (deflateInit2(&zs, level, Z_DEFLATED, gzip ? 15 + 16 : 15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw IoError("zlib init failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(n)) + 32, '\0');
  zs.next_in = const_cast<Bytef*>(data);
  zs.avail_in = static_cast<uInt>(n);
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw IoError("zlib compression failed");
  return out;
}

std::string ChunkKey(const std::vector<std::size_t>& idx, const std::string& sep) {
  std::string key;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) key += sep;
    key += std::to_string(idx[i]);
  }
  return idx.empty() ? "0" : key;
}

std::size_t Product(const std::vector<std::size_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::size_t{1}, std::multiplies<>());
}

class ZarrField final : public CachedField {
 public:
  ZarrField(ZarrArray array, std::size_t cache_planes)
      : CachedField(array.meta().shape.at(0), array.meta().shape.at(1), array.meta().shape.at(2),
                    cache_planes),
        array_(std::move(array)) {}

 protected:
  void produce_plane(std::size_t t, std::span<float> out) const override {
    array_.read_plane(t, out);
  }

 private:
  ZarrArray array_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Metadata
// ---------------------------------------------------------------------------

json ZarrArrayMeta::to_zarray() const {
  json j;
  j["zarr_format"] = 2;
  j["shape"] = shape;
  j["chunks"] = chunks;
  j["dtype"] = dtype;
  j["order"] = "C";
  j["filters"] = nullptr;
  j["dimension_separator"] = separator;
  if (compressor.empty()) {
    j["compressor"] = nullptr;
  } else {
    j["compressor"] = {{"id", compressor}, {"level", level}};
  }
  if (std::isnan(fill_value)) {
    j["fill_value"] = "NaN";
  } else {
    j["fill_value"] = fill_value;
  }
  return j;
}

ZarrArrayMeta ZarrArrayMeta::FromJson(const json& z, const json* attrs) {
  ZarrArrayMeta m;
  try {
    m.shape = z.at("shape").get<std::vector<std::size_t>>();
    m.chunks = z.at("chunks").get<std::vector<std::size_t>>();
    m.dtype = z.at("dtype").get<std::string>();
    if (z.contains("order") && z["order"] != "C") throw IoError("only C-order zarr arrays are supported");
    if (z.contains("filters") && !z["filters"].is_null() && !z["filters"].empty()) {
      throw IoError("zarr filters are not supported");
    }
    if (z.contains("dimension_separator")) m.separator = z["dimension_separator"].get<std::string>();
    const json& c = z.at("compressor");
    if (!c.is_null()) {
      m.compressor = c.at("id").get<std::string>();
      if (m.compressor != "zlib" && m.compressor != "gzip") {
        throw IoError("unsupported zarr compressor '" + m.compressor + "'");
      }
      if (c.contains("level")) m.level = c["level"].get<int>();
    }
    const json& f = z.at("fill_value");
    if (f.is_null() || (f.is_string() && f.get<std::string>() == "NaN")) {
      m.fill_value = std::numeric_limits<double>::quiet_NaN();
    } else if (f.is_number()) {
      m.fill_value = f.get<double>();
    } else if (f.is_boolean()) {
      m.fill_value = f.get<bool>() ? 1.0 : 0.0;
    }
    if (attrs && attrs->contains("_FillValue")) {
      const json& mv = (*attrs)["_FillValue"];
      if (mv.is_number()) {
        m.missing_value = mv.get<double>();
      } else if (mv.is_null() || (mv.is_string() && mv.get<std::string>() == "NaN")) {
        m.missing_value = std::numeric_limits<double>::quiet_NaN();
      }
    }
    if (attrs && attrs->contains("_ARRAY_DIMENSIONS")) {
      m.dims = (*attrs)["_ARRAY_DIMENSIONS"].get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed .zarray metadata: ") + e.what());
  }
  if (m.shape.size() != m.chunks.size()) throw IoError("zarr shape/chunks rank mismatch");
  ParseDType(m.dtype);
  return m;
}

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

ZarrArray::ZarrArray(fs::path array_dir, ZarrArrayMeta meta)
    : dir_(std::move(array_dir)), meta_(std::move(meta)) {}

std::vector<double> ZarrArray::read_chunk(const std::vector<std::size_t>& chunk_index) const {
  const DType d = ParseDType(meta_.dtype);
  const std::size_t n = Product(meta_.chunks);
  const fs::path file = dir_ / ChunkKey(chunk_index, meta_.separator);
  const bool masked = meta_.missing_value && !std::isnan(*meta_.missing_value);
  const auto is_missing = [&](double v) { return masked && v == *meta_.missing_value; };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> out(n, is_missing(meta_.fill_value) ? nan : meta_.fill_value);
  if (!fs::exists(file)) return out;
  std::string bytes = ReadFile(file);
  if (!meta_.compressor.empty()) bytes = Inflate(bytes, n * d.size);
  if (bytes.size() != n * d.size) throw IoError("zarr chunk " + file.string() + " has wrong size");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < n; ++i) {
    const double v = Decode(p + i * d.size, d);
    out[i] = is_missing(v) ? nan : v;
  }
  return out;
}

std::vector<double> ZarrArray::read_all() const {
  const std::size_t rank = meta_.shape.size();
  std::vector<double> out(Product(meta_.shape));
  std::vector<std::size_t> n_chunks(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    n_chunks[k] = (meta_.shape[k] + meta_.chunks[k] - 1) / meta_.chunks[k];
  }
  std::vector<std::size_t> ci(rank, 0);
  const std::size_t total_chunks = Product(n_chunks);
  for (std::size_t c = 0; c < total_chunks; ++c) {
    std::size_t rem = c;
    for (std::size_t k = rank; k-- > 0;) {
      ci[k] = rem % n_chunks[k];
      rem /= n_chunks[k];
    }
    const auto chunk = read_chunk(ci);
    const std::size_t chunk_n = Product(meta_.chunks);
    std::vector<std::size_t> local(rank);
    for (std::size_t e = 0; e < chunk_n; ++e) {
      std::size_t r = e;
      for (std::size_t k = rank; k-- > 0;) {
        local[k] = r % meta_.chunks[k];
        r /= meta_.chunks[k];
      }
      std::size_t flat = 0;
      bool inside = true;
      for (std::size_t k = 0; k < rank; ++k) {
        const std::size_t g = ci[k] * meta_.chunks[k] + local[k];
        if (g >= meta_.shape[k]) {
          inside = false;
          break;
        }
        flat = flat * meta_.shape[k] + g;
      }
      if (inside) out[flat] = chunk[e];
    }
  }
  return out;
}

void ZarrArray::read_plane(std::size_t t, std::span<float> out) const {
  if (meta_.shape.size() != 3) throw IoError("read_plane needs a 3-D array");
  const std::size_t n_lat = meta_.shape[1], n_lon = meta_.shape[2];
  const std::size_t c0 = meta_.chunks[0], c1 = meta_.chunks[1], c2 = meta_.chunks[2];
  if (out.size() != n_lat * n_lon) throw ContractViolation("plane buffer size mismatch");
  const std::size_t off = t % c0;
  for (std::size_t bi = 0; bi * c1 < n_lat; ++bi) {
    for (std::size_t bj = 0; bj * c2 < n_lon; ++bj) {
      const auto chunk = read_chunk({t / c0, bi, bj});
      for (std::size_t i = 0; i < c1 && bi * c1 + i < n_lat; ++i) {
        for (std::size_t j = 0; j < c2 && bj * c2 + j < n_lon; ++j) {
          out[(bi * c1 + i) * n_lon + bj * c2 + j] =
              static_cast<float>(chunk[(off * c1 + i) * c2 + j]);
        }
      }
    }
  }
}

ZarrGroup::ZarrGroup(fs::path root) : root_(std::move(root)) {
  if (!fs::is_directory(root_)) throw IoError("cube directory " + root_.string() + " not found");
  if (fs::exists(root_ / ".zmetadata")) {
    const json consolidated = ReadJson(root_ / ".zmetadata");
    metadata_ = consolidated.value("metadata", json::object());
  } else {
    metadata_ = json::object();
    for (const auto& entry : fs::directory_iterator(root_)) {
      if (!entry.is_directory() || !fs::exists(entry.path() / ".zarray")) continue;
      const std::string name = entry.path().filename().string();
      metadata_[name + "/.zarray"] = ReadJson(entry.path() / ".zarray");
      if (fs::exists(entry.path() / ".zattrs")) {
        metadata_[name + "/.zattrs"] = ReadJson(entry.path() / ".zattrs");
      }
    }
    if (fs::exists(root_ / ".zattrs")) metadata_[".zattrs"] = ReadJson(root_ / ".zattrs");
  }
  attrs_ = metadata_.value(".zattrs", json::object());
}

bool ZarrGroup::has_array(const std::string& name) const {
  return metadata_.contains(name + "/.zarray");
}

std::vector<std::string> ZarrGroup::array_names() const {
  std::vector<std::string> names;
  constexpr std::string_view kSuffix = "/.zarray";
  for (const auto& [key, value] : metadata_.items()) {
    if (key.size() > kSuffix.size() && key.ends_with(kSuffix)) {
      names.push_back(key.substr(0, key.size() - kSuffix.size()));
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

ZarrArray ZarrGroup::array(const std::string& name) const {
  if (!has_array(name)) throw ConfigError("cube has no array named '" + name + "'");
  const std::string attrs_key = name + "/.zattrs";
  const json* attrs = metadata_.contains(attrs_key) ? &metadata_[attrs_key] : nullptr;
  return ZarrArray(root_ / name, ZarrArrayMeta::FromJson(metadata_[name + "/.zarray"], attrs));
}

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

ZarrGroupWriter::ZarrGroupWriter(fs::path root, std::string compressor)
    : root_(std::move(root)), compressor_(std::move(compressor)) {
  if (!compressor_.empty() && compressor_ != "zlib" && compressor_ != "gzip") {
    throw ConfigError("unsupported zarr compressor '" + compressor_ + "'");
  }
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_)) {
    throw IoError("cannot create cube directory " + root_.string());
  }
}

void ZarrGroupWriter::write_chunk(const fs::path& file, const ZarrArrayMeta& meta,
                                  std::span<const double> values) const {
  const DType d = ParseDType(meta.dtype);
  std::vector<unsigned char> raw(values.size() * d.size);
  for (std::size_t i = 0; i < values.size(); ++i) Encode(raw.data() + i * d.size, values[i], d);
  if (meta.compressor.empty()) {
    WriteFile(file, raw.data(), raw.size());
  } else {
    const std::string packed = Deflate(raw.data(), raw.size(), meta.level, meta.compressor == "gzip");
    WriteFile(file, packed.data(), packed.size());
  }
}

void ZarrGroupWriter::register_array(const std::string& name, const ZarrArrayMeta& meta) {
  const fs::path dir = root_ / name;
  fs::create_directories(dir);
  const json zarray = meta.to_zarray();
  const json zattrs = {{"_ARRAY_DIMENSIONS", meta.dims}};
  WriteJson(dir / ".zarray", zarray);
  WriteJson(dir / ".zattrs", zattrs);
  metadata_[name + "/.zarray"] = zarray;
  metadata_[name + "/.zattrs"] = zattrs;
}

void ZarrGroupWriter::write_array(const std::string& name, const std::vector<std::size_t>& shape,
                                  const std::vector<std::size_t>& chunks,
                                  const std::vector<std::string>& dims,
                                  std::span<const double> values, const std::string& dtype) {
  if (shape != chunks) throw ContractViolation("write_array writes single-chunk arrays only");
  if (values.size() != Product(shape)) throw ContractViolation("value count does not match shape");
  ZarrArrayMeta meta;
  meta.shape = shape;
  meta.chunks = chunks;
  meta.dims = dims;
  meta.dtype = dtype;
  meta.compressor = compressor_;
  if (dtype[1] != 'f') meta.fill_value = 0.0;
  register_array(name, meta);
  write_chunk(root_ / name / ChunkKey(std::vector<std::size_t>(shape.size(), 0), meta.separator),
              meta, values);
}

void ZarrGroupWriter::write_field(const std::string& name, const Field& field) {
  ZarrArrayMeta meta;
  meta.shape = {field.n_time(), field.n_lat(), field.n_lon()};
  meta.chunks = {1, field.n_lat(), field.n_lon()};
  meta.dims = {"time", "latitude", "longitude"};
  meta.compressor = compressor_;
  register_array(name, meta);
  std::vector<double> buf(field.plane_size());
  for (std::size_t t = 0; t < field.n_time(); ++t) {
    const PlaneView view = field.plane(t);
    std::copy(view.values.begin(), view.values.end(), buf.begin());
    write_chunk(root_ / name / ChunkKey({t, 0, 0}, meta.separator), meta, buf);
  }
}

void ZarrGroupWriter::finalize() {
  const json zgroup = {{"zarr_format", 2}};
  WriteJson(root_ / ".zgroup", zgroup);
  WriteJson(root_ / ".zattrs", attrs_);
  metadata_[".zgroup"] = zgroup;
  metadata_[".zattrs"] = attrs_;
  WriteJson(root_ / ".zmetadata", {{"metadata", metadata_}, {"zarr_consolidated_format", 1}});
}

// ---------------------------------------------------------------------------
// Cube adapters
// ---------------------------------------------------------------------------

namespace {

std::vector<VariableSpec> DeclaredVariables(const json& attrs, const char* key, VariableRole role) {
  std::vector<VariableSpec> out;
  if (!attrs.contains(key)) return out;
  for (const auto& v : attrs[key]) {
    VariableSpec spec;
    if (v.is_string()) {
      spec.name = v.get<std::string>();
    } else {
      spec.name = v.at("name").get<std::string>();
      spec.transform = ParseTransform(v.value("transform", "identity"));
    }
    spec.role = role;
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace

CubeStore OpenZarrCube(const fs::path& root, const CubeSchema& schema) {
  const ZarrGroup group(root);
  const json& attrs = group.attrs();

  auto drivers_spec = schema.drivers.empty()
                          ? DeclaredVariables(attrs, "drivers", VariableRole::kDriver)
                          : schema.drivers;
  auto indices_spec = schema.indices.empty()
                          ? DeclaredVariables(attrs, "indices", VariableRole::kIndex)
                          : schema.indices;
  if (drivers_spec.empty()) throw ConfigError("no driver variables selected for " + root.string());

  const std::string burned_name = attrs.value("burned_area", schema.burned_area);
  const std::string land_name = attrs.value("land_mask", schema.land_mask);
  const std::string region_name = attrs.value("region_mask", schema.region_mask);

  ZarrArray burned_array = group.array(schema.burned_area.empty() ? burned_name : schema.burned_area);
  if (burned_array.meta().shape.size() != 3) {
    throw ConfigError("burned-area array must be (time, latitude, longitude)");
  }
  CubeDescriptor desc;
  desc.n_time = burned_array.meta().shape[0];
  desc.n_lat = burned_array.meta().shape[1];
  desc.n_lon = burned_array.meta().shape[2];
  if (schema.start_year) {
    desc.start_year = *schema.start_year;
  } else if (attrs.contains("start_year")) {
    desc.start_year = attrs["start_year"].get<int>();
  } else {
    throw ConfigError("cube declares no start_year; set cube.start_year in the config");
  }

  std::vector<DriverVariable> drivers;
  for (auto& spec : drivers_spec) {
    ZarrArray arr = group.array(spec.name);
    if (arr.meta().shape.size() != 3) {
      throw ConfigError("driver '" + spec.name + "' must be a (time, latitude, longitude) array");
    }
    spec.role = VariableRole::kDriver;
    drivers.push_back({spec, std::make_shared<ZarrField>(std::move(arr), schema.cache_planes)});
  }

  std::vector<IndexVariable> indices;
  for (auto& spec : indices_spec) {
    ZarrArray arr = group.array(spec.name);
    if (arr.meta().shape.size() != 1) throw ConfigError("index '" + spec.name + "' must be 1-D");
    const auto values = arr.read_all();
    IndexVariable ix;
    spec.role = VariableRole::kIndex;
    ix.spec = spec;
    ix.values.assign(values.begin(), values.end());
    indices.push_back(std::move(ix));
  }

  const std::string land_key = schema.land_mask.empty() ? land_name : schema.land_mask;
  const auto land_values = group.array(land_key).read_all();
  std::vector<std::uint8_t> land(land_values.size());
  for (std::size_t i = 0; i < land.size(); ++i) {
    land[i] = (std::isfinite(land_values[i]) && land_values[i] > schema.land_threshold) ? 1 : 0;
  }

  std::vector<std::int32_t> regions;
  const std::string region_key = schema.region_mask.empty() ? region_name : schema.region_mask;
  if (!region_key.empty() && group.has_array(region_key)) {
    const auto values = group.array(region_key).read_all();
    regions.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      regions[i] = std::isfinite(values[i]) ? static_cast<std::int32_t>(values[i]) : 0;
    }
  }

  return CubeStore(desc, std::move(drivers), std::move(indices), std::move(land),
                   std::make_shared<ZarrField>(std::move(burned_array), schema.cache_planes),
                   std::move(regions));
}

void WriteZarrCube(const CubeStore& cube, const fs::path& root, const std::string& compressor) {
  ZarrGroupWriter writer(root, compressor);
  json attrs;
  attrs["start_year"] = cube.start_year();
  attrs["steps_per_year"] = kStepsPerYear;
  attrs["burned_area"] = "burned_area";
  attrs["land_mask"] = "land_mask";
  attrs["region_mask"] = "region_mask";
  attrs["drivers"] = json::array();
  for (const auto& d : cube.drivers()) {
    attrs["drivers"].push_back({{"name", d.spec.name}, {"transform", TransformName(d.spec.transform)}});
    writer.write_field(d.spec.name, *d.field);
  }
  writer.write_field("burned_area", cube.burned_area());
  attrs["indices"] = json::array();
  for (const auto& ix : cube.indices()) {
    attrs["indices"].push_back({{"name", ix.spec.name}, {"transform", TransformName(ix.spec.transform)}});
    std::vector<double> v(ix.values.begin(), ix.values.end());
    writer.write_array(ix.spec.name, {v.size()}, {v.size()}, {"time"}, v);
  }
  const std::size_t n_lat = cube.n_lat(), n_lon = cube.n_lon();
  std::vector<double> land(cube.land_mask().begin(), cube.land_mask().end());
  writer.write_array("land_mask", {n_lat, n_lon}, {n_lat, n_lon}, {"latitude", "longitude"}, land, "<i4");
  std::vector<double> regions(cube.region_mask().begin(), cube.region_mask().end());
  writer.write_array("region_mask", {n_lat, n_lon}, {n_lat, n_lon}, {"latitude", "longitude"}, regions,
                     "<i4");
  writer.write_array("latitude", {n_lat}, {n_lat}, {"latitude"}, cube.lat_centers(), "<f8");
  writer.write_array("longitude", {n_lon}, {n_lon}, {"longitude"}, cube.lon_centers(), "<f8");
  std::vector<double> time(cube.n_time());
  std::iota(time.begin(), time.end(), 0.0);
  writer.write_array("time", {time.size()}, {time.size()}, {"time"}, time, "<i4");
  writer.set_attrs(std::move(attrs));
  writer.finalize();
}

std::string DirectoryChecksum(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(fs::relative(entry.path(), root));
  }
  std::sort(files.begin(), files.end());
  Fingerprint fp;
  for (const auto& rel : files) {
    fp.update(rel.generic_string());
    fp.update(ReadFile(root / rel));
  }
  return fp.hex();
}

}  // namespace televit
