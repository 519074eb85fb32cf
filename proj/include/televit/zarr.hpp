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

// Zarr (format 2) directory store: the on-disk cube layout.
//
// A cube directory is a Zarr group with consolidated metadata (.zmetadata).
// Gridded variables are (time, latitude, longitude) arrays and index series
// are (time,) arrays; the static masks are (latitude, longitude). Chunks may
// be uncompressed or zlib/gzip compressed; other codecs (blosc, zstd) are
// rejected with an IoError naming the codec.

#ifndef TELEVIT_ZARR_HPP_
#define TELEVIT_ZARR_HPP_

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "televit/datacube.hpp"

namespace televit {

struct ZarrArrayMeta {
  std::vector<std::size_t> shape;
  std::vector<std::size_t> chunks;
  std::string dtype = "<f4";
  std::string compressor;  // "" for none, "zlib" or "gzip"
  int level = 1;
  double fill_value = std::numeric_limits<double>::quiet_NaN();  // uninitialized chunks
  std::optional<double> missing_value;  // .zattrs _FillValue; matching cells read as NaN
  std::string separator = ".";
  std::vector<std::string> dims;

  nlohmann::json to_zarray() const;
  static ZarrArrayMeta FromJson(const nlohmann::json& zarray, const nlohmann::json* zattrs);
};

// Reads one array of a group, chunk by chunk.
class ZarrArray {
 public:
  ZarrArray(std::filesystem::path array_dir, ZarrArrayMeta meta);

  const ZarrArrayMeta& meta() const { return meta_; }
  // Decoded chunk as doubles (fill value for absent chunk files).
  std::vector<double> read_chunk(const std::vector<std::size_t>& chunk_index) const;
  std::vector<double> read_all() const;
  // One time plane of a 3-D (time, lat, lon) array.
  void read_plane(std::size_t t, std::span<float> out) const;

 private:
  std::filesystem::path dir_;
  ZarrArrayMeta meta_;
};

class ZarrGroup {
 public:
  explicit ZarrGroup(std::filesystem::path root);

  const nlohmann::json& attrs() const { return attrs_; }
  bool has_array(const std::string& name) const;
  std::vector<std::string> array_names() const;
  ZarrArray array(const std::string& name) const;

 private:
  std::filesystem::path root_;
  nlohmann::json attrs_;
  nlohmann::json metadata_;  // consolidated "metadata" object
};

class ZarrGroupWriter {
 public:
  ZarrGroupWriter(std::filesystem::path root, std::string compressor = "");

  void set_attrs(nlohmann::json attrs) { attrs_ = std::move(attrs); }
  void write_array(const std::string& name, const std::vector<std::size_t>& shape,
                   const std::vector<std::size_t>& chunks, const std::vector<std::string>& dims,
                   std::span<const double> values, const std::string& dtype = "<f4");
  // Streams a (time, lat, lon) field plane by plane, one time step per chunk.
  void write_field(const std::string& name, const Field& field);
  // Writes .zgroup, .zattrs and the consolidated .zmetadata.
  void finalize();

 private:
  void write_chunk(const std::filesystem::path& file, const ZarrArrayMeta& meta,
                   std::span<const double> values) const;
  void register_array(const std::string& name, const ZarrArrayMeta& meta);

  std::filesystem::path root_;
  std::string compressor_;
  nlohmann::json attrs_ = nlohmann::json::object();
  nlohmann::json metadata_ = nlohmann::json::object();
};

// Variable selection when opening a cube. Empty driver/index lists select
// every variable the group declares in its attributes.
struct CubeSchema {
  std::vector<VariableSpec> drivers;
  std::vector<VariableSpec> indices;
  std::string land_mask = "land_mask";
  std::string burned_area = "burned_area";
  std::string region_mask = "region_mask";  // optional in the store
  double land_threshold = 0.5;
  std::optional<int> start_year;            // overrides the group attribute
  std::size_t cache_planes = 64;
};

CubeStore OpenZarrCube(const std::filesystem::path& root, const CubeSchema& schema);

void WriteZarrCube(const CubeStore& cube, const std::filesystem::path& root,
                   const std::string& compressor = "");

// FNV-1a over relative paths and contents of every file, in sorted order.
std::string DirectoryChecksum(const std::filesystem::path& root);

}  // namespace televit

#endif  // TELEVIT_ZARR_HPP_
