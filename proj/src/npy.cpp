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

#include "televit/npy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <regex>

namespace televit {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "npy I/O assumes a little-endian host");

namespace {

std::size_t Product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

template <typename T>
void WriteRaw(const fs::path& path, const char* descr, std::span<const T> values,
              const std::vector<std::size_t>& shape) {
  if (Product(shape) != values.size()) {
    throw ContractViolation("npy shape does not match " + std::to_string(values.size()) +
                            " values for " + path.string());
  }
  std::string dims;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    dims += std::to_string(shape[k]);
    if (shape.size() == 1 || k + 1 < shape.size()) dims += ",";
    if (k + 1 < shape.size()) dims += " ";
  }
  std::string header = std::string("{'descr': '") + descr +
                       "', 'fortran_order': False, 'shape': (" + dims + "), }";
  // Pad so the data starts on a 64-byte boundary; header ends with '\n'.
  const std::size_t preamble = 10;
  const std::size_t total = ((preamble + header.size() + 1 + 63) / 64) * 64;
  header.append(total - preamble - header.size() - 1, ' ');
  header.push_back('\n');
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const char magic[8] = {'\x93', 'N', 'U', 'M', 'P', 'Y', 1, 0};
  out.write(magic, 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  out.write(reinterpret_cast<const char*>(&len), 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

void WriteNpy(const fs::path& path, std::span<const double> values,
              const std::vector<std::size_t>& shape) {
  WriteRaw(path, "<f8", values, shape);
}

void WriteNpy(const fs::path& path, std::span<const std::int64_t> values,
              const std::vector<std::size_t>& shape) {
  WriteRaw(path, "<i8", values, shape);
}

void WriteNpy(const fs::path& path, std::span<const std::uint8_t> values,
              const std::vector<std::size_t>& shape) {
  WriteRaw(path, "|u1", values, shape);
}

void WriteNpy(const fs::path& path, const Mat& m) {
  WriteNpy(path, std::span<const double>(m.data(), static_cast<std::size_t>(m.size())),
           {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
}

void WriteNpy(const fs::path& path, const Tensor3& t) {
  WriteNpy(path, std::span<const double>(t.data), {t.channels, t.rows, t.cols});
}

NpyArray ReadNpy(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  std::uint16_t len = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&len), 2);
  if (!in || std::memcmp(magic, "\x93NUMPY\x01\x00", 8) != 0) {
    throw IoError(path.string() + " is not a version 1.0 npy file");
  }
  std::string header(len, '\0');
  in.read(header.data(), len);
  std::smatch m;
  if (!std::regex_search(header, m, std::regex(R"('descr':\s*'([^']+)')"))) {
    throw IoError("npy header lacks descr in " + path.string());
  }
  NpyArray a;
  a.dtype = m[1];
  if (header.find("'fortran_order': False") == std::string::npos) {
    throw IoError("only C-order npy files are supported: " + path.string());
  }
  if (!std::regex_search(header, m, std::regex(R"('shape':\s*\(([^)]*)\))"))) {
    throw IoError("npy header lacks shape in " + path.string());
  }
  const std::string dims = m[1];
  const std::regex num(R"(\d+)");
  for (auto it = std::sregex_iterator(dims.begin(), dims.end(), num); it != std::sregex_iterator(); ++it) {
    a.shape.push_back(std::stoull(it->str()));
  }
  const std::size_t n = Product(a.shape);
  a.values.resize(n);
  if (a.dtype == "<f8") {
    in.read(reinterpret_cast<char*>(a.values.data()), static_cast<std::streamsize>(n * 8));
  } else if (a.dtype == "<i8") {
    std::vector<std::int64_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 8));
    for (std::size_t k = 0; k < n; ++k) a.values[k] = static_cast<double>(raw[k]);
  } else if (a.dtype == "|u1") {
    std::vector<std::uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    for (std::size_t k = 0; k < n; ++k) a.values[k] = raw[k];
  } else {
    throw IoError("unsupported npy dtype " + a.dtype + " in " + path.string());
  }
  if (!in) throw IoError("truncated npy payload in " + path.string());
  return a;
}

}  // namespace televit
