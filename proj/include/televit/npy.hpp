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

// Minimal NumPy .npy (format 1.0) writer and reader for C-order arrays.

#ifndef TELEVIT_NPY_HPP_
#define TELEVIT_NPY_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "televit/common.hpp"

namespace televit {

void WriteNpy(const std::filesystem::path& path, std::span<const double> values,
              const std::vector<std::size_t>& shape);
void WriteNpy(const std::filesystem::path& path, std::span<const std::int64_t> values,
              const std::vector<std::size_t>& shape);
void WriteNpy(const std::filesystem::path& path, std::span<const std::uint8_t> values,
              const std::vector<std::size_t>& shape);
void WriteNpy(const std::filesystem::path& path, const Mat& m);
void WriteNpy(const std::filesystem::path& path, const Tensor3& t);

struct NpyArray {
  std::string dtype;  // "<f8", "<i8" or "|u1"
  std::vector<std::size_t> shape;
  std::vector<double> values;  // converted to double
};

NpyArray ReadNpy(const std::filesystem::path& path);

}  // namespace televit

#endif  // TELEVIT_NPY_HPP_
