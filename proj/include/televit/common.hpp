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

#ifndef TELEVIT_COMMON_HPP_
#define TELEVIT_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace televit {

// Row-major so that one row is one token.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// ---------------------------------------------------------------------------
// Errors. Every failure surfaced by the library carries one of these
// categories; the CLI maps them onto distinct exit codes.
// ---------------------------------------------------------------------------

enum class ErrorCategory {
  kConfig,
  kInputDomain,
  kContract,
  kNumeric,
  kIo,
  kUndefinedMetric,
  kSampleUnavailable,
};

std::string_view CategoryName(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

class InputDomainError : public Error {
 public:
  explicit InputDomainError(const std::string& what)
      : Error(ErrorCategory::kInputDomain, what) {}
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what)
      : Error(ErrorCategory::kContract, what) {}
};

class NumericFailure : public Error {
 public:
  explicit NumericFailure(const std::string& what) : Error(ErrorCategory::kNumeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

class UndefinedMetric : public Error {
 public:
  explicit UndefinedMetric(const std::string& what)
      : Error(ErrorCategory::kUndefinedMetric, what) {}
};

class SampleUnavailable : public Error {
 public:
  explicit SampleUnavailable(const std::string& what)
      : Error(ErrorCategory::kSampleUnavailable, what) {}
};

// ---------------------------------------------------------------------------
// Dense channel-first 3-D tensor (channels x rows x cols).
// ---------------------------------------------------------------------------

struct Tensor3 {
  std::size_t channels = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), rows(h), cols(w), data(c * h * w, fill) {}

  double& operator()(std::size_t c, std::size_t i, std::size_t j) {
    return data[(c * rows + i) * cols + j];
  }
  double operator()(std::size_t c, std::size_t i, std::size_t j) const {
    return data[(c * rows + i) * cols + j];
  }
  std::span<double> channel(std::size_t c) {
    return {data.data() + c * rows * cols, rows * cols};
  }
  std::span<const double> channel(std::size_t c) const {
    return {data.data() + c * rows * cols, rows * cols};
  }
  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Tensor3& other) const {
    return channels == other.channels && rows == other.rows && cols == other.cols;
  }
  std::string shape_string() const;
};

// 64-bit FNV-1a, used for data and statistics fingerprints.
class Fingerprint {
 public:
  void update(const void* bytes, std::size_t n);
  void update(std::string_view s) { update(s.data(), s.size()); }
  template <typename T>
  void update_values(std::span<const T> values) {
    update(values.data(), values.size_bytes());
  }
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

bool AllFinite(const Mat& m);

}  // namespace televit

#endif  // TELEVIT_COMMON_HPP_
