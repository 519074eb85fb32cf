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

#include "televit/common.hpp"

#include <cstdio>

namespace televit {

std::string_view CategoryName(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfig:
      return "config";
    case ErrorCategory::kInputDomain:
      return "input-domain";
    case ErrorCategory::kContract:
      return "contract";
    case ErrorCategory::kNumeric:
      return "numeric";
    case ErrorCategory::kIo:
      return "io";
    case ErrorCategory::kUndefinedMetric:
      return "undefined-metric";
    case ErrorCategory::kSampleUnavailable:
      return "sample-unavailable";
  }
  return "unknown";
}

std::string Tensor3::shape_string() const {
  return "(" + std::to_string(channels) + "," + std::to_string(rows) + "," +
         std::to_string(cols) + ")";
}

void Fingerprint::update(const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    state_ ^= p[i];
    state_ *= 0x100000001b3ULL;
  }
}

std::string Fingerprint::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

bool AllFinite(const Mat& m) { return m.allFinite(); }

}  // namespace televit
