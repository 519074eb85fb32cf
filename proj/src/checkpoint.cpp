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

#include "televit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace televit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'T', 'V', 'C', 'K', 'P', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

}  // namespace

const Mat* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return &m;
  }
  return nullptr;
}

Checkpoint CaptureCheckpoint(TeleViT& model) {
  Checkpoint ck;
  for (auto& [name, p] : model.parameters()) ck.tensors.emplace_back(name, p->value);
  ck.config["model"] = model.config().to_json();
  return ck;
}

void RestoreParameters(TeleViT& model, const Checkpoint& checkpoint) {
  for (auto& [name, p] : model.parameters()) {
    const Mat* m = checkpoint.find(name);
    if (!m) throw ContractViolation("checkpoint lacks tensor '" + name + "'");
    if (m->rows() != p->value.rows() || m->cols() != p->value.cols()) {
      throw ContractViolation("checkpoint tensor '" + name + "' has the wrong shape");
    }
    p->value = *m;
  }
}

TeleViT ModelFromCheckpoint(const Checkpoint& checkpoint) {
  if (!checkpoint.config.contains("model")) {
    throw ContractViolation("checkpoint carries no model configuration");
  }
  TeleViT model(ModelConfig::FromJson(checkpoint.config["model"]), 0);
  RestoreParameters(model, checkpoint);
  return model;
}

void SaveCheckpoint(const Checkpoint& checkpoint, const fs::path& path) {
  json header;
  header["format_version"] = 1;
  header["epoch"] = checkpoint.epoch;
  header["val_loss"] = checkpoint.val_loss;
  header["data_fingerprint"] = checkpoint.data_fingerprint;
  header["stats_fingerprint"] = checkpoint.stats_fingerprint;
  header["config"] = checkpoint.config;
  header["metadata"] = checkpoint.metadata;
  header["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : checkpoint.tensors) {
    header["tensors"].push_back(
        {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
  }
  const std::string text = header.dump();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    const std::uint64_t len = text.size();
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, m] : checkpoint.tensors) {
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
    if (!out) throw IoError("short write to checkpoint " + path.string());
  }
  fs::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path.string() + " is not a checkpoint file");
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("truncated checkpoint header in " + path.string());
  Checkpoint ck;
  json header;
  try {
    header = json::parse(text);
    ck.epoch = header.at("epoch");
    ck.val_loss = header.at("val_loss").is_null() ? 0.0 : header.at("val_loss").get<double>();
    ck.data_fingerprint = header.at("data_fingerprint");
    ck.stats_fingerprint = header.at("stats_fingerprint");
    ck.config = header.at("config");
    ck.metadata = header.at("metadata");
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  const auto payload_start = in.tellg();
  for (const auto& t : header["tensors"]) {
    const Eigen::Index rows = t.at("rows"), cols = t.at("cols");
    const std::uint64_t offset = t.at("offset");
    Mat m(rows, cols);
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw IoError("truncated checkpoint payload in " + path.string());
    ck.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
  }
  return ck;
}

json StatsToJson(const NormalizationStats& s) {
  return {{"local_mean", s.local_mean},   {"local_std", s.local_std},
          {"global_mean", s.global_mean}, {"global_std", s.global_std},
          {"index_mean", s.index_mean},   {"index_std", s.index_std}};
}

NormalizationStats StatsFromJson(const json& j) {
  try {
    NormalizationStats s;
    s.local_mean = j.at("local_mean").get<std::vector<double>>();
    s.local_std = j.at("local_std").get<std::vector<double>>();
    s.global_mean = j.at("global_mean").get<std::vector<double>>();
    s.global_std = j.at("global_std").get<std::vector<double>>();
    s.index_mean = j.at("index_mean").get<std::vector<double>>();
    s.index_std = j.at("index_std").get<std::vector<double>>();
    return s;
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("malformed normalization statistics: ") + e.what());
  }
}

}  // namespace televit
