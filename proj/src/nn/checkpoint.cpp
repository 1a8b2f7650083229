/* Copyright 2026 The BiL-CTC Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "bilctc/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace bilctc::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void WritePod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ReadPod(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    Fail(ErrorKind::kIo, path + ": truncated checkpoint header");
  }
  return v;
}

}  // namespace

void SaveCheckpoint(const std::string& path, const ParameterStore<float>& params,
                    const nlohmann::json& metadata) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["step"] = params.step;
  header["metadata"] = metadata;
  header["tensors"] = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& p : params.params()) {
    header["tensors"].push_back({{"name", p.name},
                                 {"rows", p.value.rows()},
                                 {"cols", p.value.cols()},
                                 {"offset", offset}});
    offset += uint64_t(p.value.size()) * sizeof(float);
  }
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) Fail(ErrorKind::kIo, "cannot write checkpoint " + path);
  os.write(kCheckpointMagic, 8);
  WritePod<uint32_t>(os, kCheckpointVersion);
  WritePod<uint64_t>(os, text.size());
  os.write(text.data(), std::streamsize(text.size()));
  for (const auto& p : params.params()) {
    os.write(reinterpret_cast<const char*>(p.value.data()),
             std::streamsize(p.value.size() * sizeof(float)));
  }
  if (!os) Fail(ErrorKind::kIo, "failed writing checkpoint " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kIo, "cannot open checkpoint " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    Fail(ErrorKind::kIo, path + ": not a checkpoint file");
  }
  const auto version = ReadPod<uint32_t>(is, path);
  if (version != kCheckpointVersion) {
    Fail(ErrorKind::kIo, path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = ReadPod<uint64_t>(is, path);
  std::string text(header_len, '\0');
  if (!is.read(text.data(), std::streamsize(header_len))) {
    Fail(ErrorKind::kIo, path + ": truncated checkpoint header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kIo, path + ": corrupt checkpoint header: " + e.what());
  }
  const auto payload_start = is.tellg();
  Checkpoint ckpt;
  ckpt.metadata = header.value("metadata", nlohmann::json::object());
  for (const auto& t : header.at("tensors")) {
    MatrixF m(t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>());
    is.seekg(payload_start + std::streamoff(t.at("offset").get<uint64_t>()));
    if (!is.read(reinterpret_cast<char*>(m.data()), std::streamsize(m.size() * sizeof(float)))) {
      Fail(ErrorKind::kIo, path + ": truncated tensor " + t.at("name").get<std::string>());
    }
    ckpt.params.Add(t.at("name").get<std::string>(), std::move(m));
  }
  ckpt.params.step = header.value("step", int64_t{0});
  return ckpt;
}

}  // namespace bilctc::nn
