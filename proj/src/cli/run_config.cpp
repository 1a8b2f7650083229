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

#include "bilctc/cli/run_config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bilctc/version.hpp"

namespace bilctc::cli {
namespace {

const char* const kSections[] = {"data", "split", "model", "train", "decode"};

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void BadValue(const std::string& key, const std::string& value, const char* type) {
  Fail(ErrorKind::kConfiguration, "value '" + value + "' for " + key + " is not " + type);
}

nlohmann::json ParseLike(const nlohmann::json& like, const std::string& key,
                         const std::string& value) {
  if (like.is_boolean()) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    BadValue(key, value, "a boolean");
  }
  if (like.is_number_integer() || like.is_number_unsigned()) {
    size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(value, &used);
    } catch (const std::exception&) {
      BadValue(key, value, "an integer");
    }
    if (used != value.size()) BadValue(key, value, "an integer");
    if (like.is_number_unsigned()) {
      if (v < 0) BadValue(key, value, "a non-negative integer");
      return static_cast<uint64_t>(v);
    }
    return v;
  }
  if (like.is_number_float()) {
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      BadValue(key, value, "a number");
    }
    if (used != value.size()) BadValue(key, value, "a number");
    return v;
  }
  return value;
}

template <typename T>
T View(const nlohmann::json& tree, const char* section) {
  try {
    return tree.at(section).get<T>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kConfiguration, std::string("section ") + section + ": " + e.what());
  }
}

}  // namespace

RunConfig::RunConfig() {
  SplitSizes sizes;
  tree_["data"] = data::SyntheticTaskSpec{};
  tree_["split"] = {{"train", sizes.train}, {"dev", sizes.dev}, {"test", sizes.test}};
  tree_["model"] = model::ModelSpec{};
  tree_["train"] = train::TrainConfig{};
  tree_["decode"] = decode::DecodeConfig{};
}

void RunConfig::Set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = Trim(raw_key), value = Trim(raw_value);
  const auto dot = key.find('.');
  if (dot == std::string::npos) {
    Fail(ErrorKind::kConfiguration, "config key '" + key + "' must look like section.name");
  }
  const std::string section = key.substr(0, dot), name = key.substr(dot + 1);
  if (!tree_.contains(section) || !tree_[section].contains(name)) {
    Fail(ErrorKind::kConfiguration, "unknown config key '" + key + "'");
  }
  tree_[section][name] = ParseLike(tree_[section][name], key, value);
}

void RunConfig::SetAssignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    Fail(ErrorKind::kUsage, "expected key=value, got '" + assignment + "'");
  }
  Set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void RunConfig::LoadFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open config " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (Trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorKind::kConfiguration, path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      Set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      Fail(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

data::SyntheticTaskSpec RunConfig::Data() const {
  return View<data::SyntheticTaskSpec>(tree_, "data");
}

SplitSizes RunConfig::Splits() const {
  SplitSizes s;
  s.train = tree_["split"]["train"].get<int>();
  s.dev = tree_["split"]["dev"].get<int>();
  s.test = tree_["split"]["test"].get<int>();
  return s;
}

model::ModelSpec RunConfig::Model() const { return View<model::ModelSpec>(tree_, "model"); }
train::TrainConfig RunConfig::Train() const { return View<train::TrainConfig>(tree_, "train"); }
decode::DecodeConfig RunConfig::Decode() const {
  return View<decode::DecodeConfig>(tree_, "decode");
}

void RunConfig::Validate() const {
  Data().Validate();
  const auto sizes = Splits();
  if (sizes.train < 0 || sizes.dev < 0 || sizes.test < 0) {
    Fail(ErrorKind::kConfiguration, "split sizes must be non-negative");
  }
  Model().Validate();
  Train().Validate();
  Decode().Validate();
}

std::string RunConfig::ToText() const {
  std::ostringstream os;
  for (const char* section : kSections) {
    os << "# " << section << "\n";
    for (const auto& [name, value] : tree_.at(section).items()) {
      os << section << "." << name << " = "
         << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
    }
  }
  return os.str();
}

void RunConfig::WriteResolved(const std::string& dir, const std::string& command) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "resolved.conf", std::ios::trunc);
    if (!os) Fail(ErrorKind::kIo, "cannot write into " + dir);
    os << "# bilctc " << kVersion << " " << command << "\n" << ToText();
  }
  std::ofstream os(fs::path(dir) / "version.json", std::ios::trunc);
  os << nlohmann::json{{"tool", "bilctc"}, {"version", kVersion}, {"command", command}}.dump(2)
     << "\n";
}

}  // namespace bilctc::cli
