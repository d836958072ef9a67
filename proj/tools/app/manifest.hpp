#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace optitomo::app {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// One manifest per run: command, configuration, seed, versions, digests of
/// inputs and outputs, wall time and command-specific results.
class RunManifest {
 public:
  RunManifest(std::string command, std::filesystem::path out_dir);

  void set_config(const std::string& path) { config_path_ = path; }
  void set_seed(unsigned long long seed) { seed_ = seed; }
  void add_input(const std::filesystem::path& path) { inputs_.push_back(path); }
  /// Registers a file written into the output directory.
  void add_output(const std::filesystem::path& path) { outputs_.push_back(path); }
  nlohmann::json& results() { return results_; }

  /// Writes manifest.json into the output directory.
  void write(double wall_seconds) const;

 private:
  std::string command_;
  std::filesystem::path out_dir_;
  std::string config_path_;
  unsigned long long seed_ = 0;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  nlohmann::json results_ = nlohmann::json::object();
};

}  // namespace optitomo::app
