#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "optitomo/inversion.hpp"
#include "optitomo/synth.hpp"

namespace optitomo::app {

/// Flat key/value view of an INI file ("section.key" -> value). Unknown
/// sections or keys are rejected with InvalidInput.
class ConfigStore {
 public:
  static ConfigStore from_file(const std::string& path);
  static ConfigStore from_string(const std::string& text);

  /// "section.key=value"; the key must be known.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const { return values_.at(key); }
  const std::map<std::string, std::string>& values() const { return values_; }

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

struct LipschitzSettings {
  int elements = 1016;
  double omega_radius = 0.5;
  int cells = 8;
  double a = 1.0;
  double b = 2.0;
  double sigma_out = 1.0;
  double sigma_in = 2.0;
  int max_iter = 200;
  double certificate_target = 1.1;
  int samples = 50;
};

struct RunConfig {
  std::string experiment = "custom";
  std::uint64_t seed = 1;
  int elements = 1016;
  int refinements = 0;
  std::string forward_flux = "cos:1";
  ExperimentSpec spec;
  InversionConfig inversion;  // initial fields are left empty until the mesh exists
  bool balance = false;
  LipschitzSettings lipschitz;
};

/// Typed configuration. `preset` ("example1", "example2" or empty) selects the
/// defaults; experiment.name in the store overrides it.
RunConfig resolve(const ConfigStore& store, const std::string& preset);

}  // namespace optitomo::app
