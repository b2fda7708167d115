#pragma once

// Run configuration. One JSON document; units are part of each key name
// (mhz, us, g, mg, mw, k) and converted to SI here. A user file is merged over
// the built-in defaults; keys that do not exist in the defaults are rejected.
// Grids are either {"start", "stop", "step"} or an explicit increasing array.

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "divtherm/analysis.hpp"
#include "divtherm/noise.hpp"
#include "divtherm/simulator.hpp"
#include "divtherm/spin_model.hpp"

namespace divtherm::app {

struct SaturationSection {
  std::vector<double> powers;  // W
  double integration = 1e-3;   // s of counting per power point
};

struct OdmrSection {
  double temperature = 299.1;  // K
  std::vector<double> frequencies;  // Hz
  double linewidth = 4e6;      // Hz, HWHM
  double contrast = 0.02;
  int shots = 100000;
};

struct DvstSection {
  std::vector<double> temperatures;  // K
};

struct CoherenceSection {
  std::string family = "tcpmg";
  std::vector<int> n;
  std::vector<double> times;  // s
  std::vector<std::pair<int, double>> reference_td;  // (n, s)
};

struct SensitivitySection {
  int n = 5;
  int repeats = 200;
  double temperature_step = 0.05;  // K, finite-difference half step
};

struct SyntheticProfile {
  double hours = 24.0;
  int rows = 25;
  double mean = 299.1;      // K
  double amplitude = 1.0;   // K
};

struct MonitorSection {
  std::string profile_path;  // empty: synthetic profile
  SyntheticProfile synthetic;
  int n = 1;
  std::vector<double> times;  // s
  std::string calibration_path;  // empty: calibration from the spin section
  TemperatureWindow valid_range{280.0, 320.0};
};

struct RunConfig {
  std::uint64_t seed = 0;
  SpinParameters spin;
  double microwave_detuning = 0.0;  // Hz, drives above the transitions
  double temperature = 0.0;         // K
  double field_offset = 0.0;        // T
  NoiseModel noise;
  ReadoutModel readout;
  SaturationSection saturation;
  OdmrSection odmr;
  DvstSection dvst;
  CoherenceSection coherence;
  SensitivitySection sensitivity;
  MonitorSection monitor;

  /// Fully resolved document (defaults + user values + overrides).
  nlohmann::json resolved;

  SimulationSetup setup_at(double temperature) const;
  OdmrSettings odmr_settings() const;
};

/// The built-in defaults as a JSON document.
const nlohmann::json& default_config();

/// Merges `user` over the defaults and parses the result. Throws ConfigError
/// naming the offending key path.
RunConfig load_config(const nlohmann::json& user);
/// Reads a JSON file (IoError if unreadable, ConfigError if malformed).
RunConfig load_config_file(const std::string& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  bool no_noise = false;
  std::optional<int> shots;
  std::optional<std::string> profile;
};

/// Applies CLI overrides through the JSON document so they show up in the
/// resolved config and its hash.
RunConfig apply_overrides(const RunConfig& cfg, const Overrides& o);

/// "fnv1a64:<16 hex digits>" over the compact dump of cfg.resolved.
std::string config_hash(const RunConfig& cfg);

}  // namespace divtherm::app
