#include "divtherm/app/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "divtherm/errors.hpp"
#include "divtherm/units.hpp"

namespace divtherm::app {

using nlohmann::json;

namespace {

constexpr const char* kDefaults = R"json({
  "seed": 1,
  "spin": {
    "d_ref_mhz": 1350.6,
    "t_ref_k": 299.1,
    "d_slope_khz_per_k": -99.7,
    "gyro_mhz_per_g": 2.8024,
    "b_field_g": 32.1,
    "validity_k": [250.0, 350.0]
  },
  "microwave": {
    "detuning_mhz": 2.5
  },
  "environment": {
    "temperature_k": 299.1,
    "field_offset_mg": 0.0
  },
  "noise": {
    "static_enabled": true,
    "sigma_static_mg": 50.1,
    "ou_enabled": true,
    "sigma_ou_mg": 20.4,
    "tau_c_us": 3.0,
    "trajectories": 400,
    "dt_us": 0.0
  },
  "readout": {
    "i_sat_mcps": 458.0,
    "p_sat_mw": 182.0,
    "laser_power_mw": 170.0,
    "shot_window_us": 3.0,
    "contrast": 0.01,
    "shots": 20000,
    "mode": "lockin",
    "shot_noise": true
  },
  "saturation": {
    "power_mw": {"start": 5.0, "stop": 400.0, "step": 5.0},
    "integration_ms": 1.0
  },
  "odmr": {
    "temperature_k": 299.1,
    "frequency_mhz": {"start": 1240.0, "stop": 1460.0, "step": 0.5},
    "linewidth_mhz": 4.0,
    "contrast": 0.02,
    "shots": 100000
  },
  "dvst": {
    "temperatures_k": [280.0, 285.0, 290.0, 295.0, 300.0, 305.0, 310.0, 315.0, 320.0]
  },
  "coherence": {
    "family": "tcpmg",
    "n": [1, 2, 3, 4, 5],
    "time_us": {"start": 0.0, "stop": 48.0, "step": 0.08},
    "reference_td_us": [[1, 9.1], [2, 12.1], [5, 21.0]]
  },
  "sensitivity": {
    "n": 5,
    "repeats": 200,
    "temperature_step_k": 0.05
  },
  "monitor": {
    "profile": "",
    "synthetic": {"hours": 24.0, "rows": 25, "mean_k": 299.1, "amplitude_k": 1.0},
    "n": 1,
    "time_us": {"start": 0.0, "stop": 24.0, "step": 0.08},
    "calibration": "",
    "valid_range_k": [280.0, 320.0]
  }
})json";

void merge(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object() && it.value().is_object()) {
      merge(slot, it.value(), key);
    } else if (slot.is_object() && !slot.contains("start")) {
      throw ConfigError(key + ": expected an object");
    } else {
      slot = it.value();  // scalars, arrays, and grids given as arrays
    }
  }
}

// Typed access with the key path in every message.
class Reader {
 public:
  explicit Reader(const json& root) : root_(root) {}

  const json& node(const std::string& path) const {
    const json* j = &root_;
    std::size_t pos = 0;
    while (pos <= path.size()) {
      const std::size_t dot = path.find('.', pos);
      const std::string part = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
      if (!j->is_object() || !j->contains(part)) throw ConfigError("missing key '" + path + "'");
      j = &(*j)[part];
      if (dot == std::string::npos) break;
      pos = dot + 1;
    }
    return *j;
  }

  double number(const std::string& path) const {
    const json& j = node(path);
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path + ": must be finite");
    return v;
  }

  double positive(const std::string& path) const {
    const double v = number(path);
    if (!(v > 0.0)) throw ConfigError(path + ": must be positive");
    return v;
  }

  long long integer(const std::string& path) const {
    const json& j = node(path);
    if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return j.get<long long>();
  }

  int count(const std::string& path, long long min) const {
    const long long v = integer(path);
    if (v < min || v > 1'000'000'000)
      throw ConfigError(path + ": must be in [" + std::to_string(min) + ", 1e9]");
    return static_cast<int>(v);
  }

  bool boolean(const std::string& path) const {
    const json& j = node(path);
    if (!j.is_boolean()) throw ConfigError(path + ": expected true or false");
    return j.get<bool>();
  }

  std::string string(const std::string& path) const {
    const json& j = node(path);
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
  }

  std::vector<double> numbers(const std::string& path, double unit) const {
    const json& j = node(path);
    if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError(path + ": expected an array of numbers");
      out.push_back(v.get<double>() * unit);
    }
    return out;
  }

  std::vector<double> grid(const std::string& path, double unit) const {
    const json& j = node(path);
    std::vector<double> out;
    if (j.is_array()) {
      out = numbers(path, unit);
    } else if (j.is_object()) {
      const double start = number(path + ".start");
      const double stop = number(path + ".stop");
      const double step = number(path + ".step");
      if (j.size() != 3) throw ConfigError(path + ": grid takes exactly start, stop and step");
      if (!(step > 0.0)) throw ConfigError(path + ".step: must be positive");
      if (stop < start) throw ConfigError(path + ": stop is below start");
      const double span = (stop - start) / step;
      if (span > 1e7) throw ConfigError(path + ": too many grid points");
      const long long n = static_cast<long long>(std::floor(span + 1e-6)) + 1;
      for (long long i = 0; i < n; ++i) out.push_back((start + static_cast<double>(i) * step) * unit);
    } else {
      throw ConfigError(path + ": expected {start, stop, step} or an array");
    }
    if (out.empty()) throw ConfigError(path + ": grid is empty");
    for (std::size_t i = 1; i < out.size(); ++i)
      if (!(out[i] > out[i - 1])) throw ConfigError(path + ": grid must be strictly increasing");
    for (double v : out)
      if (!std::isfinite(v)) throw ConfigError(path + ": non-finite grid value");
    return out;
  }

  std::pair<double, double> range(const std::string& path) const {
    const auto v = numbers(path, 1.0);
    if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError(path + ": expected [low, high] with low < high");
    return {v[0], v[1]};
  }

 private:
  const json& root_;
};

template <class F>
void checked(const std::string& section, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(section + ": " + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

RunConfig parse(const json& doc) {
  const Reader r(doc);
  RunConfig c;
  c.resolved = doc;

  const json& seed = r.node("seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    throw ConfigError("seed: expected a non-negative integer");
  c.seed = seed.get<std::uint64_t>();

  SpinParameters& s = c.spin;
  s.d_ref = r.positive("spin.d_ref_mhz") * units::MHz;
  s.t_ref = r.positive("spin.t_ref_k");
  s.d_slope = r.number("spin.d_slope_khz_per_k") * units::kHz;
  s.gyro = r.positive("spin.gyro_mhz_per_g") * units::MHz / units::gauss;
  s.b_field = r.number("spin.b_field_g") * units::gauss;
  const auto [lo, hi] = r.range("spin.validity_k");
  s.validity = {lo, hi};
  checked("spin", [&] { s.validate(); });
  if (s.t_ref < lo || s.t_ref > hi) throw ConfigError("spin.t_ref_k: outside spin.validity_k");

  c.microwave_detuning = r.number("microwave.detuning_mhz") * units::MHz;
  c.temperature = r.positive("environment.temperature_k");
  if (c.temperature < lo || c.temperature > hi)
    throw ConfigError("environment.temperature_k: outside spin.validity_k");
  c.field_offset = r.number("environment.field_offset_mg") * units::milligauss;

  NoiseModel& n = c.noise;
  n.static_enabled = r.boolean("noise.static_enabled");
  n.sigma_static = r.number("noise.sigma_static_mg") * units::milligauss;
  n.ou_enabled = r.boolean("noise.ou_enabled");
  n.sigma_ou = r.number("noise.sigma_ou_mg") * units::milligauss;
  n.tau_c = r.number("noise.tau_c_us") * units::us;
  n.trajectories = r.count("noise.trajectories", 1);
  n.dt = r.number("noise.dt_us") * units::us;
  checked("noise", [&] { n.validate(); });

  ReadoutModel& ro = c.readout;
  ro.i_sat = r.number("readout.i_sat_mcps") * units::Mcps;
  ro.p_sat = r.number("readout.p_sat_mw") * units::mW;
  ro.laser_power = r.number("readout.laser_power_mw") * units::mW;
  ro.shot_window = r.number("readout.shot_window_us") * units::us;
  ro.contrast = r.number("readout.contrast");
  ro.shots = r.count("readout.shots", 1);
  ro.shot_noise = r.boolean("readout.shot_noise");
  checked("readout.mode", [&] { ro.mode = readout_mode_from_string(r.string("readout.mode")); });
  checked("readout", [&] { ro.validate(); });

  c.saturation.powers = r.grid("saturation.power_mw", units::mW);
  if (c.saturation.powers.front() < 0.0) throw ConfigError("saturation.power_mw: powers must be >= 0");
  c.saturation.integration = r.positive("saturation.integration_ms") * 1e-3;

  OdmrSection& o = c.odmr;
  o.temperature = r.positive("odmr.temperature_k");
  if (o.temperature < lo || o.temperature > hi)
    throw ConfigError("odmr.temperature_k: outside spin.validity_k");
  o.frequencies = r.grid("odmr.frequency_mhz", units::MHz);
  if (o.frequencies.size() < 8) throw ConfigError("odmr.frequency_mhz: need at least 8 points");
  o.linewidth = r.positive("odmr.linewidth_mhz") * units::MHz;
  o.contrast = r.number("odmr.contrast");
  if (!(o.contrast > 0.0 && o.contrast < 1.0)) throw ConfigError("odmr.contrast: must be in (0, 1)");
  o.shots = r.count("odmr.shots", 1);

  c.dvst.temperatures = r.numbers("dvst.temperatures_k", 1.0);
  if (c.dvst.temperatures.size() < 3)
    throw ConfigError("dvst.temperatures_k: a calibration needs at least 3 temperatures");
  for (double t : c.dvst.temperatures)
    if (t < lo || t > hi) throw ConfigError("dvst.temperatures_k: outside spin.validity_k");

  CoherenceSection& co = c.coherence;
  co.family = r.string("coherence.family");
  checked("coherence.family", [&] { make_family(co.family, 1); });
  for (const auto& v : r.node("coherence.n")) {
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1000)
      throw ConfigError("coherence.n: expected integers in [1, 1000]");
    co.n.push_back(v.get<int>());
  }
  if (co.n.empty()) throw ConfigError("coherence.n: empty list");
  co.times = r.grid("coherence.time_us", units::us);
  if (co.times.front() < 0.0) throw ConfigError("coherence.time_us: times must be >= 0");
  for (const auto& v : r.node("coherence.reference_td_us")) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number())
      throw ConfigError("coherence.reference_td_us: expected [[n, td_us], ...]");
    co.reference_td.emplace_back(v[0].get<int>(), v[1].get<double>() * units::us);
  }

  c.sensitivity.n = r.count("sensitivity.n", 1);
  c.sensitivity.repeats = r.count("sensitivity.repeats", 2);
  c.sensitivity.temperature_step = r.positive("sensitivity.temperature_step_k");

  MonitorSection& m = c.monitor;
  m.profile_path = r.string("monitor.profile");
  m.synthetic.hours = r.positive("monitor.synthetic.hours");
  m.synthetic.rows = r.count("monitor.synthetic.rows", 1);
  m.synthetic.mean = r.positive("monitor.synthetic.mean_k");
  m.synthetic.amplitude = r.number("monitor.synthetic.amplitude_k");
  m.n = r.count("monitor.n", 1);
  m.times = r.grid("monitor.time_us", units::us);
  if (m.times.front() < 0.0) throw ConfigError("monitor.time_us: times must be >= 0");
  m.calibration_path = r.string("monitor.calibration");
  const auto [vlo, vhi] = r.range("monitor.valid_range_k");
  m.valid_range = {vlo, vhi};
  return c;
}

}  // namespace

SimulationSetup RunConfig::setup_at(double temp) const {
  SimulationSetup s;
  s.spin = spin;
  s.mw = drive_with_detuning(spin, microwave_detuning);
  s.env = environment_at(spin, temp, field_offset);
  s.noise = noise;
  s.readout = readout;
  return s;
}

OdmrSettings RunConfig::odmr_settings() const {
  OdmrSettings o;
  o.linewidth = odmr.linewidth;
  o.contrast = odmr.contrast;
  o.freq_grid = odmr.frequencies;
  o.shots = odmr.shots;
  return o;
}

const json& default_config() {
  static const json doc = json::parse(kDefaults);
  return doc;
}

RunConfig load_config(const json& user) {
  json doc = default_config();
  if (!user.is_null()) merge(doc, user, "");
  return parse(doc);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  json user;
  try {
    user = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return load_config(user);
}

RunConfig apply_overrides(const RunConfig& cfg, const Overrides& o) {
  json doc = cfg.resolved;
  if (o.seed) doc["seed"] = *o.seed;
  if (o.no_noise) {
    doc["noise"]["static_enabled"] = false;
    doc["noise"]["ou_enabled"] = false;
    doc["readout"]["shot_noise"] = false;
  }
  if (o.shots) {
    doc["readout"]["shots"] = *o.shots;
    doc["odmr"]["shots"] = *o.shots;
  }
  if (o.profile) doc["monitor"]["profile"] = *o.profile;
  return parse(doc);
}

std::string config_hash(const RunConfig& cfg) {
  const std::string text = cfg.resolved.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

}  // namespace divtherm::app
