#pragma once

// Pulse-sequence IR shared by the generators, the simulator and the analytic
// phase oracle. Pulses are instantaneous; only delays take time.

#include <functional>
#include <json.hpp>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "divtherm/spin_model.hpp"

namespace divtherm {

struct Pulse {
  Transition transition;
  double angle;  // rad
  double phase;  // rad
};

struct Delay {
  double duration;  // s
};

using PulseElement = std::variant<Pulse, Delay>;

enum class ReadoutBasis { population_0 };

struct SequenceLabel {
  std::string family;
  int n = 0;          // swap blocks (tcpmg), 0 otherwise
  double tau = 0.0;   // s, the generator's time argument
};

struct PulseSequence {
  std::vector<PulseElement> elements;
  ReadoutBasis readout_basis = ReadoutBasis::population_0;
  SequenceLabel label;

  double total_delay() const;
  int swap_count() const;
};

/// Default phase of the closing pi/2: undoes the opening pulse, so zero
/// accumulated phase reads out P0 = 1.
inline constexpr double kDefaultReadoutPhase = std::numbers::pi;

PulseSequence make_ramsey(Transition transition, double tau, double detuning_phase);
PulseSequence make_thermal_ramsey(double tau, double readout_phase = kDefaultReadoutPhase);
PulseSequence make_thermal_echo(double tau, double readout_phase = kDefaultReadoutPhase);
PulseSequence make_tcpmg(int n, double total_time, double readout_phase = kDefaultReadoutPhase);

/// Generator over total free-evolution time x, used by time sweeps.
struct SequenceFamily {
  std::string name;
  int n = 0;
  std::function<PulseSequence(double)> make;
};

inline const std::vector<std::string> kFamilyNames{"ramsey", "thermal-ramsey", "thermal-echo",
                                                   "tcpmg"};

/// "ramsey" (minus transition, x = tau), "thermal-ramsey" (x = 2 tau),
/// "thermal-echo" (x = 2 tau) or "tcpmg" (x = total time, n blocks).
/// Throws std::invalid_argument naming the valid families.
SequenceFamily make_family(const std::string& name, int n = 1,
                           double readout_phase = kDefaultReadoutPhase);

/// Total relative phase between |0> and the level read out, defined so that
/// ideal-pulse, noiseless evolution gives P0 = (1 + cos(phase)) / 2.
/// Equals 2 pi sum(Delta_b * tau_seg) over delays (b the occupied branch, with
/// conjugation by in-branch pi pulses) plus (readout_phase - pi) plus any
/// constant phases picked up from non-zero pulse phases.
/// Throws UnsupportedSequence for pulse angles other than pi/2 (first/last) and pi.
double analytic_phase(const PulseSequence& seq, double delta_d, double delta_b_static,
                      double gyro, double drive_offset_minus = 0.0,
                      double drive_offset_plus = 0.0);

class UnsupportedSequence : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

nlohmann::json to_json(const PulseSequence& seq);

}  // namespace divtherm
