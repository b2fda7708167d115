#pragma once

// Internal units are SI (Hz, s, T, K, W). Conversions happen at the
// configuration boundary only.

#include <numbers>

namespace divtherm::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double MHz = 1e6;
inline constexpr double kHz = 1e3;
inline constexpr double GHz = 1e9;
inline constexpr double us = 1e-6;
inline constexpr double gauss = 1e-4;
inline constexpr double milligauss = 1e-7;
inline constexpr double mW = 1e-3;
inline constexpr double Mcps = 1e6;

/// g * mu_B / h with g = 2, in Hz/T (2.8024 MHz/G).
inline constexpr double kElectronGyro = 28.024e9;

}  // namespace divtherm::units
