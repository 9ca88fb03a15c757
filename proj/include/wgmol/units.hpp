#pragma once

#include <numbers>

namespace wgmol {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Everything internal is angular (rad/s). I/O is cyclic, i.e. value/2π in Hz.
constexpr double from_hz(double hz) { return two_pi * hz; }
constexpr double to_hz(double angular) { return angular / two_pi; }

constexpr double from_mhz(double mhz) { return from_hz(mhz * 1e6); }
constexpr double from_ghz(double ghz) { return from_hz(ghz * 1e9); }
constexpr double to_mhz(double angular) { return to_hz(angular) * 1e-6; }
constexpr double to_ghz(double angular) { return to_hz(angular) * 1e-9; }

}  // namespace wgmol
