#pragma once

#include <numbers>

namespace hybridsense {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Boltzmann constant (J/K), exact SI value.
inline constexpr double kBoltzmann = 1.380649e-23;

/// Rb-87 D2 line vacuum wavelength (m).
inline constexpr double kRb87D2Wavelength = 780.24e-9;

/// Effective wave number of counter-propagating two-photon Raman beams.
constexpr double raman_k_eff(double wavelength) { return 4.0 * kPi / wavelength; }

inline constexpr double kStandardGravity = 9.80665;

} // namespace hybridsense
