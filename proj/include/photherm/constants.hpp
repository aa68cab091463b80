#pragma once

// CODATA 2018 exact / recommended values.
namespace photherm::constants {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double planck = 6.62607015e-34;      // J s (exact)
inline constexpr double k_boltzmann = 1.380649e-23;   // J/K (exact)
inline constexpr double speed_of_light = 299792458.0; // m/s (exact)
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg

}  // namespace photherm::constants
