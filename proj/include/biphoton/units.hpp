#ifndef BIPHOTON_UNITS_HPP
#define BIPHOTON_UNITS_HPP

// Everything inside the library is SI (m, rad/m). These helpers convert at
// the presentation boundary (config files, CSV columns).

#include <numbers>

namespace biphoton::units {

inline constexpr double pi = std::numbers::pi;

constexpr double from_mm(double v) { return v * 1e-3; }
constexpr double from_um(double v) { return v * 1e-6; }
constexpr double from_nm(double v) { return v * 1e-9; }
constexpr double from_rad_per_mm(double v) { return v * 1e3; }

constexpr double to_mm(double m) { return m * 1e3; }
constexpr double to_um(double m) { return m * 1e6; }
constexpr double to_nm(double m) { return m * 1e9; }
constexpr double to_rad_per_mm(double k) { return k * 1e-3; }

}  // namespace biphoton::units

#endif  // BIPHOTON_UNITS_HPP
