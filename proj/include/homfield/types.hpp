#pragma once

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>

namespace homfield {

using cdouble = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
/// Complex 3x3 dyad (row = field component, column = source component).
using Dyad = Eigen::Matrix3cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cdouble kI{0.0, 1.0};

namespace constants {
inline constexpr double c0 = 299792458.0;          ///< speed of light [m/s]
inline constexpr double mu0 = 1.25663706212e-6;    ///< vacuum permeability [H/m]
inline constexpr double eps0 = 1.0 / (mu0 * c0 * c0); ///< vacuum permittivity [F/m]
} // namespace constants

inline double wavenumber_from_omega(double omega) { return omega / constants::c0; }
inline double omega_from_frequency(double hz) { return 2.0 * kPi * hz; }

using Index3 = std::array<int, 3>;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

} // namespace homfield
