#pragma once

#include "homfield/scene.hpp"
#include "homfield/types.hpp"
#include "homfield/vie_solver.hpp"

#include <span>
#include <string>
#include <vector>

namespace homfield {

/// Far-field observation direction in radians (theta from +z, phi from +x).
struct Direction {
  double theta = 0.0;
  double phi = 0.0;
};

/// Maps a possibly negative polar angle (in-plane scan convention) onto theta in [0, pi],
/// phi in [0, 2 pi). Inputs in radians.
Direction normalized_direction(double theta, double phi);

Vec3 radial_unit(const Direction &d);
/// Polar and azimuthal unit vectors. At the poles (sin theta = 0) the phi = 0 frame is used.
Vec3 theta_unit(const Direction &d);
Vec3 phi_unit(const Direction &d);

enum class PolarizationKind { linear_z, theta, phi, circular_L, circular_R, explicit_vector };

/// Detector polarization. An explicit vector (e_theta, e_phi) is applied as the conjugated
/// inner product conj(e_theta) E_theta + conj(e_phi) E_phi.
struct PolarizationSelector {
  PolarizationKind kind = PolarizationKind::linear_z;
  cdouble e_theta{1.0, 0.0};
  cdouble e_phi{0.0, 0.0};

  static PolarizationSelector of(PolarizationKind k) { return {k, {1.0, 0.0}, {0.0, 0.0}}; }
  /// Throws InvalidArgumentError unless |e| = 1 to 1e-12.
  static PolarizationSelector explicit_vector(cdouble e_theta, cdouble e_phi);
};

std::string to_string(const PolarizationSelector &s);
/// Accepts linear_z, theta, phi, circular_L, circular_R.
PolarizationSelector polarization_from_string(const std::string &name);

struct DetectorSpec {
  Direction direction;
  PolarizationSelector polarization;

  /// Throws InvalidArgumentError when theta is outside [0, pi] or phi outside [0, 2 pi).
  void validate() const;
};

/// Scattered far-field coefficient F with E^sca(r) ~ F e^{ik0 r} / r, resolved on theta/phi.
struct FarFieldAmplitude {
  Direction direction;
  cdouble e_theta{};
  cdouble e_phi{};

  CVec3 cartesian() const;
};

/// Resolves a transverse Cartesian far-field vector into (E_theta, E_phi).
FarFieldAmplitude resolve_far_field(const CVec3 &F, const Direction &d);

/// Radiation integral F = (i w mu0 / 4 pi) h^3 sum_v [J_v - rhat (rhat . J_v)] e^{-i k0 rhat . r_v}
/// with the phase referenced to the coordinate origin.
std::vector<FarFieldAmplitude> radiate(const PolarizationCurrentField &J,
                                       const DielectricScene &scene, double k0,
                                       std::span<const Direction> directions);

cdouble project(const FarFieldAmplitude &amp, const PolarizationSelector &selector);

} // namespace homfield
