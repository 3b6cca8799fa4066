#include "homfield/far_field.hpp"

#include "homfield/errors.hpp"

#include <array>
#include <cmath>

namespace homfield {

namespace {

bool at_pole(const Direction &d) { return std::abs(std::sin(d.theta)) < 1e-12; }

double basis_phi(const Direction &d) { return at_pole(d) ? 0.0 : d.phi; }

} // namespace

Direction normalized_direction(double theta, double phi) {
  if (theta < 0.0) {
    theta = -theta;
    phi += kPi;
  }
  if (theta > kPi) {
    theta = 2.0 * kPi - theta;
    phi += kPi;
  }
  phi = std::fmod(phi, 2.0 * kPi);
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= 2.0 * kPi) phi = 0.0;
  return {theta, phi};
}

Vec3 radial_unit(const Direction &d) {
  return {std::sin(d.theta) * std::cos(d.phi), std::sin(d.theta) * std::sin(d.phi),
          std::cos(d.theta)};
}

Vec3 theta_unit(const Direction &d) {
  const double phi = basis_phi(d);
  return {std::cos(d.theta) * std::cos(phi), std::cos(d.theta) * std::sin(phi),
          -std::sin(d.theta)};
}

Vec3 phi_unit(const Direction &d) {
  const double phi = basis_phi(d);
  return {-std::sin(phi), std::cos(phi), 0.0};
}

PolarizationSelector PolarizationSelector::explicit_vector(cdouble e_theta, cdouble e_phi) {
  const double n = std::sqrt(std::norm(e_theta) + std::norm(e_phi));
  if (std::abs(n - 1.0) > 1e-12)
    throw InvalidArgumentError("explicit detector polarization must have unit norm");
  return {PolarizationKind::explicit_vector, e_theta, e_phi};
}

std::string to_string(const PolarizationSelector &s) {
  switch (s.kind) {
  case PolarizationKind::linear_z: return "linear_z";
  case PolarizationKind::theta: return "theta";
  case PolarizationKind::phi: return "phi";
  case PolarizationKind::circular_L: return "circular_L";
  case PolarizationKind::circular_R: return "circular_R";
  case PolarizationKind::explicit_vector: {
    char buf[160];
    std::snprintf(buf, sizeof buf, "explicit(%.17g%+.17gi,%.17g%+.17gi)", s.e_theta.real(),
                  s.e_theta.imag(), s.e_phi.real(), s.e_phi.imag());
    return buf;
  }
  }
  return "linear_z";
}

PolarizationSelector polarization_from_string(const std::string &name) {
  if (name == "linear_z") return PolarizationSelector::of(PolarizationKind::linear_z);
  if (name == "theta") return PolarizationSelector::of(PolarizationKind::theta);
  if (name == "phi") return PolarizationSelector::of(PolarizationKind::phi);
  if (name == "circular_L") return PolarizationSelector::of(PolarizationKind::circular_L);
  if (name == "circular_R") return PolarizationSelector::of(PolarizationKind::circular_R);
  throw InvalidArgumentError("unknown polarization selector '" + name + "'");
}

void DetectorSpec::validate() const {
  if (!(direction.theta >= 0.0 && direction.theta <= kPi))
    throw InvalidArgumentError("detector theta must lie in [0, pi]");
  if (!(direction.phi >= 0.0 && direction.phi < 2.0 * kPi))
    throw InvalidArgumentError("detector phi must lie in [0, 2 pi)");
  if (polarization.kind == PolarizationKind::explicit_vector)
    PolarizationSelector::explicit_vector(polarization.e_theta, polarization.e_phi);
}

CVec3 FarFieldAmplitude::cartesian() const {
  return e_theta * theta_unit(direction).cast<cdouble>() +
         e_phi * phi_unit(direction).cast<cdouble>();
}

FarFieldAmplitude resolve_far_field(const CVec3 &F, const Direction &d) {
  FarFieldAmplitude a;
  a.direction = d;
  a.e_theta = theta_unit(d).cast<cdouble>().dot(F);
  a.e_phi = phi_unit(d).cast<cdouble>().dot(F);
  return a;
}

std::vector<FarFieldAmplitude> radiate(const PolarizationCurrentField &J,
                                       const DielectricScene &scene, double k0,
                                       std::span<const Direction> directions) {
  if (!(J.grid == scene.grid())) throw InvalidArgumentError("current grid differs from scene");
  if (!(k0 > 0.0)) throw InvalidArgumentError("wavenumber must be positive");
  const GridGeometry &g = scene.grid();
  const auto &mat = scene.material_voxels();
  const double omega = k0 * constants::c0;
  const cdouble prefactor = kI * omega * constants::mu0 / (4.0 * kPi) * g.cell_volume();

  std::vector<FarFieldAmplitude> out(directions.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t di = 0; di < static_cast<std::ptrdiff_t>(directions.size()); ++di) {
    const Direction d = directions[di];
    const Vec3 rhat = radial_unit(d);
    // The phase factor separates over the three grid axes.
    std::array<std::vector<cdouble>, 3> axis_phase;
    for (int a = 0; a < 3; ++a) {
      axis_phase[a].resize(static_cast<std::size_t>(g.dims[a]));
      for (int i = 0; i < g.dims[a]; ++i)
        axis_phase[a][i] = std::exp(-kI * (k0 * rhat[a] * (g.origin[a] + g.spacing * i)));
    }
    CVec3 sum = CVec3::Zero();
    for (std::size_t v : mat) {
      const Index3 c = g.unravel(v);
      sum += J.values[v] * (axis_phase[0][c[0]] * axis_phase[1][c[1]] * axis_phase[2][c[2]]);
    }
    const CVec3 transverse = sum - rhat.cast<cdouble>() * rhat.cast<cdouble>().dot(sum);
    out[di] = resolve_far_field(prefactor * transverse, d);
  }
  return out;
}

cdouble project(const FarFieldAmplitude &amp, const PolarizationSelector &selector) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  switch (selector.kind) {
  case PolarizationKind::linear_z: return -amp.e_theta * std::sin(amp.direction.theta);
  case PolarizationKind::theta: return amp.e_theta;
  case PolarizationKind::phi: return amp.e_phi;
  case PolarizationKind::circular_L: return (amp.e_theta + kI * amp.e_phi) * inv_sqrt2;
  case PolarizationKind::circular_R: return (amp.e_theta - kI * amp.e_phi) * inv_sqrt2;
  case PolarizationKind::explicit_vector:
    return std::conj(selector.e_theta) * amp.e_theta + std::conj(selector.e_phi) * amp.e_phi;
  }
  return {};
}

} // namespace homfield
