#include "doctest.h"

#include "homfield/errors.hpp"
#include "homfield/far_field.hpp"
#include "homfield/mie.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace homfield;

namespace {

const double kOmega = omega_from_frequency(750e12);
const double kK0 = kOmega / constants::c0;

struct DipoleFixture {
  DielectricScene scene = oracle::voxel_scene({3, 3, 3}, 5e-9, {{1, 1, 1}}, 2.1);
  PolarizationCurrentField J{scene.grid()};
  DipoleFixture() {
    J.values[scene.grid().linear_index(1, 1, 1)] = CVec3(0, 0, 1);
  }
};

Direction deg(double theta, double phi) { return normalized_direction(deg2rad(theta), deg2rad(phi)); }

/// Power through the unit sphere by midpoint quadrature on an (nt x np) grid rotated by `shift`.
double radiated_power(const std::vector<FarFieldAmplitude> &f, int nt, int np) {
  double p = 0.0;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      const auto &a = f[static_cast<std::size_t>(i) * np + j];
      p += (std::norm(a.e_theta) + std::norm(a.e_phi)) * std::sin(a.direction.theta);
    }
  return p * (kPi / nt) * (2.0 * kPi / np);
}

std::vector<Direction> sphere_grid(int nt, int np, double phi_shift) {
  std::vector<Direction> d;
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j)
      d.push_back({(i + 0.5) * kPi / nt, std::fmod((j + 0.5) * 2.0 * kPi / np + phi_shift, 2.0 * kPi)});
  return d;
}

} // namespace

TEST_CASE("z dipole radiates a sin(theta) pattern with no phi component") {
  DipoleFixture f;
  const std::vector<Direction> dirs{deg(30, 10), deg(90, 10), deg(150, 10)};
  const auto amps = radiate(f.J, f.scene, kK0, dirs);
  const double ref = std::abs(amps[1].e_theta);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    CHECK(std::abs(amps[i].e_theta) == doctest::Approx(ref * std::sin(dirs[i].theta)).epsilon(1e-12));
    CHECK(std::abs(amps[i].e_phi) < 1e-14 * ref);
  }
}

TEST_CASE("z dipole is azimuthally uniform on the equator") {
  DipoleFixture f;
  std::vector<Direction> dirs;
  for (int p = 0; p < 360; p += 15) dirs.push_back(deg(90, p));
  const auto amps = radiate(f.J, f.scene, kK0, dirs);
  for (const auto &a : amps)
    CHECK(std::abs(a.e_theta) == doctest::Approx(std::abs(amps[0].e_theta)).epsilon(1e-12));
}

TEST_CASE("radiation prefactor for a point current") {
  // Single voxel at the origin: F = (i w mu0 / 4 pi) h^3 (J - rhat rhat.J).
  GridGeometry g;
  g.dims = {1, 1, 1};
  g.spacing = 4e-9;
  const DielectricScene s(g, {cdouble(2.0)});
  PolarizationCurrentField J(g);
  J.values[0] = CVec3(1.0, 0.0, 0.0);
  const auto a = radiate(J, s, kK0, std::vector<Direction>{deg(90, 90)});
  const cdouble expect = kI * kOmega * constants::mu0 / (4 * kPi) * std::pow(4e-9, 3);
  CHECK(std::abs(a[0].e_phi + expect) < 1e-12 * std::abs(expect));
  CHECK(std::abs(a[0].e_theta) < 1e-12 * std::abs(expect));
}

TEST_CASE("projection examples") {
  FarFieldAmplitude a{{kPi / 2, 0.0}, 1.0, 0.0};
  CHECK(std::abs(project(a, PolarizationSelector::of(PolarizationKind::linear_z)) + 1.0) < 1e-15);
  a = {{kPi / 4, 0.3}, 1.0, 0.0};
  CHECK(project(a, PolarizationSelector::of(PolarizationKind::linear_z)).real() ==
        doctest::Approx(-0.70710678118654752));
  a = {{1.0, 0.0}, 1.0, -kI};
  CHECK(std::abs(project(a, PolarizationSelector::of(PolarizationKind::circular_L)) - std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(project(a, PolarizationSelector::of(PolarizationKind::circular_R))) < 1e-15);
  CHECK(project(a, PolarizationSelector::of(PolarizationKind::theta)) == cdouble(1.0));
  CHECK(project(a, PolarizationSelector::of(PolarizationKind::phi)) == -kI);
}

TEST_CASE("circular projections swap under E_phi -> -E_phi") {
  const FarFieldAmplitude a{{0.7, 1.1}, {0.3, -0.8}, {1.2, 0.4}};
  const FarFieldAmplitude b{a.direction, a.e_theta, -a.e_phi};
  const auto L = PolarizationSelector::of(PolarizationKind::circular_L);
  const auto R = PolarizationSelector::of(PolarizationKind::circular_R);
  CHECK(std::abs(project(a, L) - project(b, R)) < 1e-15);
  CHECK(std::abs(project(a, R) - project(b, L)) < 1e-15);
}

TEST_CASE("explicit polarization selector") {
  const double s = 1.0 / std::sqrt(2.0);
  const auto sel = PolarizationSelector::explicit_vector(s, kI * s);
  const FarFieldAmplitude a{{0.5, 0.5}, 2.0, 3.0};
  CHECK(std::abs(project(a, sel) - (s * 2.0 - kI * s * 3.0)) < 1e-15);
  CHECK_THROWS_AS(PolarizationSelector::explicit_vector(1.0, 1.0), InvalidArgumentError);
  CHECK(polarization_from_string("circular_R").kind == PolarizationKind::circular_R);
  CHECK_THROWS_AS(polarization_from_string("diagonal"), InvalidArgumentError);
}

TEST_CASE("detector validation and direction normalization") {
  DetectorSpec d{{kPi + 0.1, 0.0}, {}};
  CHECK_THROWS_AS(d.validate(), InvalidArgumentError);
  d.direction = {0.5, 2.0 * kPi};
  CHECK_THROWS_AS(d.validate(), InvalidArgumentError);
  d.direction = {0.5, 1.0};
  CHECK_NOTHROW(d.validate());
  const Direction n = normalized_direction(deg2rad(-10.0), 0.0);
  CHECK(n.theta == doctest::Approx(deg2rad(10.0)));
  CHECK(n.phi == doctest::Approx(kPi));
  CHECK((radial_unit(n) - Vec3(-std::sin(deg2rad(10.0)), 0, std::cos(deg2rad(10.0)))).norm() < 1e-15);
}

TEST_CASE("pole convention uses the phi = 0 frame") {
  const Direction north{0.0, 1.3};
  CHECK((theta_unit(north) - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK((phi_unit(north) - Vec3(0, 1, 0)).norm() < 1e-15);
  const FarFieldAmplitude a = resolve_far_field(CVec3(2.0, kI, 0.0), north);
  CHECK(a.e_theta == cdouble(2.0));
  CHECK(a.e_phi == kI);
}

TEST_CASE("transversality: radial current radiates nothing along its axis") {
  DipoleFixture f;
  const auto a = radiate(f.J, f.scene, kK0, std::vector<Direction>{{0.0, 0.0}, {kPi, 0.0}});
  CHECK(std::abs(a[0].e_theta) + std::abs(a[0].e_phi) < 1e-30);
  CHECK(std::abs(a[1].e_theta) + std::abs(a[1].e_phi) < 1e-30);
}

TEST_CASE("sphere solve matches the Mie far field at 36 directions") {
  const double r = 60e-9;
  const auto s = build_sphere(r, 2.1, 4.5e-9);
  const PlaneWaveMode m(Vec3(1, 0, 0), Vec3(0, 1, 0), kOmega);
  const auto sol = solve(s, m, SolverOptions{});
  std::vector<Direction> dirs;
  for (int t = 15; t < 180; t += 30)
    for (int p = 0; p < 360; p += 60) dirs.push_back(deg(t, p));
  REQUIRE(dirs.size() == 36);
  const auto vie = radiate(sol.current, s, kK0, dirs);
  const auto series = mie_coefficients(kK0 * r, std::sqrt(cdouble(2.1)));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto mie = mie_far_field(series, m, dirs[i]);
    num += std::norm(vie[i].e_theta - mie.e_theta) + std::norm(vie[i].e_phi - mie.e_phi);
    den += std::norm(mie.e_theta) + std::norm(mie.e_phi);
  }
  CHECK(std::sqrt(num / den) <= 0.03);

  SUBCASE("radiated power is invariant under rotation of the sampling grid") {
    const int nt = 64, np = 128;
    const double p0 = radiated_power(radiate(sol.current, s, kK0, sphere_grid(nt, np, 0.0)), nt, np);
    const double p1 = radiated_power(radiate(sol.current, s, kK0, sphere_grid(nt, np, 0.37)), nt, np);
    CHECK(std::abs(p1 - p0) / p0 <= 0.005);

    // Optical theorem: extinction from the forward amplitude equals the scattered power.
    const Direction fwd = deg(90, 0);
    const auto F = radiate(sol.current, s, kK0, std::vector<Direction>{fwd})[0].cartesian();
    const double sigma_ext = 4.0 * kPi / kK0 * std::imag(m.polarization().cast<cdouble>().dot(F));
    CHECK(sigma_ext == doctest::Approx(p0).epsilon(0.02));
  }
}
