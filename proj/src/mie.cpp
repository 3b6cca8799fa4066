#include "homfield/mie.hpp"

#include "homfield/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace homfield {

int mie_truncation_order(double x) {
  return static_cast<int>(std::ceil(x + 4.0 * std::cbrt(x) + 2.0));
}

MieSeries mie_coefficients(double x, cdouble n_rel, int extra_terms) {
  if (!(x > 0.0)) throw InvalidArgumentError("size parameter must be positive");
  if (x > 1e4) throw RangeError("size parameter too large for the series recurrences");
  if (extra_terms < 0) throw InvalidArgumentError("extra_terms must be non-negative");

  MieSeries s;
  s.size_parameter = x;
  s.relative_index = n_rel;
  s.n_max = mie_truncation_order(x) + extra_terms;

  const cdouble mx = n_rel * x;
  const int n_start = std::max(s.n_max, static_cast<int>(std::ceil(std::abs(mx)))) + 15;
  // Logarithmic derivative D_n(mx), downward.
  std::vector<cdouble> D(static_cast<std::size_t>(n_start) + 1, cdouble{});
  for (int n = n_start; n >= 1; --n) {
    const cdouble nm = static_cast<double>(n) / mx;
    D[n - 1] = nm - 1.0 / (D[n] + nm);
  }

  double psi0 = std::cos(x), psi1 = std::sin(x);
  double chi0 = -std::sin(x), chi1 = std::cos(x);
  cdouble xi1(psi1, -chi1);
  s.a.reserve(s.n_max);
  s.b.reserve(s.n_max);
  for (int n = 1; n <= s.n_max; ++n) {
    const double fn = static_cast<double>(n);
    const double psi = (2.0 * fn - 1.0) * psi1 / x - psi0;
    const double chi = (2.0 * fn - 1.0) * chi1 / x - chi0;
    const cdouble xi(psi, -chi);
    const cdouble ta = D[n] / n_rel + fn / x;
    const cdouble tb = n_rel * D[n] + fn / x;
    const cdouble an = (ta * psi - psi1) / (ta * xi - xi1);
    const cdouble bn = (tb * psi - psi1) / (tb * xi - xi1);
    if (!std::isfinite(an.real()) || !std::isfinite(an.imag()) || !std::isfinite(bn.real()) ||
        !std::isfinite(bn.imag()))
      throw RangeError("Mie recurrence overflow at order " + std::to_string(n));
    s.a.push_back(an);
    s.b.push_back(bn);
    psi0 = psi1;
    psi1 = psi;
    chi0 = chi1;
    chi1 = chi;
    xi1 = cdouble(psi1, -chi1);
  }
  return s;
}

std::pair<cdouble, cdouble> mie_amplitudes(const MieSeries &series, double theta) {
  const double mu = std::cos(theta);
  double pi_prev = 0.0, pi_cur = 1.0;
  cdouble S1{}, S2{};
  for (int n = 1; n <= series.n_max; ++n) {
    const double fn = static_cast<double>(n);
    const double tau = fn * mu * pi_cur - (fn + 1.0) * pi_prev;
    const double w = (2.0 * fn + 1.0) / (fn * (fn + 1.0));
    const cdouble an = series.a[n - 1];
    const cdouble bn = series.b[n - 1];
    S1 += w * (an * pi_cur + bn * tau);
    S2 += w * (an * tau + bn * pi_cur);
    const double pi_next = ((2.0 * fn + 1.0) * mu * pi_cur - (fn + 1.0) * pi_prev) / fn;
    pi_prev = pi_cur;
    pi_cur = pi_next;
  }
  return {S1, S2};
}

double mie_extinction_efficiency(const MieSeries &series) {
  double q = 0.0;
  for (int n = 1; n <= series.n_max; ++n)
    q += (2.0 * n + 1.0) * std::real(series.a[n - 1] + series.b[n - 1]);
  return 2.0 * q / (series.size_parameter * series.size_parameter);
}

double mie_scattering_efficiency(const MieSeries &series) {
  double q = 0.0;
  for (int n = 1; n <= series.n_max; ++n)
    q += (2.0 * n + 1.0) * (std::norm(series.a[n - 1]) + std::norm(series.b[n - 1]));
  return 2.0 * q / (series.size_parameter * series.size_parameter);
}

FarFieldAmplitude mie_far_field(const MieSeries &series, const PlaneWaveMode &incident,
                                const Direction &direction) {
  // Columns map the canonical frame (x = polarization, z = propagation) onto the lab frame.
  Eigen::Matrix3d R;
  R.col(0) = incident.polarization();
  R.col(1) = incident.direction().cross(incident.polarization());
  R.col(2) = incident.direction();

  const Vec3 rc = R.transpose() * radial_unit(direction);
  const double theta_c = std::acos(std::clamp(rc.z(), -1.0, 1.0));
  const double phi_c = std::atan2(rc.y(), rc.x());
  const auto [S1, S2] = mie_amplitudes(series, theta_c);

  const Vec3 th_c(std::cos(theta_c) * std::cos(phi_c), std::cos(theta_c) * std::sin(phi_c),
                  -std::sin(theta_c));
  const Vec3 ph_c(-std::sin(phi_c), std::cos(phi_c), 0.0);
  const double k = incident.wavenumber();
  const CVec3 Fc = (kI / k) * (S2 * std::cos(phi_c) * th_c.cast<cdouble>() -
                               S1 * std::sin(phi_c) * ph_c.cast<cdouble>());
  return resolve_far_field(R.cast<cdouble>() * Fc, direction);
}

} // namespace homfield
