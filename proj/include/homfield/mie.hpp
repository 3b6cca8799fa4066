#pragma once

#include "homfield/far_field.hpp"
#include "homfield/types.hpp"
#include "homfield/vie_solver.hpp"

#include <utility>
#include <vector>

namespace homfield {

/// Partial-wave coefficients of plane-wave scattering by a homogeneous sphere.
/// a[n-1], b[n-1] hold a_n, b_n for n = 1..n_max.
struct MieSeries {
  double size_parameter = 0.0;
  cdouble relative_index{1.0, 0.0};
  int n_max = 0;
  std::vector<cdouble> a;
  std::vector<cdouble> b;
};

/// Standard truncation order ceil(x + 4 x^{1/3} + 2).
int mie_truncation_order(double x);

/// Riccati-Bessel recurrences with downward logarithmic derivatives; `extra_terms` extends
/// the series past the truncation order. Throws RangeError when the recurrences overflow.
MieSeries mie_coefficients(double x, cdouble n_rel, int extra_terms = 0);

/// Scattering amplitudes (S1, S2) at scattering angle theta (canonical frame).
std::pair<cdouble, cdouble> mie_amplitudes(const MieSeries &series, double theta);

double mie_extinction_efficiency(const MieSeries &series);
double mie_scattering_efficiency(const MieSeries &series);

/// Far field for an arbitrary incident plane wave, in the same normalization as radiate():
/// the canonical result (incidence +z, x-polarized, F = (i/k)[S2 cos(phi) theta - S1 sin(phi) phi])
/// is rotated onto the incident mode. The sphere is centered on the coordinate origin.
FarFieldAmplitude mie_far_field(const MieSeries &series, const PlaneWaveMode &incident,
                                const Direction &direction);

} // namespace homfield
