#pragma once

#include "homfield/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace homfield {

/// Projected far-field amplitudes of two incident modes seen by two detectors.
/// Detector 1 uses polarization a, detector 2 polarization b; mode n has frequency omega_n.
struct ModeAmplitudeSet {
  cdouble a1{}; ///< E_{a k1}(r1)
  cdouble a2{}; ///< E_{a k2}(r1)
  cdouble b1{}; ///< E_{b k1}(r2)
  cdouble b2{}; ///< E_{b k2}(r2)
  double omega1 = 1.0;
  double omega2 = 1.0;

  /// Pathway products A = a1 b2 and B = a2 b1.
  cdouble pathway_a() const { return a1 * b2; }
  cdouble pathway_b() const { return a2 * b1; }

  /// Detector labels swapped (r1 <-> r2, a <-> b).
  ModeAmplitudeSet exchanged() const { return {b1, b2, a1, a2, omega1, omega2}; }
};

enum class CarrierMode { dropped, retained };

struct GaussianPacket {
  double sigma = 1.0;  ///< temporal width [s]
  double omega0 = 1.0; ///< central angular frequency [rad/s]
  CarrierMode carrier = CarrierMode::dropped;

  /// Throws InvalidArgumentError unless sigma > 0 and omega0 > 0.
  void validate() const;
};

/// Normalized second-order correlation
/// g2 = w1 w2 |a1 b2 + a2 b1|^2 / [(w1|a1|^2 + w2|a2|^2)(w1|b1|^2 + w2|b2|^2)].
/// Throws UndefinedCorrelationError when either denominator sum is zero.
double g2(const ModeAmplitudeSet &amps);

/// The four field-product terms U1..U4 whose sum is g2 (U1, U4 real; U2 = conj(U3)).
std::array<cdouble, 4> g2_components(const ModeAmplitudeSet &amps);

/// Classical intensity correlation w1 w2 |a1 + a2|^2 |b1 + b2|^2 (unnormalized).
double classical_p2(const ModeAmplitudeSet &amps);

/// Closed-form time integrals of the coincidence expression at one delay.
struct CoincidenceTerms {
  double n1 = 0.0;
  double n2 = 0.0;
  cdouble n3{};
  cdouble n4{};
  double dc = 0.0;
};

CoincidenceTerms coincidence_terms(const ModeAmplitudeSet &amps, const GaussianPacket &packet,
                                   double delay);

struct CoincidenceCurve {
  std::vector<double> delays;
  std::vector<double> values;
  /// True where D_c vanished and the value was set to 0 by convention.
  std::vector<bool> undefined;
  GaussianPacket packet;

  bool any_undefined() const;
};

/// Normalized coincidence count (N1+N2+N3+N4)/D_c at each delay.
CoincidenceCurve coincidence_curve(const ModeAmplitudeSet &amps, const GaussianPacket &packet,
                                   std::span<const double> delays);

/// Closed form and adaptive quadrature of int h(t) h*(2 dt - t) dt for the packet's carrier
/// mode. Throws NumericalError when the quadrature misses its tolerance.
std::pair<cdouble, cdouble> gaussian_overlap_check(const GaussianPacket &packet, double delay);

/// Sample angles and g2 (or normalized p2) values, row-major over (axis1, axis2).
struct CorrelationMap {
  std::vector<double> axis1;
  std::vector<double> axis2;
  std::vector<double> values;
  std::vector<bool> undefined;

  double at(std::size_t i, std::size_t j) const { return values[i * axis2.size() + j]; }
};

} // namespace homfield
