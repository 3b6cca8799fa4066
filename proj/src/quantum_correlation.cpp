#include "homfield/quantum_correlation.hpp"

#include "homfield/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace homfield {

void GaussianPacket::validate() const {
  if (!(sigma > 0.0) || !(omega0 > 0.0))
    throw InvalidArgumentError("Gaussian packet needs sigma > 0 and omega0 > 0");
}

namespace {

struct Denominators {
  double d1;
  double d2;
};

Denominators denominators(const ModeAmplitudeSet &s) {
  if (!(s.omega1 > 0.0) || !(s.omega2 > 0.0))
    throw InvalidArgumentError("mode frequencies must be positive");
  const Denominators d{s.omega1 * std::norm(s.a1) + s.omega2 * std::norm(s.a2),
                       s.omega1 * std::norm(s.b1) + s.omega2 * std::norm(s.b2)};
  if (!(d.d1 > 0.0) || !(d.d2 > 0.0))
    throw UndefinedCorrelationError("a detector sees no field from either mode");
  return d;
}

// e^{-dt^2/sigma^2} times the carrier suppression of the cross overlap.
double cross_overlap_factor(const GaussianPacket &p, double delay) {
  double f = std::exp(-delay * delay / (p.sigma * p.sigma));
  if (p.carrier == CarrierMode::retained) f *= std::exp(-p.omega0 * p.omega0 * p.sigma * p.sigma);
  return f;
}

} // namespace

double g2(const ModeAmplitudeSet &amps) {
  const Denominators d = denominators(amps);
  const double num = amps.omega1 * amps.omega2 * std::norm(amps.pathway_a() + amps.pathway_b());
  return num / (d.d1 * d.d2);
}

std::array<cdouble, 4> g2_components(const ModeAmplitudeSet &amps) {
  const Denominators d = denominators(amps);
  const double scale = amps.omega1 * amps.omega2 / (d.d1 * d.d2);
  const cdouble A = amps.pathway_a();
  const cdouble B = amps.pathway_b();
  return {scale * std::norm(A), scale * std::conj(A) * B, scale * std::conj(B) * A,
          scale * std::norm(B)};
}

double classical_p2(const ModeAmplitudeSet &amps) {
  return amps.omega1 * amps.omega2 * std::norm(amps.a1 + amps.a2) * std::norm(amps.b1 + amps.b2);
}

CoincidenceTerms coincidence_terms(const ModeAmplitudeSet &amps, const GaussianPacket &packet,
                                   double delay) {
  packet.validate();
  if (!std::isfinite(delay)) throw InvalidArgumentError("delay must be finite");
  const double norm0 = packet.sigma * std::sqrt(kPi);
  const cdouble A = amps.pathway_a();
  const cdouble B = amps.pathway_b();
  const double envelope = std::exp(-delay * delay / (packet.sigma * packet.sigma));
  const double cross = norm0 * cross_overlap_factor(packet, delay);

  CoincidenceTerms t;
  t.n1 = std::norm(A) * norm0;
  t.n2 = std::norm(B) * norm0;
  t.n3 = A * std::conj(B) * cross;
  t.n4 = std::conj(A) * B * cross;
  const double same_mode = std::norm(amps.a1) * std::norm(amps.b1) +
                           std::norm(amps.a2) * std::norm(amps.b2);
  t.dc = norm0 * (std::norm(A) + std::norm(B) + same_mode * envelope);
  return t;
}

bool CoincidenceCurve::any_undefined() const {
  return std::any_of(undefined.begin(), undefined.end(), [](bool b) { return b; });
}

CoincidenceCurve coincidence_curve(const ModeAmplitudeSet &amps, const GaussianPacket &packet,
                                   std::span<const double> delays) {
  packet.validate();
  CoincidenceCurve curve;
  curve.packet = packet;
  curve.delays.assign(delays.begin(), delays.end());
  curve.values.reserve(delays.size());
  curve.undefined.reserve(delays.size());
  for (double dt : delays) {
    const CoincidenceTerms t = coincidence_terms(amps, packet, dt);
    if (!(t.dc > 0.0)) {
      curve.values.push_back(0.0);
      curve.undefined.push_back(true);
      continue;
    }
    const double num = t.n1 + t.n2 + std::real(t.n3 + t.n4);
    curve.values.push_back(std::max(0.0, num) / t.dc);
    curve.undefined.push_back(false);
  }
  return curve;
}

std::pair<cdouble, cdouble> gaussian_overlap_check(const GaussianPacket &packet, double delay) {
  packet.validate();
  const double s = packet.sigma;
  const cdouble closed = s * std::sqrt(kPi) * cross_overlap_factor(packet, delay);

  const double w0 = packet.carrier == CarrierMode::retained ? packet.omega0 : 0.0;
  auto h = [&](double t) {
    return std::exp(-t * t / (2.0 * s * s)) * std::exp(-kI * (w0 * t));
  };
  auto integrand = [&](double t) { return h(t) * std::conj(h(2.0 * delay - t)); };

  // Integrate in units of sigma around the product's peak at t = delay.
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double half_width = 12.0;
  double err_re = 0.0, err_im = 0.0;
  const double re = Quad::integrate(
      [&](double u) { return std::real(integrand(delay + s * u)); }, -half_width, half_width, 15,
      1e-13, &err_re);
  const double im = Quad::integrate(
      [&](double u) { return std::imag(integrand(delay + s * u)); }, -half_width, half_width, 15,
      1e-13, &err_im);
  const cdouble quad = s * cdouble(re, im);
  // Error budget relative to the carrier-free overlap magnitude sigma sqrt(pi).
  if (std::hypot(err_re, err_im) > 1e-10 * std::sqrt(kPi))
    throw NumericalError("overlap quadrature did not reach tolerance", std::abs(quad));
  return {closed, quad};
}

} // namespace homfield
