#include "oracles.hpp"

#include "homfield/green_kernel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace homfield::oracle {

cdouble scalar_green(const Vec3 &r, double k0) {
  const double R = r.norm();
  return std::exp(kI * (k0 * R)) / (4.0 * kPi * R);
}

Dyad finite_difference_dyad(const Vec3 &offset, double k0, double step) {
  Dyad hess;
  const cdouble g0 = scalar_green(offset, k0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Vec3 ei = Vec3::Unit(i) * step;
      const Vec3 ej = Vec3::Unit(j) * step;
      if (i == j) {
        hess(i, j) = (scalar_green(offset + ei, k0) - 2.0 * g0 + scalar_green(offset - ei, k0)) /
                     (step * step);
      } else {
        hess(i, j) = (scalar_green(offset + ei + ej, k0) - scalar_green(offset + ei - ej, k0) -
                      scalar_green(offset - ei + ej, k0) + scalar_green(offset - ei - ej, k0)) /
                     (4.0 * step * step);
      }
    }
  }
  return g0 * Dyad::Identity() + hess / (k0 * k0);
}

cdouble ball_green_integral(double a, double k0) {
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  // Shell integral 4 pi r^2 g(r) = r e^{ikr}.
  const double re = Quad::integrate([&](double r) { return r * std::cos(k0 * r); }, 0.0, a, 20, 1e-15);
  const double im = Quad::integrate([&](double r) { return r * std::sin(k0 * r); }, 0.0, a, 20, 1e-15);
  return {re, im};
}

namespace {

cdouble local_term(cdouble eps, double omega) {
  return -1.0 / (kI * omega * (eps - 1.0) * constants::eps0);
}

} // namespace

std::vector<cdouble> dense_apply(const DielectricScene &scene, double omega,
                                 std::span<const cdouble> packed) {
  const auto &mat = scene.material_voxels();
  const GridGeometry &g = scene.grid();
  const double k0 = omega / constants::c0;
  const cdouble pref = -kI * omega * constants::mu0;
  const Dyad self = cell_self_coupling(g.spacing, k0);
  std::vector<cdouble> out(packed.size());
  for (std::size_t i = 0; i < mat.size(); ++i) {
    CVec3 acc = CVec3::Zero();
    const Vec3 ri = g.center(mat[i]);
    for (std::size_t j = 0; j < mat.size(); ++j) {
      const CVec3 Jj(packed[3 * j], packed[3 * j + 1], packed[3 * j + 2]);
      if (i == j) {
        acc += self * Jj;
      } else {
        acc += g.cell_volume() * (eval_green_dyad(ri - g.center(mat[j]), k0) * Jj);
      }
    }
    const CVec3 Ji(packed[3 * i], packed[3 * i + 1], packed[3 * i + 2]);
    const CVec3 y = local_term(scene.rel_permittivity(mat[i]), omega) * Ji + pref * acc;
    for (int c = 0; c < 3; ++c) out[3 * i + c] = y[c];
  }
  return out;
}

Eigen::MatrixXcd dense_matrix(const DielectricScene &scene, double omega) {
  const std::size_t n = 3 * scene.material_count();
  Eigen::MatrixXcd A(n, n);
  std::vector<cdouble> e(n, cdouble{});
  for (std::size_t col = 0; col < n; ++col) {
    std::fill(e.begin(), e.end(), cdouble{});
    e[col] = 1.0;
    const auto y = dense_apply(scene, omega, e);
    for (std::size_t row = 0; row < n; ++row) A(row, col) = y[row];
  }
  return A;
}

CoincidenceTerms quadrature_terms(const ModeAmplitudeSet &amps, const GaussianPacket &packet,
                                  double delay) {
  const double s = packet.sigma;
  const double w0 = packet.carrier == CarrierMode::retained ? packet.omega0 : 0.0;
  auto h = [&](double t) { return std::exp(-t * t / (2.0 * s * s)) * std::exp(-kI * (w0 * t)); };

  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double lo = std::min(0.0, 2.0 * delay) - 14.0 * s;
  const double hi = std::max(0.0, 2.0 * delay) + 14.0 * s;
  auto real_int = [&](auto f) { return Quad::integrate(f, lo, hi, 25, 1e-14); };
  auto complex_int = [&](auto f) {
    return cdouble(real_int([&](double t) { return std::real(f(t)); }),
                   real_int([&](double t) { return std::imag(f(t)); }));
  };

  const cdouble A = amps.a1 * amps.b2;
  const cdouble B = amps.a2 * amps.b1;
  CoincidenceTerms t;
  t.n1 = real_int([&](double x) { return std::norm(A) * std::norm(h(x)); });
  t.n2 = real_int([&](double x) { return std::norm(B) * std::norm(h(2.0 * delay - x)); });
  t.n3 = complex_int([&](double x) { return A * std::conj(B) * h(x) * std::conj(h(2.0 * delay - x)); });
  t.n4 = complex_int([&](double x) { return std::conj(A) * B * std::conj(h(x)) * h(2.0 * delay - x); });
  t.dc = real_int([&](double x) {
    const double h1 = std::abs(h(x));
    const double h2 = std::abs(h(2.0 * delay - x));
    return (std::norm(amps.a1) * h1 + std::norm(amps.a2) * h2) *
           (std::norm(amps.b2) * h1 + std::norm(amps.b1) * h2);
  });
  return t;
}

ModeAmplitudeSet random_amplitudes(std::mt19937_64 &rng, bool equal_frequencies) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.5, 2.0);
  auto c = [&] { return cdouble(n(rng), n(rng)); };
  ModeAmplitudeSet s{c(), c(), c(), c(), 1.0, 1.0};
  if (!equal_frequencies) {
    s.omega1 = w(rng);
    s.omega2 = w(rng);
  }
  return s;
}

DielectricScene voxel_scene(const Index3 &dims, double spacing,
                            const std::vector<Index3> &filled, cdouble rel_eps) {
  GridGeometry g;
  g.dims = dims;
  g.spacing = spacing;
  g.origin = Vec3::Zero();
  std::vector<cdouble> eps(g.voxel_count(), cdouble(1.0, 0.0));
  for (const auto &c : filled) eps[g.linear_index(c[0], c[1], c[2])] = rel_eps;
  return DielectricScene(g, std::move(eps));
}

} // namespace homfield::oracle
