#include "doctest.h"

#include "homfield/errors.hpp"
#include "homfield/quantum_correlation.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace homfield;

namespace {

double rel(cdouble a, cdouble b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<double> delays(double sigma, double from, double to, int n) {
  std::vector<double> d;
  for (int i = 0; i < n; ++i) d.push_back(sigma * (from + (to - from) * i / (n - 1)));
  return d;
}

} // namespace

TEST_CASE("g2 examples") {
  CHECK(g2({1.0, 0.0, 0.0, 2.0, 1.0, 1.0}) == doctest::Approx(1.0));
  CHECK(g2({1.0, -1.0, 1.0, 1.0, 1.0, 1.0}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(g2({0.0, 0.0, 1.0, 1.0, 1.0, 1.0}), UndefinedCorrelationError);
  CHECK_THROWS_AS(g2({1.0, 1.0, 0.0, 0.0, 1.0, 1.0}), UndefinedCorrelationError);
  CHECK_THROWS_AS(g2({1.0, 1.0, 1.0, 1.0, 0.0, 1.0}), InvalidArgumentError);
}

TEST_CASE("g2 components examples") {
  const ModeAmplitudeSet s{{0.4, 0.1}, 0.0, {1.0, -0.3}, {0.2, 0.9}, 1.3, 0.7};
  const auto U = g2_components(s);
  CHECK(U[1] == cdouble(0.0));
  CHECK(U[2] == cdouble(0.0));
  CHECK(U[3] == cdouble(0.0));
  CHECK(U[0].real() == doctest::Approx(g2(s)).epsilon(1e-12));
}

TEST_CASE("U2 + U3 is real for random amplitudes") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 100; ++t) {
    const auto s = oracle::random_amplitudes(rng);
    const auto U = g2_components(s);
    CHECK(std::abs((U[1] + U[2]).imag()) < 1e-12);
    CHECK(std::abs(U[0].imag()) == 0.0);
    CHECK(U[0].real() >= 0.0);
    CHECK(U[3].real() >= 0.0);
  }
}

TEST_CASE("g2 property suite over random draws") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * kPi);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 10000; ++t) {
    const auto s = oracle::random_amplitudes(rng);
    const double g = g2(s);
    REQUIRE(g >= 0.0);
    REQUIRE(g <= 2.0 + 1e-9);
    const auto U = g2_components(s);
    REQUIRE(std::abs(U[0] + U[1] + U[2] + U[3] - g) < 1e-9);

    const cdouble alpha(nd(rng), nd(rng));
    const ModeAmplitudeSet scaled{alpha * s.a1, alpha * s.a2, alpha * s.b1, alpha * s.b2, s.omega1, s.omega2};
    REQUIRE(std::abs(g2(scaled) - g) < 1e-9);
    REQUIRE(std::abs(classical_p2(scaled) - std::pow(std::abs(alpha), 4) * classical_p2(s)) <=
            1e-9 * classical_p2(scaled) + 1e-300);

    const cdouble e1 = std::polar(1.0, ph(rng)), e2 = std::polar(1.0, ph(rng));
    const ModeAmplitudeSet per_mode{e1 * s.a1, e2 * s.a2, e1 * s.b1, e2 * s.b2, s.omega1, s.omega2};
    REQUIRE(std::abs(g2(per_mode) - g) < 1e-9);
    REQUIRE(std::abs(g2(s.exchanged()) - g) < 1e-9);
  }
}

TEST_CASE("classical p2 examples") {
  CHECK(classical_p2({0.0, 0.0, 0.0, 0.0, 1.0, 1.0}) == 0.0);
  CHECK(classical_p2({1.0, -1.0, 0.3, 2.0, 1.0, 1.0}) == 0.0);
  CHECK(classical_p2({1.0, 1.0, 1.0, 0.0, 2.0, 3.0}) == doctest::Approx(24.0));
}

TEST_CASE("coincidence dip and flat cases") {
  const GaussianPacket p{1e-12, 1e15, CarrierMode::dropped};
  const auto d = delays(p.sigma, -8, 8, 33);
  SUBCASE("A = -B gives a full dip at zero delay") {
    const ModeAmplitudeSet s{1.0, -1.0, 1.0, 1.0, 1.0, 1.0};
    const double zero[] = {0.0};
    CHECK(coincidence_curve(s, p, zero).values[0] < 1e-15);
  }
  SUBCASE("mode 2 dark at both detectors vanishes everywhere") {
    const ModeAmplitudeSet s{0.7, 0.0, {0.3, 0.2}, 0.0, 1.0, 1.0};
    const auto c = coincidence_curve(s, p, d);
    for (double v : c.values) CHECK(v == 0.0);
  }
  SUBCASE("single pathway stays at unity") {
    const ModeAmplitudeSet s{{0.7, 0.1}, 0.0, 0.0, {0.4, -0.9}, 1.0, 1.0};
    const auto c = coincidence_curve(s, p, d);
    for (double v : c.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(c.any_undefined());
  }
  SUBCASE("all products zero flags the curve") {
    const ModeAmplitudeSet s{0.0, 0.0, 0.0, 0.0, 1.0, 1.0};
    const auto c = coincidence_curve(s, p, d);
    CHECK(c.any_undefined());
    for (double v : c.values) CHECK(v == 0.0);
  }
}

TEST_CASE("coincidence curves approach unity beyond six widths") {
  std::mt19937_64 rng(5);
  const GaussianPacket p{2e-13, 1e15, CarrierMode::dropped};
  const auto d = delays(p.sigma, 6, 12, 13);
  for (int t = 0; t < 200; ++t) {
    const auto s = oracle::random_amplitudes(rng, true);
    for (double v : coincidence_curve(s, p, d).values) CHECK(std::abs(v - 1.0) < 1e-3);
  }
}

TEST_CASE("bridge: zero g2 means zero coincidences at zero delay") {
  const ModeAmplitudeSet s{{0.3, 0.4}, {-0.3, -0.4}, {0.5, -0.1}, {0.5, -0.1}, 1.0, 1.0};
  CHECK(g2(s) < 1e-30);
  const double zero[] = {0.0};
  CHECK(coincidence_curve(s, GaussianPacket{1.0, 1.0, CarrierMode::dropped}, zero).values[0] < 1e-15);
}

TEST_CASE("coincidence is nonnegative and monotone in the tails") {
  std::mt19937_64 rng(17);
  const GaussianPacket p{1.0, 3.0, CarrierMode::dropped};
  const auto d = delays(1.0, 3, 10, 71);
  for (int t = 0; t < 100; ++t) {
    const auto c = coincidence_curve(oracle::random_amplitudes(rng, true), p, d);
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(c.values[i] >= 0.0);
      if (i > 0) CHECK(std::abs(c.values[i] - 1.0) <= std::abs(c.values[i - 1] - 1.0) + 1e-15);
    }
  }
}

TEST_CASE("closed forms match quadrature of the time-domain integrals") {
  std::mt19937_64 rng(3);
  for (CarrierMode mode : {CarrierMode::dropped, CarrierMode::retained}) {
    const GaussianPacket p{1.0, 1.5, mode};
    for (int t = 0; t < 5; ++t) {
      const auto s = oracle::random_amplitudes(rng, true);
      for (double dt : delays(1.0, -5, 5, 21)) {
        const auto c = coincidence_terms(s, p, dt);
        const auto q = oracle::quadrature_terms(s, p, dt);
        CHECK(rel(c.n1, q.n1) < 1e-8);
        CHECK(rel(c.n2, q.n2) < 1e-8);
        CHECK(rel(c.n3, q.n3) < 1e-8);
        CHECK(rel(c.n4, q.n4) < 1e-8);
        CHECK(rel(c.dc, q.dc) < 1e-8);
      }
    }
  }
}

TEST_CASE("retained carrier suppresses the interference terms") {
  const ModeAmplitudeSet s{1.0, -1.0, 1.0, 1.0, 1.0, 1.0};
  const double zero[] = {0.0};
  const GaussianPacket kept{1e-12, 4e12, CarrierMode::retained};
  const GaussianPacket dropped{1e-12, 4e12, CarrierMode::dropped};
  // omega0 sigma = 4: cross terms fall by exp(-16), leaving (N1 + N2) / D_c = 2 / 4.
  const auto t = coincidence_terms(s, kept, 0.0);
  CHECK(std::abs(t.n3) < 1e-6 * t.n1);
  CHECK(coincidence_curve(s, kept, zero).values[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(coincidence_curve(s, dropped, zero).values[0] < 1e-15);
}

TEST_CASE("Gaussian overlap closed form and quadrature") {
  const double s = 2.5e-13;
  auto check = [&](GaussianPacket p, double delay, cdouble expect) {
    const auto [closed, quad] = gaussian_overlap_check(p, delay);
    CHECK(rel(closed, expect) < 1e-14);
    CHECK(rel(quad, closed) < 1e-8);
  };
  check({s, 1e15, CarrierMode::dropped}, 0.0, s * std::sqrt(kPi));
  check({s, 1e15, CarrierMode::dropped}, s, s * std::sqrt(kPi) * std::exp(-1.0));
  check({s, 2.0 / s, CarrierMode::retained}, 0.0, s * std::sqrt(kPi) * std::exp(-4.0));
  CHECK_THROWS_AS(gaussian_overlap_check({0.0, 1.0, CarrierMode::dropped}, 0.0), InvalidArgumentError);
  CHECK_THROWS_AS(gaussian_overlap_check({1.0, -1.0, CarrierMode::dropped}, 0.0), InvalidArgumentError);
}
