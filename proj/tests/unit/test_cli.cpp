#include "doctest.h"

#include "homfield/errors.hpp"
#include "homfield/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace homfield;
namespace fs = std::filesystem;

namespace {

/// Small sphere scenario; `extra` is appended verbatim.
std::string sphere_config(const std::string &sweep, const std::string &extra = "",
                          const std::string &outputs = "[g2_map]") {
  return "frequency_hz: 750e12\n"
         "scene:\n"
         "  spacing: 6e-9\n"
         "  primitives:\n"
         "    - type: sphere\n"
         "      radius: 30e-9\n"
         "      eps: [2.1, 0]\n"
         "modes:\n"
         "  - {direction: [1, 0, 0], polarization: [0, 1, 0]}\n"
         "  - {direction: [0, 1, 0], polarization: [1, 0, 0]}\n"
         "detectors:\n"
         "  - {theta_deg: 45, phi_deg: 0}\n"
         "  - {theta_deg: 135, phi_deg: 135}\n" +
         sweep + "outputs: " + outputs + "\n" + extra;
}

const std::string kSweep = "sweep:\n"
                           "  - {detector: 1, angle: phi, start_deg: 0, stop_deg: 90, step_deg: 10}\n";

fs::path scratch_dir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("homfield_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ConfigError config_error(const std::string &text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError &e) {
    return e;
  }
  FAIL("expected ConfigError");
  return ConfigError("", 0, "");
}

} // namespace

TEST_CASE("scenario parses and resolves defaults") {
  const auto c = parse_scenario(sphere_config(kSweep));
  CHECK(c.frequency_hz == 750e12);
  CHECK(c.scene.primitives.size() == 1);
  CHECK(c.detectors[0].polarization.kind == PolarizationKind::linear_z);
  CHECK(c.oracle == OracleMode::vie);
  CHECK(c.sweep.size() == 1);
  CHECK(c.sweep[0].values_deg().size() == 10);
  CHECK(c.packet.omega0 == doctest::Approx(c.omega()));
  const auto axes = map_axes(c);
  REQUIRE(axes[1].size() == 1);
  CHECK(axes[1][0] == 135.0);
}

TEST_CASE("config errors name the field and line") {
  SUBCASE("empty sweep range") {
    const auto e = config_error(sphere_config(
        "sweep:\n  - {detector: 1, angle: phi, start_deg: 90, stop_deg: 0, step_deg: 2}\n"));
    CHECK(e.field() == "sweep[0].stop_deg");
    CHECK(e.line() == 15);
  }
  SUBCASE("missing frequency") {
    std::string t = sphere_config(kSweep);
    t.erase(0, t.find('\n') + 1);
    CHECK(config_error(t).field() == "frequency_hz");
  }
  SUBCASE("unknown key") {
    const auto e = config_error(sphere_config(kSweep, "solver:\n  tolerance: 1e-6\n"));
    CHECK(e.field() == "solver.tolerance");
    CHECK(e.line() == 18);
  }
  SUBCASE("non-numeric value") {
    const auto e = config_error(sphere_config(kSweep, "solver:\n  tol: tiny\n"));
    CHECK(e.field() == "solver.tol");
    CHECK(e.line() == 18);
  }
  SUBCASE("three modes") {
    std::string t = sphere_config(kSweep);
    const std::string marker = "detectors:";
    t.insert(t.find(marker), "  - {direction: [0, 0, 1], polarization: [1, 0, 0]}\n");
    CHECK(config_error(t).field() == "modes");
  }
  SUBCASE("polarization not transverse") {
    std::string t = sphere_config(kSweep);
    t.replace(t.find("polarization: [0, 1, 0]"), 23, "polarization: [1, 1, 0]");
    CHECK(config_error(t).field() == "modes[0].polarization");
  }
  SUBCASE("empty outputs") {
    CHECK(config_error(sphere_config(kSweep, "", "[]")).field() == "outputs");
  }
  SUBCASE("unknown output") {
    CHECK(config_error(sphere_config(kSweep, "", "[g3_map]")).field() == "outputs[0]");
  }
  SUBCASE("coincidence without packet") {
    CHECK(config_error(sphere_config(kSweep, "", "[coincidence_curve]")).field() == "packet");
  }
  SUBCASE("mie oracle needs one centered sphere") {
    std::string t = sphere_config(kSweep, "oracle: mie\n");
    t.replace(t.find("radius: 30e-9"), 13, "radius: 30e-9\n      center: [1e-9, 0, 0]");
    CHECK(config_error(t).field() == "oracle");
  }
  SUBCASE("syntax error") {
    CHECK(config_error("frequency_hz: [1, 2\n").line() > 0);
  }
  SUBCASE("bad primitive type") {
    std::string t = sphere_config(kSweep);
    t.replace(t.find("type: sphere"), 12, "type: torus");
    CHECK(config_error(t).field() == "scene.primitives[0].type");
  }
}

TEST_CASE("1x1 sweep equals a direct g2 call") {
  auto c = parse_scenario(sphere_config("", "oracle: mie\n"));
  const MieFieldProvider mie(c);
  const auto map = sweep_g2_map(c, mie);
  REQUIRE(map.values.size() == 1);
  const auto s = mode_amplitudes(c, mie, {c.detectors[0].direction(), c.detectors[1].direction()});
  CHECK(map.values[0] == g2(s));
}

TEST_CASE("map points equal per-point evaluation") {
  auto c = parse_scenario(sphere_config(
      "sweep:\n  - {detector: 1, angle: phi, start_deg: 0, stop_deg: 40, step_deg: 20}\n"
      "  - {detector: 2, angle: theta, start_deg: 100, stop_deg: 140, step_deg: 20}\n",
      "oracle: mie\n"));
  const MieFieldProvider mie(c);
  const auto map = sweep_g2_map(c, mie);
  REQUIRE(map.axis1.size() == 3);
  REQUIRE(map.axis2.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const auto dirs = detector_directions(c, map.axis1[i], map.axis2[j]);
      CHECK(dirs[0].phi == doctest::Approx(deg2rad(map.axis1[i])));
      CHECK(dirs[1].theta == doctest::Approx(deg2rad(map.axis2[j])));
      CHECK(map.at(i, j) == doctest::Approx(g2(mode_amplitudes(c, mie, dirs))).epsilon(1e-14));
    }
}

TEST_CASE("undefined points are flagged, never dropped") {
  // A linear_z detector on the +z axis sees no field, so any pair containing one is undefined.
  auto c = parse_scenario(sphere_config(
      "sweep:\n  - {detector: 1, angle: theta, start_deg: 0, stop_deg: 10, step_deg: 10}\n"
      "  - {detector: 2, angle: theta, start_deg: 0, stop_deg: 10, step_deg: 10}\n",
      "oracle: mie\n"));
  const MieFieldProvider mie(c);
  const auto map = sweep_g2_map(c, mie);
  REQUIRE(map.values.size() == 4);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(map.undefined[k]);
    CHECK(std::isnan(map.values[k]));
  }
  CHECK_FALSE(map.undefined[3]);
  CHECK(std::isfinite(map.values[3]));
}

TEST_CASE("classical map is normalized to its maximum") {
  auto c = parse_scenario(sphere_config(kSweep, "oracle: mie\n"));
  const auto p2 = sweep_g2_map(c, MieFieldProvider(c), true);
  double peak = 0.0;
  for (double v : p2.values) peak = std::max(peak, v);
  CHECK(peak == 1.0);
}

TEST_CASE("vie and mie maps agree within five percent") {
  const auto c = parse_scenario(sphere_config(kSweep, "oracle: both\n"));
  const auto vie = sweep_g2_map(c, solve_modes(c));
  const auto mie = sweep_g2_map(c, MieFieldProvider(c));
  CHECK(map_relative_l2(vie, mie) <= 0.05);
}

TEST_CASE("deterministic runs give byte-identical tables") {
  auto c = parse_scenario(sphere_config(
      kSweep, "packet: {sigma_s: 1e-13}\noracle: both\n",
      "[g2_map, p2_map, coincidence_curve, farfield_dump]"));
  c.solver.deterministic = true;
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  const auto ra = run_scenario(c, a);
  const auto rb = run_scenario(c, b);
  REQUIRE(ra.ok);
  REQUIRE(rb.ok);
  REQUIRE(ra.tables.size() == 9);
  REQUIRE(ra.oracle_l2.has_value());
  for (const auto &t : ra.tables) CHECK(slurp(t) == slurp(b / t.filename()));
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["config_text"] == c.source_text);
  CHECK(manifest["solves"].size() == 2);
  CHECK(manifest.contains("wall_seconds"));
  CHECK(manifest.contains("version"));
}

TEST_CASE("non-convergence suppresses tables and records the failure") {
  auto c = parse_scenario(sphere_config(kSweep, "solver: {tol: 1e-14, max_iter: 1}\n"));
  const fs::path dir = scratch_dir("fail");
  const auto r = run_scenario(c, dir);
  CHECK_FALSE(r.ok);
  CHECK(r.tables.empty());
  CHECK_FALSE(fs::exists(dir / "g2_map_vie.tsv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["status"] == "failed");
  CHECK(manifest["solves"]["iterations"] == 1);
}

TEST_CASE("solve cache is reused across runs") {
  auto c = parse_scenario(sphere_config(kSweep));
  c.cache_dir = scratch_dir("cache");
  std::array<ModeSolveRecord, 2> first, second;
  const auto m1 = sweep_g2_map(c, solve_modes(c, &first));
  const auto m2 = sweep_g2_map(c, solve_modes(c, &second));
  CHECK_FALSE(first[0].cached);
  CHECK(second[0].cached);
  CHECK(second[1].cached);
  CHECK(second[0].report.iterations == first[0].report.iterations);
  CHECK(m1.values == m2.values);

  // A different tolerance is a different key.
  c.solver.tol = 1e-7;
  std::array<ModeSolveRecord, 2> third;
  solve_modes(c, &third);
  CHECK_FALSE(third[0].cached);
}

TEST_CASE("scene file references resolve relative to the config") {
  const fs::path dir = scratch_dir("sceneref");
  fs::create_directories(dir);
  std::ofstream(dir / "ball.yaml") << "spacing: 6e-9\nprimitives:\n  - {type: sphere, radius: 30e-9, eps: 2.1}\n";
  std::string t = sphere_config(kSweep);
  const auto begin = t.find("scene:");
  const auto end = t.find("modes:");
  t.replace(begin, end - begin, "scene: ball.yaml\n");
  std::ofstream(dir / "run.yaml") << t;
  const auto c = load_scenario(dir / "run.yaml");
  CHECK_FALSE(c.scene_text.empty());
  CHECK(std::get<SpherePrimitive>(c.scene.primitives[0]).rel_eps == cdouble(2.1));
  std::ofstream(dir / "ball.yaml") << "spacing: 6e-9\nprimitives:\n  - {type: sphere, radius: -1, eps: 2.1}\n";
  try {
    load_scenario(dir / "run.yaml");
    FAIL("expected ConfigError");
  } catch (const ConfigError &e) {
    CHECK(e.field() == "scene.primitives[0].radius");
  }
}

TEST_CASE("direction list input for far-field dumps") {
  const fs::path dir = scratch_dir("dirs");
  fs::create_directories(dir);
  std::ofstream(dir / "dirs.txt") << "# theta phi\n90 0\n-10 0\n";
  auto c = parse_scenario(sphere_config(kSweep, "farfield_directions: dirs.txt\noracle: mie\n", "[farfield_dump]"),
                          dir);
  const auto r = run_scenario(c, dir / "out");
  REQUIRE(r.ok);
  std::ifstream in(dir / "out" / "farfield_mie.tsv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  CHECK(rows == 4);
}
