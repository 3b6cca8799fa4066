#pragma once

#include "homfield/far_field.hpp"
#include "homfield/mie.hpp"
#include "homfield/quantum_correlation.hpp"
#include "homfield/scene.hpp"
#include "homfield/vie_solver.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace homfield {

enum class OracleMode { vie, mie, both };
enum class OutputKind { g2_map, p2_map, coincidence_curve, farfield_dump };
enum class AngleKind { theta, phi };

const char *version_string();

std::string to_string(OracleMode m);
std::string to_string(OutputKind k);

/// Detector placement in degrees. Negative theta is the in-plane scan convention
/// (theta -> -theta, phi -> phi + 180).
struct DetectorConfig {
  double theta_deg = 0.0;
  double phi_deg = 0.0;
  PolarizationSelector polarization;

  Direction direction() const;
};

/// One swept detector angle; stop is included when it falls on the step grid.
struct SweepAxis {
  int detector = 1; ///< 1 or 2
  AngleKind angle = AngleKind::phi;
  double start_deg = 0.0;
  double stop_deg = 0.0;
  double step_deg = 1.0;

  std::vector<double> values_deg() const;
  std::string label() const;
};

struct ModeSpec {
  Vec3 direction = Vec3::UnitZ();
  Vec3 polarization = Vec3::UnitX();
};

struct CoincidenceConfig {
  /// (angle1, angle2) pairs in the sweep axes' units; empty means the fixed detector angles.
  std::vector<std::array<double, 2>> points;
  double start_sigma = -5.0;
  double stop_sigma = 5.0;
  double step_sigma = 0.1;
};

struct ScenarioConfig {
  std::string source_text;
  /// Text of a referenced scene file (empty for inline scenes).
  std::string scene_text;
  std::filesystem::path base_dir;

  SceneDescription scene;
  double frequency_hz = 0.0;
  std::array<ModeSpec, 2> modes;
  std::array<DetectorConfig, 2> detectors;
  /// One or two axes. With one axis the map's second axis is the same angle of the other
  /// detector held at its fixed value.
  std::vector<SweepAxis> sweep;
  std::set<OutputKind> outputs;
  GaussianPacket packet;
  CoincidenceConfig coincidence;
  SolverOptions solver;
  int threads = 0; ///< 0 keeps the runtime default
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> directions_file;
  OracleMode oracle = OracleMode::vie;

  double omega() const { return omega_from_frequency(frequency_hz); }
  PlaneWaveMode mode(int n) const;
};

/// Parses the YAML scenario text. Throws ConfigError naming the field and line.
ScenarioConfig parse_scenario(const std::string &text,
                              const std::filesystem::path &base_dir = ".");
ScenarioConfig load_scenario(const std::filesystem::path &file);

/// Far-field amplitudes of the two incident modes from one oracle.
class FieldProvider {
public:
  virtual ~FieldProvider() = default;
  /// `mode` is 0 or 1.
  virtual std::vector<FarFieldAmplitude> far_field(int mode,
                                                   std::span<const Direction> dirs) const = 0;
  virtual OracleMode oracle() const = 0;
};

/// VIE solutions of both modes on a voxelized scene.
class VieFieldProvider final : public FieldProvider {
public:
  VieFieldProvider(DielectricScene scene, double k0, std::array<PolarizationCurrentField, 2> J);
  std::vector<FarFieldAmplitude> far_field(int mode, std::span<const Direction> dirs) const override;
  OracleMode oracle() const override { return OracleMode::vie; }
  const DielectricScene &scene() const { return scene_; }

private:
  DielectricScene scene_;
  double k0_;
  std::array<PolarizationCurrentField, 2> J_;
};

/// Mie series of a single sphere primitive.
class MieFieldProvider final : public FieldProvider {
public:
  MieFieldProvider(const ScenarioConfig &config);
  std::vector<FarFieldAmplitude> far_field(int mode, std::span<const Direction> dirs) const override;
  OracleMode oracle() const override { return OracleMode::mie; }

private:
  MieSeries series_;
  std::array<PlaneWaveMode, 2> modes_;
};

struct ModeSolveRecord {
  SolveReport report;
  bool cached = false;
};

/// Solves both modes (or loads them from the cache) and wraps them as a provider.
VieFieldProvider solve_modes(const ScenarioConfig &config, std::array<ModeSolveRecord, 2> *records = nullptr);

/// Samples of the map axes in degrees.
std::array<std::vector<double>, 2> map_axes(const ScenarioConfig &config);

/// Detector directions at map point (angle1, angle2).
std::array<Direction, 2> detector_directions(const ScenarioConfig &config, double angle1_deg,
                                             double angle2_deg);

/// g2 (or the max-normalized classical p2) over the sweep grid. Undefined g2 points are NaN
/// with the flag set.
CorrelationMap sweep_g2_map(const ScenarioConfig &config, const FieldProvider &fields,
                            bool classical = false);

/// Solves with the scenario's VIE settings and sweeps.
CorrelationMap sweep_g2_map(const ScenarioConfig &config);

/// Relative L2 distance between two maps over points defined in both.
double map_relative_l2(const CorrelationMap &test, const CorrelationMap &reference);

/// Amplitude set for one detector pair from a provider.
ModeAmplitudeSet mode_amplitudes(const ScenarioConfig &config, const FieldProvider &fields,
                                 const std::array<Direction, 2> &detectors);

enum class RunKind { run, sweep, oracle_check };

struct ScenarioResult {
  std::filesystem::path run_dir;
  std::vector<std::filesystem::path> tables;
  std::optional<double> oracle_l2;
  bool ok = false;
  std::string failure;
};

/// Executes a scenario and writes tables plus manifest.json into `out_dir`.
/// Solver non-convergence suppresses tables and is recorded in the manifest.
ScenarioResult run_scenario(const ScenarioConfig &config, const std::filesystem::path &out_dir,
                            RunKind kind = RunKind::run);

} // namespace homfield
