#include "homfield/scenario.hpp"

#include "homfield/errors.hpp"
#include "homfield/fft.hpp"
#include "homfield/green_kernel.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <unistd.h>

#ifndef HOMFIELD_VERSION
#define HOMFIELD_VERSION "unknown"
#endif

namespace homfield {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const char *version_string() { return HOMFIELD_VERSION; }

std::string to_string(OracleMode m) {
  switch (m) {
  case OracleMode::vie: return "vie";
  case OracleMode::mie: return "mie";
  case OracleMode::both: return "both";
  }
  return "?";
}

std::string to_string(OutputKind k) {
  switch (k) {
  case OutputKind::g2_map: return "g2_map";
  case OutputKind::p2_map: return "p2_map";
  case OutputKind::coincidence_curve: return "coincidence_curve";
  case OutputKind::farfield_dump: return "farfield_dump";
  }
  return "?";
}

Direction DetectorConfig::direction() const {
  return normalized_direction(deg2rad(theta_deg), deg2rad(phi_deg));
}

std::vector<double> SweepAxis::values_deg() const {
  std::vector<double> v;
  if (!(step_deg > 0.0) || stop_deg < start_deg) return v;
  const auto n = static_cast<std::size_t>(std::floor((stop_deg - start_deg) / step_deg + 1e-9)) + 1;
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) v.push_back(start_deg + static_cast<double>(i) * step_deg);
  return v;
}

std::string SweepAxis::label() const {
  return "detector" + std::to_string(detector) + (angle == AngleKind::theta ? ".theta_deg" : ".phi_deg");
}

PlaneWaveMode ScenarioConfig::mode(int n) const {
  return PlaneWaveMode(modes.at(static_cast<std::size_t>(n)).direction,
                       modes.at(static_cast<std::size_t>(n)).polarization, omega());
}

// ---------------------------------------------------------------------------------------------
// Config parsing

namespace {

int line_of(const YAML::Node &n) {
  const YAML::Mark m = n.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

/// Mapping reader that tracks consumed keys so typos are reported.
class MapReader {
public:
  MapReader(const YAML::Node &node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError(path_, line_of(node_), "expected a mapping");
  }

  std::string field(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }
  int line() const { return line_of(node_); }

  bool has(const std::string &key) const { return static_cast<bool>(node_[key]); }

  YAML::Node get(const std::string &key) const {
    seen_.insert(key);
    const YAML::Node n = node_[key];
    if (!n) throw ConfigError(field(key), line(), "required field is missing");
    return n;
  }

  double number(const std::string &key) const { return as_number(get(key), field(key)); }
  double number(const std::string &key, double fallback) const {
    return has(key) ? number(key) : (seen_.insert(key), fallback);
  }

  int integer(const std::string &key, int fallback) const {
    if (!has(key)) return fallback;
    const YAML::Node n = get(key);
    try {
      return n.as<int>();
    } catch (const YAML::Exception &) {
      throw ConfigError(field(key), line_of(n), "expected an integer");
    }
  }

  std::string text(const std::string &key) const { return as_text(get(key), field(key)); }
  std::string text(const std::string &key, const std::string &fallback) const {
    return has(key) ? text(key) : (seen_.insert(key), fallback);
  }

  bool flag(const std::string &key, bool fallback) const {
    if (!has(key)) return fallback;
    const YAML::Node n = get(key);
    try {
      return n.as<bool>();
    } catch (const YAML::Exception &) {
      throw ConfigError(field(key), line_of(n), "expected true or false");
    }
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (const auto &kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(field(key), line_of(kv.first), "unknown field");
    }
  }

  static double as_number(const YAML::Node &n, const std::string &field) {
    if (!n.IsScalar()) throw ConfigError(field, line_of(n), "expected a number");
    try {
      const double v = n.as<double>();
      if (!std::isfinite(v)) throw ConfigError(field, line_of(n), "number must be finite");
      return v;
    } catch (const YAML::Exception &) {
      throw ConfigError(field, line_of(n), "expected a number, got '" + n.Scalar() + "'");
    }
  }

  static std::string as_text(const YAML::Node &n, const std::string &field) {
    if (!n.IsScalar()) throw ConfigError(field, line_of(n), "expected a string");
    return n.Scalar();
  }

private:
  YAML::Node node_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

Vec3 read_vec3(const YAML::Node &n, const std::string &field) {
  if (!n.IsSequence() || n.size() != 3)
    throw ConfigError(field, line_of(n), "expected a list of three numbers");
  Vec3 v;
  for (std::size_t i = 0; i < 3; ++i)
    v[static_cast<int>(i)] = MapReader::as_number(n[i], field + "[" + std::to_string(i) + "]");
  return v;
}

/// A scalar, or a [re, im] pair.
cdouble read_complex(const YAML::Node &n, const std::string &field) {
  if (n.IsScalar()) return MapReader::as_number(n, field);
  if (!n.IsSequence() || n.size() != 2)
    throw ConfigError(field, line_of(n), "expected a number or a [re, im] pair");
  return {MapReader::as_number(n[0], field + "[0]"), MapReader::as_number(n[1], field + "[1]")};
}

Primitive read_primitive(const YAML::Node &node, const std::string &path) {
  const MapReader m(node, path);
  const std::string type = m.text("type");
  if (type == "sphere") {
    SpherePrimitive p;
    p.center = m.has("center") ? read_vec3(m.get("center"), m.field("center")) : Vec3::Zero();
    p.radius = m.number("radius");
    if (!(p.radius > 0.0)) throw ConfigError(m.field("radius"), m.line(), "radius must be positive");
    p.rel_eps = read_complex(m.get("eps"), m.field("eps"));
    m.finish();
    return p;
  }
  if (type == "slab") {
    SlabPrimitive p;
    p.min_corner = read_vec3(m.get("min"), m.field("min"));
    p.max_corner = read_vec3(m.get("max"), m.field("max"));
    if (!(p.max_corner.array() > p.min_corner.array()).all())
      throw ConfigError(m.field("max"), m.line(), "max corner must exceed min corner on every axis");
    p.rel_eps = read_complex(m.get("eps"), m.field("eps"));
    m.finish();
    return p;
  }
  if (type == "pbp_array") {
    PbpArrayPrimitive p;
    PBPLayout &L = p.layout;
    p.wavelength = m.number("wavelength");
    p.center = m.has("center") ? read_vec3(m.get("center"), m.field("center")) : Vec3::Zero();
    L.period = m.number("period", L.period);
    L.fin_height = m.number("fin_height", L.fin_height);
    L.fin_length = m.number("fin_length", L.fin_length);
    L.fin_width = m.number("fin_width", L.fin_width);
    L.deflection_angle = deg2rad(m.number("deflection_angle_deg", rad2deg(L.deflection_angle)));
    L.fins_per_group = m.integer("fins_per_group", L.fins_per_group);
    L.groups_x = m.integer("groups_x", L.groups_x);
    L.groups_y = m.integer("groups_y", L.groups_y);
    L.fin_index = m.number("fin_index", L.fin_index);
    L.substrate_index = m.number("substrate_index", L.substrate_index);
    L.substrate_thickness = m.number("substrate_thickness", L.substrate_thickness);
    if (!(p.wavelength > 0.0))
      throw ConfigError(m.field("wavelength"), m.line(), "wavelength must be positive");
    if (L.fins_per_group < 1 || L.groups_x < 1 || L.groups_y < 1)
      throw ConfigError(m.field("fins_per_group"), m.line(), "fin and group counts must be positive");
    m.finish();
    return p;
  }
  throw ConfigError(m.field("type"), line_of(m.get("type")),
                    "unknown primitive type '" + type + "' (sphere, slab, pbp_array)");
}

SceneDescription read_scene(const YAML::Node &node, const std::string &path) {
  const MapReader m(node, path);
  SceneDescription d;
  d.spacing = m.number("spacing");
  if (!(d.spacing > 0.0)) throw ConfigError(m.field("spacing"), m.line(), "spacing must be positive");
  d.padding = m.integer("padding", d.padding);
  if (d.padding < 0) throw ConfigError(m.field("padding"), m.line(), "padding must be non-negative");
  const YAML::Node prims = m.get("primitives");
  if (!prims.IsSequence() || prims.size() == 0)
    throw ConfigError(m.field("primitives"), line_of(prims), "expected a non-empty list");
  for (std::size_t i = 0; i < prims.size(); ++i)
    d.primitives.push_back(read_primitive(prims[i], m.field("primitives") + "[" + std::to_string(i) + "]"));
  m.finish();
  return d;
}

PolarizationSelector read_polarization(const YAML::Node &n, const std::string &field) {
  if (n.IsScalar()) {
    try {
      return polarization_from_string(n.Scalar());
    } catch (const InvalidArgumentError &e) {
      throw ConfigError(field, line_of(n), e.what());
    }
  }
  const MapReader m(n, field);
  const cdouble et = read_complex(m.get("e_theta"), m.field("e_theta"));
  const cdouble ep = read_complex(m.get("e_phi"), m.field("e_phi"));
  m.finish();
  try {
    return PolarizationSelector::explicit_vector(et, ep);
  } catch (const InvalidArgumentError &e) {
    throw ConfigError(field, line_of(n), e.what());
  }
}

/// Parses a whole document, converting yaml-cpp syntax errors.
YAML::Node load_yaml(const std::string &text, const std::string &what) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException &e) {
    throw ConfigError(what, e.mark.line + 1, e.msg);
  }
}

std::string read_text_file(const fs::path &path, const std::string &field, int line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(field, line, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const SpherePrimitive *single_sphere(const SceneDescription &s) {
  if (s.primitives.size() != 1) return nullptr;
  return std::get_if<SpherePrimitive>(&s.primitives.front());
}

void require_mie_compatible(const ScenarioConfig &c, int line) {
  const SpherePrimitive *sp = single_sphere(c.scene);
  if (!sp)
    throw ConfigError("oracle", line, "the mie oracle needs a scene with exactly one sphere primitive");
  if (sp->center.norm() != 0.0)
    throw ConfigError("oracle", line, "the mie oracle needs the sphere centered on the origin");
}

} // namespace

ScenarioConfig parse_scenario(const std::string &text, const fs::path &base_dir) {
  const YAML::Node root = load_yaml(text, "");
  const MapReader m(root, "");
  ScenarioConfig c;
  c.source_text = text;
  c.base_dir = base_dir;

  c.frequency_hz = m.number("frequency_hz");
  if (!(c.frequency_hz > 0.0))
    throw ConfigError("frequency_hz", m.line(), "frequency must be positive");

  const YAML::Node scene = m.get("scene");
  if (scene.IsScalar()) {
    const fs::path file = base_dir / scene.Scalar();
    c.scene_text = read_text_file(file, "scene", line_of(scene));
    c.scene = read_scene(load_yaml(c.scene_text, "scene"), "scene");
  } else {
    c.scene = read_scene(scene, "scene");
  }

  const YAML::Node modes = m.get("modes");
  if (!modes.IsSequence() || modes.size() != 2)
    throw ConfigError("modes", line_of(modes), "exactly two incident modes are required");
  for (std::size_t i = 0; i < 2; ++i) {
    const MapReader mm(modes[i], "modes[" + std::to_string(i) + "]");
    Vec3 d = read_vec3(mm.get("direction"), mm.field("direction"));
    Vec3 p = read_vec3(mm.get("polarization"), mm.field("polarization"));
    mm.finish();
    if (d.norm() == 0.0 || p.norm() == 0.0)
      throw ConfigError(mm.field("direction"), mm.line(), "direction and polarization must be nonzero");
    d.normalize();
    p.normalize();
    if (std::abs(d.dot(p)) > 1e-9)
      throw ConfigError(mm.field("polarization"), mm.line(), "polarization must be orthogonal to direction");
    c.modes[i] = {d, p};
  }

  const YAML::Node dets = m.get("detectors");
  if (!dets.IsSequence() || dets.size() != 2)
    throw ConfigError("detectors", line_of(dets), "exactly two detectors are required");
  for (std::size_t i = 0; i < 2; ++i) {
    const MapReader dm(dets[i], "detectors[" + std::to_string(i) + "]");
    DetectorConfig &d = c.detectors[i];
    d.theta_deg = dm.number("theta_deg");
    d.phi_deg = dm.number("phi_deg");
    d.polarization = dm.has("polarization")
                         ? read_polarization(dm.get("polarization"), dm.field("polarization"))
                         : PolarizationSelector::of(PolarizationKind::linear_z);
    dm.finish();
    if (d.theta_deg < -180.0 || d.theta_deg > 180.0)
      throw ConfigError(dm.field("theta_deg"), dm.line(), "theta must lie in [-180, 180] degrees");
  }

  if (m.has("sweep")) {
    const YAML::Node sw = m.get("sweep");
    if (!sw.IsSequence() || sw.size() < 1 || sw.size() > 2)
      throw ConfigError("sweep", line_of(sw), "expected one or two sweep axes");
    for (std::size_t i = 0; i < sw.size(); ++i) {
      const MapReader am(sw[i], "sweep[" + std::to_string(i) + "]");
      SweepAxis a;
      a.detector = am.integer("detector", 1);
      const std::string angle = am.text("angle", "phi");
      a.start_deg = am.number("start_deg");
      a.stop_deg = am.number("stop_deg");
      a.step_deg = am.number("step_deg");
      am.finish();
      if (a.detector != 1 && a.detector != 2)
        throw ConfigError(am.field("detector"), am.line(), "detector must be 1 or 2");
      if (angle == "theta")
        a.angle = AngleKind::theta;
      else if (angle == "phi")
        a.angle = AngleKind::phi;
      else
        throw ConfigError(am.field("angle"), am.line(), "angle must be theta or phi");
      if (!(a.step_deg > 0.0))
        throw ConfigError(am.field("step_deg"), am.line(), "step must be positive");
      if (a.values_deg().empty())
        throw ConfigError(am.field("stop_deg"), am.line(), "sweep range is empty (stop < start)");
      c.sweep.push_back(a);
    }
    if (c.sweep.size() == 2 && c.sweep[0].detector == c.sweep[1].detector &&
        c.sweep[0].angle == c.sweep[1].angle)
      throw ConfigError("sweep[1]", line_of(sw[1]), "both axes sweep the same detector angle");
  }

  const YAML::Node outs = m.get("outputs");
  if (!outs.IsSequence() || outs.size() == 0)
    throw ConfigError("outputs", line_of(outs), "at least one output is required");
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const std::string field = "outputs[" + std::to_string(i) + "]";
    const std::string name = MapReader::as_text(outs[i], field);
    if (name == "g2_map") c.outputs.insert(OutputKind::g2_map);
    else if (name == "p2_map") c.outputs.insert(OutputKind::p2_map);
    else if (name == "coincidence_curve") c.outputs.insert(OutputKind::coincidence_curve);
    else if (name == "farfield_dump") c.outputs.insert(OutputKind::farfield_dump);
    else
      throw ConfigError(field, line_of(outs[i]),
                        "unknown output '" + name + "' (g2_map, p2_map, coincidence_curve, farfield_dump)");
  }

  c.packet.omega0 = c.omega();
  c.packet.sigma = 0.0;
  if (m.has("packet")) {
    const MapReader pm(m.get("packet"), "packet");
    c.packet.sigma = pm.number("sigma_s");
    c.packet.omega0 = pm.number("omega0_rad_s", c.omega());
    const std::string carrier = pm.text("carrier", "dropped");
    pm.finish();
    if (carrier == "dropped") c.packet.carrier = CarrierMode::dropped;
    else if (carrier == "retained") c.packet.carrier = CarrierMode::retained;
    else throw ConfigError(pm.field("carrier"), pm.line(), "carrier must be dropped or retained");
    if (!(c.packet.sigma > 0.0)) throw ConfigError(pm.field("sigma_s"), pm.line(), "sigma must be positive");
    if (!(c.packet.omega0 > 0.0))
      throw ConfigError(pm.field("omega0_rad_s"), pm.line(), "omega0 must be positive");
  } else if (c.outputs.count(OutputKind::coincidence_curve)) {
    throw ConfigError("packet", m.line(), "coincidence_curve output needs packet parameters");
  }

  if (m.has("coincidence")) {
    const MapReader cm(m.get("coincidence"), "coincidence");
    CoincidenceConfig &cc = c.coincidence;
    if (cm.has("points_deg")) {
      const YAML::Node pts = cm.get("points_deg");
      if (!pts.IsSequence()) throw ConfigError(cm.field("points_deg"), line_of(pts), "expected a list of pairs");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string f = cm.field("points_deg") + "[" + std::to_string(i) + "]";
        if (!pts[i].IsSequence() || pts[i].size() != 2) throw ConfigError(f, line_of(pts[i]), "expected [angle1, angle2]");
        cc.points.push_back({MapReader::as_number(pts[i][0], f), MapReader::as_number(pts[i][1], f)});
      }
    }
    cc.start_sigma = cm.number("start_sigma", cc.start_sigma);
    cc.stop_sigma = cm.number("stop_sigma", cc.stop_sigma);
    cc.step_sigma = cm.number("step_sigma", cc.step_sigma);
    cm.finish();
    if (!(cc.step_sigma > 0.0) || cc.stop_sigma < cc.start_sigma)
      throw ConfigError(cm.field("step_sigma"), cm.line(), "delay range is empty");
  }

  if (m.has("solver")) {
    const MapReader sm(m.get("solver"), "solver");
    SolverOptions &o = c.solver;
    o.tol = sm.number("tol", o.tol);
    o.max_iter = sm.integer("max_iter", o.max_iter);
    if (sm.has("precond")) {
      const std::string p = sm.text("precond");
      try {
        o.precond = preconditioner_from_string(p);
      } catch (const InvalidArgumentError &e) {
        throw ConfigError(sm.field("precond"), sm.line(), e.what());
      }
    }
    if (sm.has("blocks")) {
      const Vec3 b = read_vec3(sm.get("blocks"), sm.field("blocks"));
      for (int i = 0; i < 3; ++i) {
        if (b[i] < 1 || b[i] != std::floor(b[i]))
          throw ConfigError(sm.field("blocks"), sm.line(), "block counts must be positive integers");
        o.blocks[static_cast<std::size_t>(i)] = static_cast<int>(b[i]);
      }
    }
    o.deterministic = sm.flag("deterministic", o.deterministic);
    const double budget = sm.number("memory_budget_bytes", static_cast<double>(o.memory_budget));
    if (!(budget > 0.0)) throw ConfigError(sm.field("memory_budget_bytes"), sm.line(), "budget must be positive");
    o.memory_budget = static_cast<std::size_t>(budget);
    c.threads = sm.integer("threads", 0);
    if (sm.has("cache_dir")) c.cache_dir = base_dir / sm.text("cache_dir");
    sm.finish();
    if (!(o.tol > 0.0) || o.tol >= 1.0) throw ConfigError(sm.field("tol"), sm.line(), "tol must lie in (0, 1)");
    if (o.max_iter < 1) throw ConfigError(sm.field("max_iter"), sm.line(), "max_iter must be positive");
    if (c.threads < 0) throw ConfigError(sm.field("threads"), sm.line(), "threads must be non-negative");
  }

  if (m.has("farfield_directions")) c.directions_file = base_dir / m.text("farfield_directions");

  const std::string oracle = m.text("oracle", "vie");
  if (oracle == "vie") c.oracle = OracleMode::vie;
  else if (oracle == "mie") c.oracle = OracleMode::mie;
  else if (oracle == "both") c.oracle = OracleMode::both;
  else throw ConfigError("oracle", m.line(), "oracle must be vie, mie or both");
  if (c.oracle != OracleMode::vie) require_mie_compatible(c, line_of(m.get("oracle")));

  m.finish();
  return c;
}

ScenarioConfig load_scenario(const fs::path &file) {
  const std::string text = read_text_file(file, "", 0);
  return parse_scenario(text, file.has_parent_path() ? file.parent_path() : fs::path("."));
}

// ---------------------------------------------------------------------------------------------
// Field providers

VieFieldProvider::VieFieldProvider(DielectricScene scene, double k0,
                                   std::array<PolarizationCurrentField, 2> J)
    : scene_(std::move(scene)), k0_(k0), J_(std::move(J)) {}

std::vector<FarFieldAmplitude> VieFieldProvider::far_field(int mode,
                                                           std::span<const Direction> dirs) const {
  return radiate(J_.at(static_cast<std::size_t>(mode)), scene_, k0_, dirs);
}

namespace {

MieSeries sphere_series(const ScenarioConfig &config) {
  const SpherePrimitive *sp = single_sphere(config.scene);
  if (!sp) throw ConfigError("oracle", 0, "the mie oracle needs a scene with exactly one sphere primitive");
  const double k0 = wavenumber_from_omega(config.omega());
  return mie_coefficients(k0 * sp->radius, std::sqrt(sp->rel_eps));
}

} // namespace

MieFieldProvider::MieFieldProvider(const ScenarioConfig &config)
    : series_(sphere_series(config)), modes_{config.mode(0), config.mode(1)} {}

std::vector<FarFieldAmplitude> MieFieldProvider::far_field(int mode,
                                                           std::span<const Direction> dirs) const {
  std::vector<FarFieldAmplitude> out;
  out.reserve(dirs.size());
  const PlaneWaveMode &m = modes_.at(static_cast<std::size_t>(mode));
  for (const Direction &d : dirs) out.push_back(mie_far_field(series_, m, d));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Solve cache

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void *data, std::size_t n) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string solve_key(const DielectricScene &scene, const ModeSpec &mode, double frequency, double tol) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t sh = scene.content_hash();
  h = fnv1a(h, &sh, sizeof sh);
  h = fnv1a(h, mode.direction.data(), 3 * sizeof(double));
  h = fnv1a(h, mode.polarization.data(), 3 * sizeof(double));
  h = fnv1a(h, &frequency, sizeof frequency);
  h = fnv1a(h, &tol, sizeof tol);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json report_json(const SolveReport &r) {
  return json{{"iterations", r.iterations},
              {"relative_residual", r.relative_residual},
              {"wall_seconds", r.wall_seconds},
              {"preconditioner", to_string(r.preconditioner)},
              {"restarts", r.restarts}};
}

SolveReport report_from_json(const json &j) {
  SolveReport r;
  r.iterations = j.at("iterations").get<int>();
  r.relative_residual = j.at("relative_residual").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.preconditioner = preconditioner_from_string(j.at("preconditioner").get<std::string>());
  r.restarts = j.at("restarts").get<int>();
  return r;
}

/// Unique temporary name next to `target`, renamed into place so concurrent writers never
/// expose a partial file.
fs::path temp_sibling(const fs::path &target) {
  static std::mt19937_64 rng{std::random_device{}()};
  char buf[40];
  std::snprintf(buf, sizeof buf, ".tmp.%d.%016llx", static_cast<int>(::getpid()),
                static_cast<unsigned long long>(rng()));
  return fs::path(target.string() + buf);
}

void write_text_atomic(const fs::path &path, const std::string &text) {
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::optional<std::pair<PolarizationCurrentField, SolveReport>>
cache_lookup(const fs::path &dir, const std::string &key, const GridGeometry &grid) {
  const fs::path cur = dir / (key + ".current");
  const fs::path rep = dir / (key + ".json");
  if (!fs::exists(cur) || !fs::exists(rep)) return std::nullopt;
  try {
    PolarizationCurrentField J = read_current_dump(cur);
    if (!(J.grid == grid)) return std::nullopt;
    std::ifstream in(rep);
    const json j = json::parse(in);
    return std::make_pair(std::move(J), report_from_json(j));
  } catch (const std::exception &) {
    return std::nullopt;
  }
}

void cache_store(const fs::path &dir, const std::string &key, const PolarizationCurrentField &J,
                 const SolveReport &report) {
  fs::create_directories(dir);
  const fs::path cur = dir / (key + ".current");
  const fs::path tmp = temp_sibling(cur);
  write_current_dump(J, tmp);
  fs::rename(tmp, cur);
  write_text_atomic(dir / (key + ".json"), report_json(report).dump(2) + "\n");
}

} // namespace

VieFieldProvider solve_modes(const ScenarioConfig &config, std::array<ModeSolveRecord, 2> *records) {
  if (config.threads > 0) set_thread_count(config.threads);
  DielectricScene scene = build_scene(config.scene);
  const double omega = config.omega();
  const double k0 = wavenumber_from_omega(omega);

  std::array<PolarizationCurrentField, 2> J;
  std::array<ModeSolveRecord, 2> rec;
  std::optional<GreenKernel> kernel;
  for (int n = 0; n < 2; ++n) {
    const auto ni = static_cast<std::size_t>(n);
    const std::string key = solve_key(scene, config.modes[ni], config.frequency_hz, config.solver.tol);
    if (config.cache_dir) {
      if (auto hit = cache_lookup(*config.cache_dir, key, scene.grid())) {
        J[ni] = std::move(hit->first);
        rec[ni] = {hit->second, true};
        continue;
      }
    }
    if (!kernel)
      kernel.emplace(build_toeplitz_kernel(scene.grid().dims, scene.grid().spacing, k0,
                                           config.solver.memory_budget));
    SolveResult r = solve(scene, *kernel, config.mode(n), config.solver);
    if (config.cache_dir) cache_store(*config.cache_dir, key, r.current, r.report);
    J[ni] = std::move(r.current);
    rec[ni] = {std::move(r.report), false};
  }
  if (records) *records = std::move(rec);
  return VieFieldProvider(std::move(scene), k0, std::move(J));
}

// ---------------------------------------------------------------------------------------------
// Sweeps

namespace {

/// Map axes including the degenerate axis when fewer than two are swept.
std::array<SweepAxis, 2> effective_axes(const ScenarioConfig &c) {
  auto fixed = [&](int detector, AngleKind angle) {
    const DetectorConfig &d = c.detectors[static_cast<std::size_t>(detector - 1)];
    const double v = angle == AngleKind::theta ? d.theta_deg : d.phi_deg;
    return SweepAxis{detector, angle, v, v, 1.0};
  };
  if (c.sweep.empty()) return {fixed(1, AngleKind::phi), fixed(2, AngleKind::phi)};
  if (c.sweep.size() == 1) {
    const SweepAxis &a = c.sweep[0];
    return {a, fixed(a.detector == 1 ? 2 : 1, a.angle)};
  }
  return {c.sweep[0], c.sweep[1]};
}

/// Far-field table for one detector, collapsed along map axes that do not move it.
struct DetectorTable {
  bool along1 = false;
  bool along2 = false;
  std::size_t n2 = 1;
  std::vector<Direction> directions;
  std::array<std::vector<cdouble>, 2> projected; ///< per mode

  std::size_t index(std::size_t i, std::size_t j) const {
    return (along1 ? i : 0) * n2 + (along2 ? j : 0);
  }
};

DetectorTable detector_table(const ScenarioConfig &c, const FieldProvider &fields, int detector,
                             const std::array<SweepAxis, 2> &axes,
                             const std::array<std::vector<double>, 2> &values) {
  DetectorTable t;
  t.along1 = axes[0].detector == detector;
  t.along2 = axes[1].detector == detector;
  const std::size_t n1 = t.along1 ? values[0].size() : 1;
  t.n2 = t.along2 ? values[1].size() : 1;
  DetectorConfig d = c.detectors[static_cast<std::size_t>(detector - 1)];
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < t.n2; ++j) {
      DetectorConfig dd = d;
      auto set = [&](const SweepAxis &a, double v) {
        (a.angle == AngleKind::theta ? dd.theta_deg : dd.phi_deg) = v;
      };
      if (t.along1) set(axes[0], values[0][i]);
      if (t.along2) set(axes[1], values[1][j]);
      t.directions.push_back(dd.direction());
    }
  for (int m = 0; m < 2; ++m) {
    const auto ff = fields.far_field(m, t.directions);
    auto &p = t.projected[static_cast<std::size_t>(m)];
    p.reserve(ff.size());
    for (const auto &a : ff) p.push_back(project(a, d.polarization));
  }
  return t;
}

} // namespace

std::array<std::vector<double>, 2> map_axes(const ScenarioConfig &config) {
  const auto axes = effective_axes(config);
  return {axes[0].values_deg(), axes[1].values_deg()};
}

std::array<Direction, 2> detector_directions(const ScenarioConfig &config, double angle1_deg,
                                             double angle2_deg) {
  const auto axes = effective_axes(config);
  std::array<DetectorConfig, 2> d = config.detectors;
  auto set = [&](const SweepAxis &a, double v) {
    DetectorConfig &dd = d[static_cast<std::size_t>(a.detector - 1)];
    (a.angle == AngleKind::theta ? dd.theta_deg : dd.phi_deg) = v;
  };
  set(axes[0], angle1_deg);
  set(axes[1], angle2_deg);
  return {d[0].direction(), d[1].direction()};
}

ModeAmplitudeSet mode_amplitudes(const ScenarioConfig &config, const FieldProvider &fields,
                                 const std::array<Direction, 2> &detectors) {
  const std::array<Direction, 1> r1{detectors[0]};
  const std::array<Direction, 1> r2{detectors[1]};
  const auto &pa = config.detectors[0].polarization;
  const auto &pb = config.detectors[1].polarization;
  ModeAmplitudeSet s;
  s.a1 = project(fields.far_field(0, r1)[0], pa);
  s.a2 = project(fields.far_field(1, r1)[0], pa);
  s.b1 = project(fields.far_field(0, r2)[0], pb);
  s.b2 = project(fields.far_field(1, r2)[0], pb);
  s.omega1 = s.omega2 = config.omega();
  return s;
}

CorrelationMap sweep_g2_map(const ScenarioConfig &config, const FieldProvider &fields, bool classical) {
  const auto axes = effective_axes(config);
  const std::array<std::vector<double>, 2> values{axes[0].values_deg(), axes[1].values_deg()};
  const DetectorTable t1 = detector_table(config, fields, 1, axes, values);
  const DetectorTable t2 = detector_table(config, fields, 2, axes, values);

  CorrelationMap map;
  map.axis1 = values[0];
  map.axis2 = values[1];
  const std::size_t n1 = values[0].size(), n2 = values[1].size();
  map.values.assign(n1 * n2, 0.0);
  std::vector<char> undefined(n1 * n2, 0);
  const double w = config.omega();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(n1 * n2); ++idx) {
    const auto i = static_cast<std::size_t>(idx) / n2;
    const auto j = static_cast<std::size_t>(idx) % n2;
    const std::size_t k1 = t1.index(i, j), k2 = t2.index(i, j);
    const ModeAmplitudeSet s{t1.projected[0][k1], t1.projected[1][k1], t2.projected[0][k2],
                             t2.projected[1][k2], w, w};
    if (classical) {
      map.values[static_cast<std::size_t>(idx)] = classical_p2(s);
      continue;
    }
    try {
      map.values[static_cast<std::size_t>(idx)] = g2(s);
    } catch (const UndefinedCorrelationError &) {
      map.values[static_cast<std::size_t>(idx)] = std::numeric_limits<double>::quiet_NaN();
      undefined[static_cast<std::size_t>(idx)] = 1;
    }
  }

  if (classical) {
    const double peak = *std::max_element(map.values.begin(), map.values.end());
    for (std::size_t k = 0; k < map.values.size(); ++k) {
      if (peak > 0.0) {
        map.values[k] /= peak;
      } else {
        map.values[k] = std::numeric_limits<double>::quiet_NaN();
        undefined[k] = 1;
      }
    }
  }
  map.undefined.assign(undefined.begin(), undefined.end());
  return map;
}

CorrelationMap sweep_g2_map(const ScenarioConfig &config) {
  if (config.oracle == OracleMode::mie) return sweep_g2_map(config, MieFieldProvider(config));
  return sweep_g2_map(config, solve_modes(config));
}

double map_relative_l2(const CorrelationMap &test, const CorrelationMap &reference) {
  if (test.values.size() != reference.values.size())
    throw InvalidArgumentError("maps have different shapes");
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < test.values.size(); ++k) {
    if (test.undefined[k] || reference.undefined[k]) continue;
    const double d = test.values[k] - reference.values[k];
    num += d * d;
    den += reference.values[k] * reference.values[k];
  }
  if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------------------------
// Scenario runs

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json primitive_json(const Primitive &p) {
  auto eps = [](cdouble e) { return json::array({e.real(), e.imag()}); };
  auto vec = [](const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); };
  return std::visit(
      [&](const auto &q) -> json {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, SpherePrimitive>) {
          return {{"type", "sphere"}, {"center", vec(q.center)}, {"radius", q.radius}, {"eps", eps(q.rel_eps)}};
        } else if constexpr (std::is_same_v<T, SlabPrimitive>) {
          return {{"type", "slab"}, {"min", vec(q.min_corner)}, {"max", vec(q.max_corner)}, {"eps", eps(q.rel_eps)}};
        } else if constexpr (std::is_same_v<T, FinPrimitive>) {
          return {{"type", "fin"}, {"center", vec(q.center)}, {"length", q.length}, {"width", q.width},
                  {"height", q.height}, {"rotation_rad", q.rotation}, {"eps", eps(q.rel_eps)}};
        } else {
          const PBPLayout &L = q.layout;
          return {{"type", "pbp_array"}, {"wavelength", q.wavelength}, {"center", vec(q.center)},
                  {"period", L.period}, {"fin_height", L.fin_height}, {"fin_length", L.fin_length},
                  {"fin_width", L.fin_width}, {"deflection_angle_deg", rad2deg(L.deflection_angle)},
                  {"fins_per_group", L.fins_per_group}, {"groups_x", L.groups_x},
                  {"groups_y", L.groups_y}, {"fin_index", L.fin_index},
                  {"substrate_index", L.substrate_index}, {"substrate_thickness", L.substrate_thickness}};
        }
      },
      p);
}

json resolved_json(const ScenarioConfig &c) {
  json prims = json::array();
  for (const auto &p : c.scene.primitives) prims.push_back(primitive_json(p));
  json modes = json::array();
  for (const auto &m : c.modes)
    modes.push_back({{"direction", {m.direction.x(), m.direction.y(), m.direction.z()}},
                     {"polarization", {m.polarization.x(), m.polarization.y(), m.polarization.z()}}});
  json dets = json::array();
  for (const auto &d : c.detectors)
    dets.push_back({{"theta_deg", d.theta_deg}, {"phi_deg", d.phi_deg}, {"polarization", to_string(d.polarization)}});
  json sweep = json::array();
  for (const auto &a : effective_axes(c))
    sweep.push_back({{"axis", a.label()}, {"start_deg", a.start_deg}, {"stop_deg", a.stop_deg}, {"step_deg", a.step_deg}});
  json outputs = json::array();
  for (OutputKind k : c.outputs) outputs.push_back(to_string(k));
  json points = json::array();
  for (const auto &p : c.coincidence.points) points.push_back({p[0], p[1]});
  return {{"frequency_hz", c.frequency_hz},
          {"scene", {{"spacing", c.scene.spacing}, {"padding", c.scene.padding}, {"primitives", prims}}},
          {"modes", modes},
          {"detectors", dets},
          {"map_axes", sweep},
          {"outputs", outputs},
          {"packet", {{"sigma_s", c.packet.sigma}, {"omega0_rad_s", c.packet.omega0},
                      {"carrier", c.packet.carrier == CarrierMode::dropped ? "dropped" : "retained"}}},
          {"coincidence", {{"points_deg", points}, {"start_sigma", c.coincidence.start_sigma},
                           {"stop_sigma", c.coincidence.stop_sigma}, {"step_sigma", c.coincidence.step_sigma}}},
          {"solver", {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter},
                      {"precond", to_string(c.solver.precond)},
                      {"blocks", {c.solver.blocks[0], c.solver.blocks[1], c.solver.blocks[2]}},
                      {"deterministic", c.solver.deterministic},
                      {"memory_budget_bytes", c.solver.memory_budget},
                      {"threads", c.threads}}},
          {"oracle", to_string(c.oracle)}};
}

std::string common_header(const ScenarioConfig &c, const std::string &table, OracleMode oracle) {
  std::ostringstream h;
  h << "# homfield " << table << "\n";
  h << "# oracle: " << to_string(oracle) << "\n";
  h << "# frequency_hz: " << num(c.frequency_hz) << "\n";
  h << "# polarization_a: " << to_string(c.detectors[0].polarization) << "\n";
  h << "# polarization_b: " << to_string(c.detectors[1].polarization) << "\n";
  for (std::size_t i = 0; i < 2; ++i)
    h << "# detector" << i + 1 << ": theta_deg=" << num(c.detectors[i].theta_deg)
      << " phi_deg=" << num(c.detectors[i].phi_deg) << "\n";
  return h.str();
}

std::string map_table(const ScenarioConfig &c, const CorrelationMap &map, OracleMode oracle, bool classical) {
  const auto axes = effective_axes(c);
  std::ostringstream t;
  t << common_header(c, classical ? "p2_map" : "g2_map", oracle);
  t << "# axis1: " << axes[0].label() << "\n# axis2: " << axes[1].label() << "\n";
  if (classical) t << "# normalization: divided by the map maximum\n";
  t << "# columns: angle1_deg angle2_deg " << (classical ? "p2_normalized" : "g2") << " undefined\n";
  for (std::size_t i = 0; i < map.axis1.size(); ++i)
    for (std::size_t j = 0; j < map.axis2.size(); ++j) {
      const std::size_t k = i * map.axis2.size() + j;
      t << num(map.axis1[i]) << ' ' << num(map.axis2[j]) << ' ' << num(map.values[k]) << ' '
        << (map.undefined[k] ? 1 : 0) << '\n';
    }
  return t.str();
}

std::vector<std::array<double, 2>> coincidence_points(const ScenarioConfig &c) {
  if (!c.coincidence.points.empty()) return c.coincidence.points;
  const auto axes = effective_axes(c);
  return {{axes[0].start_deg, axes[1].start_deg}};
}

std::vector<double> coincidence_delays(const ScenarioConfig &c) {
  const CoincidenceConfig &cc = c.coincidence;
  std::vector<double> d;
  const auto n = static_cast<std::size_t>(std::floor((cc.stop_sigma - cc.start_sigma) / cc.step_sigma + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) d.push_back((cc.start_sigma + static_cast<double>(i) * cc.step_sigma) * c.packet.sigma);
  return d;
}

std::string coincidence_table(const ScenarioConfig &c, const FieldProvider &fields) {
  const auto axes = effective_axes(c);
  std::ostringstream t;
  t << common_header(c, "coincidence_curve", fields.oracle());
  t << "# sigma_s: " << num(c.packet.sigma) << "\n# omega0_rad_s: " << num(c.packet.omega0) << "\n";
  t << "# carrier: " << (c.packet.carrier == CarrierMode::dropped ? "dropped" : "retained") << "\n";
  t << "# axis1: " << axes[0].label() << "\n# axis2: " << axes[1].label() << "\n";
  t << "# columns: angle1_deg angle2_deg g2 delta_tau_s Nc undefined\n";
  const auto delays = coincidence_delays(c);
  for (const auto &p : coincidence_points(c)) {
    const ModeAmplitudeSet s = mode_amplitudes(c, fields, detector_directions(c, p[0], p[1]));
    double g = std::numeric_limits<double>::quiet_NaN();
    try {
      g = g2(s);
    } catch (const UndefinedCorrelationError &) {
    }
    const CoincidenceCurve curve = coincidence_curve(s, c.packet, delays);
    for (std::size_t k = 0; k < delays.size(); ++k)
      t << num(p[0]) << ' ' << num(p[1]) << ' ' << num(g) << ' ' << num(delays[k]) << ' '
        << (curve.undefined[k] ? "nan" : num(curve.values[k])) << ' ' << (curve.undefined[k] ? 1 : 0) << '\n';
  }
  return t.str();
}

std::vector<Direction> read_directions(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("farfield_directions", 0, "cannot open '" + path.string() + "'");
  std::vector<Direction> dirs;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double t = 0.0, p = 0.0;
    if (!(ls >> t >> p))
      throw ConfigError("farfield_directions", n, "expected 'theta_deg phi_deg' in " + path.string());
    dirs.push_back(normalized_direction(deg2rad(t), deg2rad(p)));
  }
  return dirs;
}

std::string farfield_table(const ScenarioConfig &c, const FieldProvider &fields) {
  std::vector<Direction> dirs;
  if (c.directions_file) {
    dirs = read_directions(*c.directions_file);
  } else {
    const auto axes = effective_axes(c);
    for (double a : axes[0].values_deg())
      for (double b : axes[1].values_deg())
        for (const Direction &d : detector_directions(c, a, b)) dirs.push_back(d);
    std::vector<Direction> unique;
    for (const Direction &d : dirs)
      if (std::none_of(unique.begin(), unique.end(),
                       [&](const Direction &u) { return u.theta == d.theta && u.phi == d.phi; }))
        unique.push_back(d);
    dirs = std::move(unique);
  }
  std::ostringstream t;
  t << common_header(c, "farfield_dump", fields.oracle());
  t << "# columns: mode theta_deg phi_deg re_E_theta im_E_theta re_E_phi im_E_phi re_proj_a im_proj_a re_proj_b im_proj_b\n";
  for (int m = 0; m < 2; ++m) {
    const auto ff = fields.far_field(m, dirs);
    for (const auto &a : ff) {
      const cdouble pa = project(a, c.detectors[0].polarization);
      const cdouble pb = project(a, c.detectors[1].polarization);
      t << m + 1 << ' ' << num(rad2deg(a.direction.theta)) << ' ' << num(rad2deg(a.direction.phi)) << ' '
        << num(a.e_theta.real()) << ' ' << num(a.e_theta.imag()) << ' ' << num(a.e_phi.real()) << ' '
        << num(a.e_phi.imag()) << ' ' << num(pa.real()) << ' ' << num(pa.imag()) << ' '
        << num(pb.real()) << ' ' << num(pb.imag()) << '\n';
    }
  }
  return t.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char *kind_name(RunKind k) {
  switch (k) {
  case RunKind::run: return "run";
  case RunKind::sweep: return "sweep";
  case RunKind::oracle_check: return "oracle-check";
  }
  return "?";
}

} // namespace

ScenarioResult run_scenario(const ScenarioConfig &config, const fs::path &out_dir, RunKind kind) {
  const auto t_start = std::chrono::steady_clock::now();
  if (config.threads > 0) set_thread_count(config.threads);
  fs::create_directories(out_dir);

  ScenarioResult result;
  result.run_dir = out_dir;

  OracleMode oracle = config.oracle;
  std::set<OutputKind> outputs = config.outputs;
  if (kind == RunKind::sweep) {
    std::set<OutputKind> maps{OutputKind::g2_map};
    if (outputs.count(OutputKind::p2_map)) maps.insert(OutputKind::p2_map);
    outputs = maps;
  } else if (kind == RunKind::oracle_check) {
    require_mie_compatible(config, 0);
    oracle = OracleMode::both;
    outputs = {OutputKind::g2_map};
  }

  json manifest;
  manifest["tool"] = "homfield";
  manifest["version"] = version_string();
  manifest["command"] = kind_name(kind);
  manifest["config_text"] = config.source_text;
  if (!config.scene_text.empty()) manifest["scene_text"] = config.scene_text;
  manifest["resolved_config"] = resolved_json(config);
  manifest["resolved_config"]["oracle"] = to_string(oracle);
  json walls = json::object();

  auto write_manifest = [&] {
    walls["total"] = seconds_since(t_start);
    manifest["wall_seconds"] = walls;
    json tables = json::array();
    for (const auto &p : result.tables) tables.push_back(p.filename().string());
    manifest["tables"] = tables;
    manifest["status"] = result.ok ? "ok" : "failed";
    if (!result.ok) manifest["failure"] = result.failure;
    write_text_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  };

  std::vector<std::unique_ptr<FieldProvider>> providers;
  if (oracle != OracleMode::mie) {
    const auto t0 = std::chrono::steady_clock::now();
    std::array<ModeSolveRecord, 2> rec;
    try {
      providers.push_back(std::make_unique<VieFieldProvider>(solve_modes(config, &rec)));
    } catch (const NonConvergenceError &e) {
      result.failure = e.what();
      manifest["solves"] = {{"error", e.what()}, {"best_residual", e.best_residual()},
                            {"iterations", e.iterations()}};
      walls["solve"] = seconds_since(t0);
      write_manifest();
      return result;
    }
    walls["solve"] = seconds_since(t0);
    json solves = json::array();
    for (int m = 0; m < 2; ++m) {
      json r = report_json(rec[static_cast<std::size_t>(m)].report);
      r["mode"] = m + 1;
      r["cached"] = rec[static_cast<std::size_t>(m)].cached;
      solves.push_back(r);
    }
    manifest["solves"] = solves;
  }
  if (oracle != OracleMode::vie) providers.push_back(std::make_unique<MieFieldProvider>(config));

  const auto t_post = std::chrono::steady_clock::now();
  auto emit = [&](const std::string &name, const std::string &text) {
    const fs::path p = out_dir / name;
    write_text_atomic(p, text);
    result.tables.push_back(p);
  };

  std::vector<CorrelationMap> g2_maps;
  for (const auto &f : providers) {
    const std::string tag = to_string(f->oracle());
    if (outputs.count(OutputKind::g2_map)) {
      g2_maps.push_back(sweep_g2_map(config, *f));
      emit("g2_map_" + tag + ".tsv", map_table(config, g2_maps.back(), f->oracle(), false));
    }
    if (outputs.count(OutputKind::p2_map))
      emit("p2_map_" + tag + ".tsv", map_table(config, sweep_g2_map(config, *f, true), f->oracle(), true));
    if (outputs.count(OutputKind::coincidence_curve))
      emit("coincidence_" + tag + ".tsv", coincidence_table(config, *f));
    if (outputs.count(OutputKind::farfield_dump))
      emit("farfield_" + tag + ".tsv", farfield_table(config, *f));
  }
  if (oracle == OracleMode::both && g2_maps.size() == 2) {
    result.oracle_l2 = map_relative_l2(g2_maps[0], g2_maps[1]);
    emit("oracle_summary.txt", "# homfield oracle comparison\ng2_relative_l2_vie_vs_mie " +
                                   num(*result.oracle_l2) + "\n");
    manifest["oracle_g2_relative_l2"] = *result.oracle_l2;
  }
  walls["post_processing"] = seconds_since(t_post);
  result.ok = true;
  write_manifest();
  return result;
}

} // namespace homfield
