#pragma once

#include "homfield/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace homfield {

/// Uniform Cartesian voxel grid. Voxel (i,j,k) is centered at origin + spacing*(i,j,k);
/// linear indices run x-fastest.
struct GridGeometry {
  Index3 dims{1, 1, 1};
  double spacing = 0.0;
  Vec3 origin = Vec3::Zero();

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t linear_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) +
                                                static_cast<std::size_t>(dims[1]) * k);
  }
  Index3 unravel(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
            static_cast<int>(idx / (nx * ny))};
  }
  Vec3 center(int i, int j, int k) const {
    return origin + spacing * Vec3(i, j, k);
  }
  Vec3 center(std::size_t idx) const {
    const auto c = unravel(idx);
    return center(c[0], c[1], c[2]);
  }
  double cell_volume() const { return spacing * spacing * spacing; }

  bool operator==(const GridGeometry &other) const {
    return dims == other.dims && spacing == other.spacing && origin == other.origin;
  }
};

/// Voxelized relative permittivity map. Immutable once built.
class DielectricScene {
public:
  DielectricScene(GridGeometry grid, std::vector<cdouble> rel_eps,
                  std::vector<std::string> warnings = {});

  const GridGeometry &grid() const { return grid_; }
  std::span<const cdouble> rel_permittivity() const { return rel_eps_; }
  cdouble rel_permittivity(std::size_t voxel) const { return rel_eps_[voxel]; }

  /// Linear indices of voxels whose permittivity differs from free space, ascending.
  const std::vector<std::size_t> &material_voxels() const { return material_; }
  std::size_t material_count() const { return material_.size(); }

  /// Inclusive index bounds of the material voxels; undefined when there is no material.
  Index3 material_min() const { return mat_min_; }
  Index3 material_max() const { return mat_max_; }

  bool lossless() const;
  double filled_volume() const { return static_cast<double>(material_.size()) * grid_.cell_volume(); }

  /// Non-fatal construction diagnostics (e.g. overlapping rotated fins).
  const std::vector<std::string> &warnings() const { return warnings_; }

  /// Stable 64-bit FNV-1a digest of grid geometry and permittivities.
  std::uint64_t content_hash() const;

private:
  GridGeometry grid_;
  std::vector<cdouble> rel_eps_;
  std::vector<std::size_t> material_;
  Index3 mat_min_{0, 0, 0};
  Index3 mat_max_{-1, -1, -1};
  std::vector<std::string> warnings_;
};

/// Pancharatnam-Berry nanofin array. Fins are laid out along x (fin index m) and
/// repeated in rows along y; each fin is a box rotated about z by theta_m.
struct PBPLayout {
  double period = 667e-9;
  double fin_height = 830e-9;
  double fin_length = 486e-9;
  double fin_width = 219e-9;
  double deflection_angle = deg2rad(10.0);
  int fins_per_group = 13;
  int groups_x = 1;
  int groups_y = 1;
  double fin_index = 3.44;
  /// Interpreted as a refractive index (permittivity = n^2). The published value 2.25 may
  /// have been meant as a permittivity; override here if so.
  double substrate_index = 2.25;
  double substrate_thickness = 0.0;

  int fin_count_x() const { return fins_per_group * groups_x; }
  int row_count() const { return groups_y; }
};

struct SpherePrimitive {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  cdouble rel_eps{1.0, 0.0};
};

/// Axis-aligned box.
struct SlabPrimitive {
  Vec3 min_corner = Vec3::Zero();
  Vec3 max_corner = Vec3::Zero();
  cdouble rel_eps{1.0, 0.0};
};

/// Box rotated about the vertical axis through its center.
struct FinPrimitive {
  Vec3 center = Vec3::Zero();
  double length = 0.0; ///< along the rotated local x axis
  double width = 0.0;  ///< along the rotated local y axis
  double height = 0.0;
  double rotation = 0.0;
  cdouble rel_eps{1.0, 0.0};
};

/// Nanofin array whose fin bases sit on the plane z = top_z, centered laterally on `center`.
struct PbpArrayPrimitive {
  PBPLayout layout;
  double wavelength = 1550e-9;
  Vec3 center = Vec3::Zero();
};

using Primitive = std::variant<SpherePrimitive, SlabPrimitive, FinPrimitive, PbpArrayPrimitive>;

struct SceneDescription {
  std::vector<Primitive> primitives;
  double spacing = 0.0;
  int padding = 2;
};

/// Voxelizes the primitives in order; a later primitive overwrites earlier ones.
DielectricScene build_scene(const SceneDescription &description);

DielectricScene build_sphere(double radius, cdouble rel_eps, double spacing, int padding = 2);

DielectricScene build_pbp_metasurface(const PBPLayout &layout, double spacing, double wavelength,
                                      int padding = 2);

/// Geometric-phase design rule: theta_m = k0 sin(theta_t) m p / 2.
double pbp_rotation_angle(int m, double period, double deflection_angle, double k0);

/// Expands a PBP array into its substrate slab and fin boxes (substrate first).
std::vector<Primitive> expand_pbp_array(const PbpArrayPrimitive &array,
                                        std::vector<std::string> *warnings = nullptr);

} // namespace homfield
