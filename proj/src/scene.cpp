#include "homfield/scene.hpp"

#include "homfield/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace homfield {

namespace {

constexpr cdouble kFreeSpace{1.0, 0.0};

struct Bounds {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Vec3 &a, const Vec3 &b) {
    lo = lo.cwiseMin(a);
    hi = hi.cwiseMax(b);
  }
};

Vec3 fin_half_extent(const FinPrimitive &fin) {
  const double c = std::abs(std::cos(fin.rotation));
  const double s = std::abs(std::sin(fin.rotation));
  return {0.5 * (fin.length * c + fin.width * s), 0.5 * (fin.length * s + fin.width * c),
          0.5 * fin.height};
}

Bounds primitive_bounds(const Primitive &prim) {
  Bounds b;
  std::visit(
      [&](const auto &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SpherePrimitive>) {
          b.expand(p.center.array() - p.radius, p.center.array() + p.radius);
        } else if constexpr (std::is_same_v<T, SlabPrimitive>) {
          b.expand(p.min_corner, p.max_corner);
        } else if constexpr (std::is_same_v<T, FinPrimitive>) {
          const Vec3 e = fin_half_extent(p);
          b.expand(p.center - e, p.center + e);
        } else {
          for (const auto &sub : expand_pbp_array(p)) {
            const Bounds sb = primitive_bounds(sub);
            b.expand(sb.lo, sb.hi);
          }
        }
      },
      prim);
  return b;
}

void validate_primitive(const Primitive &prim) {
  std::visit(
      [](const auto &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SpherePrimitive>) {
          if (!(p.radius > 0.0)) throw InvalidGeometryError("sphere radius must be positive");
        } else if constexpr (std::is_same_v<T, SlabPrimitive>) {
          if (!((p.max_corner - p.min_corner).array() > 0.0).all())
            throw InvalidGeometryError("slab max_corner must exceed min_corner on every axis");
        } else if constexpr (std::is_same_v<T, FinPrimitive>) {
          if (!(p.length > 0.0 && p.width > 0.0 && p.height > 0.0))
            throw InvalidGeometryError("fin dimensions must be positive");
        }
      },
      prim);
}

// Index range [first, last] of voxel centers inside [lo, hi] along one axis.
std::pair<int, int> axis_range(double lo, double hi, double origin, double h, int n) {
  const int first = std::max(0, static_cast<int>(std::ceil((lo - origin) / h - 1e-9)));
  const int last = std::min(n - 1, static_cast<int>(std::floor((hi - origin) / h + 1e-9)));
  return {first, last};
}

void fill_primitive(const Primitive &prim, const GridGeometry &grid, std::vector<cdouble> &eps) {
  const Bounds b = primitive_bounds(prim);
  const auto rx = axis_range(b.lo.x(), b.hi.x(), grid.origin.x(), grid.spacing, grid.dims[0]);
  const auto ry = axis_range(b.lo.y(), b.hi.y(), grid.origin.y(), grid.spacing, grid.dims[1]);
  const auto rz = axis_range(b.lo.z(), b.hi.z(), grid.origin.z(), grid.spacing, grid.dims[2]);

  auto each_voxel = [&](auto inside, cdouble value) {
    for (int k = rz.first; k <= rz.second; ++k)
      for (int j = ry.first; j <= ry.second; ++j)
        for (int i = rx.first; i <= rx.second; ++i)
          if (inside(grid.center(i, j, k))) eps[grid.linear_index(i, j, k)] = value;
  };

  std::visit(
      [&](const auto &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SpherePrimitive>) {
          const double r2 = p.radius * p.radius;
          each_voxel([&](const Vec3 &c) { return (c - p.center).squaredNorm() <= r2; },
                     p.rel_eps);
        } else if constexpr (std::is_same_v<T, SlabPrimitive>) {
          each_voxel(
              [&](const Vec3 &c) {
                return (c.array() >= p.min_corner.array()).all() &&
                       (c.array() <= p.max_corner.array()).all();
              },
              p.rel_eps);
        } else if constexpr (std::is_same_v<T, FinPrimitive>) {
          const double cr = std::cos(p.rotation);
          const double sr = std::sin(p.rotation);
          each_voxel(
              [&](const Vec3 &c) {
                const Vec3 d = c - p.center;
                const double u = cr * d.x() + sr * d.y();
                const double v = -sr * d.x() + cr * d.y();
                return std::abs(u) <= 0.5 * p.length && std::abs(v) <= 0.5 * p.width &&
                       std::abs(d.z()) <= 0.5 * p.height;
              },
              p.rel_eps);
        } else {
          for (const auto &sub : expand_pbp_array(p)) fill_primitive(sub, grid, eps);
        }
      },
      prim);
}

void fnv1a(std::uint64_t &h, const void *data, std::size_t n) {
  const auto *bytes = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

} // namespace

DielectricScene::DielectricScene(GridGeometry grid, std::vector<cdouble> rel_eps,
                                 std::vector<std::string> warnings)
    : grid_(std::move(grid)), rel_eps_(std::move(rel_eps)), warnings_(std::move(warnings)) {
  if (!(grid_.spacing > 0.0)) throw InvalidGeometryError("grid spacing must be positive");
  for (int d : grid_.dims)
    if (d < 1) throw InvalidGeometryError("grid dimensions must be >= 1");
  if (rel_eps_.size() != grid_.voxel_count())
    throw InvalidGeometryError("permittivity array does not match grid size");

  mat_min_ = {std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
              std::numeric_limits<int>::max()};
  mat_max_ = {-1, -1, -1};
  for (std::size_t v = 0; v < rel_eps_.size(); ++v) {
    if (rel_eps_[v] == kFreeSpace) continue;
    material_.push_back(v);
    const Index3 c = grid_.unravel(v);
    for (int a = 0; a < 3; ++a) {
      mat_min_[a] = std::min(mat_min_[a], c[a]);
      mat_max_[a] = std::max(mat_max_[a], c[a]);
    }
  }
  if (material_.empty()) mat_min_ = {0, 0, 0};
}

bool DielectricScene::lossless() const {
  return std::all_of(rel_eps_.begin(), rel_eps_.end(),
                     [](cdouble e) { return e.imag() == 0.0; });
}

std::uint64_t DielectricScene::content_hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  fnv1a(h, grid_.dims.data(), sizeof(int) * 3);
  fnv1a(h, &grid_.spacing, sizeof(double));
  fnv1a(h, grid_.origin.data(), sizeof(double) * 3);
  fnv1a(h, rel_eps_.data(), rel_eps_.size() * sizeof(cdouble));
  return h;
}

double pbp_rotation_angle(int m, double period, double deflection_angle, double k0) {
  if (!(period > 0.0) || !(k0 > 0.0))
    throw InvalidArgumentError("pbp_rotation_angle requires period > 0 and k0 > 0");
  return 0.5 * k0 * std::sin(deflection_angle) * m * period;
}

std::vector<Primitive> expand_pbp_array(const PbpArrayPrimitive &array,
                                        std::vector<std::string> *warnings) {
  const PBPLayout &L = array.layout;
  if (!(L.fin_width > 0.0 && L.fin_width < L.fin_length && L.fin_length <= L.period))
    throw InvalidGeometryError("nanofin must satisfy 0 < width < length <= period");
  if (!(L.fin_height > 0.0)) throw InvalidGeometryError("nanofin height must be positive");
  if (L.fins_per_group < 1 || L.groups_x < 1 || L.groups_y < 1)
    throw InvalidGeometryError("fin and group counts must be >= 1");
  if (!(array.wavelength > 0.0)) throw InvalidGeometryError("wavelength must be positive");
  if (L.substrate_thickness < 0.0) throw InvalidGeometryError("negative substrate thickness");

  const int nx = L.fin_count_x();
  const int ny = L.row_count();
  const double k0 = 2.0 * kPi / array.wavelength;

  std::vector<Primitive> out;
  if (L.substrate_thickness > 0.0) {
    SlabPrimitive sub;
    sub.min_corner = array.center + Vec3(-0.5 * nx * L.period, -0.5 * ny * L.period,
                                         -L.substrate_thickness);
    sub.max_corner = array.center + Vec3(0.5 * nx * L.period, 0.5 * ny * L.period, 0.0);
    sub.rel_eps = L.substrate_index * L.substrate_index;
    out.emplace_back(sub);
  }
  for (int row = 0; row < ny; ++row) {
    for (int m = 0; m < nx; ++m) {
      FinPrimitive fin;
      fin.center = array.center + Vec3((m - 0.5 * (nx - 1)) * L.period,
                                       (row - 0.5 * (ny - 1)) * L.period, 0.5 * L.fin_height);
      fin.length = L.fin_length;
      fin.width = L.fin_width;
      fin.height = L.fin_height;
      fin.rotation = pbp_rotation_angle(m, L.period, L.deflection_angle, k0);
      fin.rel_eps = L.fin_index * L.fin_index;
      if (warnings != nullptr && row == 0) {
        const Vec3 e = fin_half_extent(fin);
        if (e.x() > 0.5 * L.period || e.y() > 0.5 * L.period)
          warnings->push_back("fin " + std::to_string(m) +
                              " footprint exceeds its cell; overlapping voxels take the later fin");
      }
      out.emplace_back(fin);
    }
  }
  return out;
}

DielectricScene build_scene(const SceneDescription &description) {
  const double h = description.spacing;
  if (!(h > 0.0)) throw InvalidGeometryError("grid spacing must be positive");
  if (description.padding < 0) throw InvalidGeometryError("padding must be non-negative");
  if (description.primitives.empty()) throw InvalidGeometryError("scene has no primitives");

  std::vector<std::string> warnings;
  Bounds b;
  for (const auto &prim : description.primitives) {
    validate_primitive(prim);
    if (const auto *pbp = std::get_if<PbpArrayPrimitive>(&prim)) {
      if (pbp->layout.fin_width / h < 3.0 - 1e-9)
        throw InvalidGeometryError("spacing too coarse: need >= 3 voxels across the fin width");
      expand_pbp_array(*pbp, &warnings);
    }
    const Bounds pb = primitive_bounds(prim);
    b.expand(pb.lo, pb.hi);
  }

  // Core voxel count per axis covers the bounding box; the grid is centered on it so
  // that symmetric primitives voxelize symmetrically.
  GridGeometry grid;
  grid.spacing = h;
  for (int a = 0; a < 3; ++a) {
    const double extent = b.hi[a] - b.lo[a];
    const int core = std::max(1, static_cast<int>(std::ceil(extent / h - 1e-9)));
    grid.dims[a] = core + 2 * description.padding;
    grid.origin[a] = 0.5 * (b.lo[a] + b.hi[a]) - 0.5 * (grid.dims[a] - 1) * h;
  }

  std::vector<cdouble> eps(grid.voxel_count(), kFreeSpace);
  for (const auto &prim : description.primitives) fill_primitive(prim, grid, eps);
  return DielectricScene(grid, std::move(eps), std::move(warnings));
}

DielectricScene build_sphere(double radius, cdouble rel_eps, double spacing, int padding) {
  if (!(radius > 0.0) || !(spacing > 0.0))
    throw InvalidGeometryError("sphere radius and spacing must be positive");
  if (spacing > radius)
    throw InvalidGeometryError("spacing must not exceed the radius (>= 2 voxels across)");
  SceneDescription d;
  d.spacing = spacing;
  d.padding = padding;
  d.primitives.emplace_back(SpherePrimitive{Vec3::Zero(), radius, rel_eps});
  return build_scene(d);
}

DielectricScene build_pbp_metasurface(const PBPLayout &layout, double spacing, double wavelength,
                                      int padding) {
  SceneDescription d;
  d.spacing = spacing;
  d.padding = padding;
  d.primitives.emplace_back(PbpArrayPrimitive{layout, wavelength, Vec3::Zero()});
  return build_scene(d);
}

} // namespace homfield
