#pragma once

#include "homfield/fft.hpp"
#include "homfield/green_kernel.hpp"
#include "homfield/scene.hpp"
#include "homfield/types.hpp"

#include <Eigen/LU>

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace homfield {

/// Unit-amplitude incident plane wave E = pol exp(i k dir.r).
class PlaneWaveMode {
public:
  /// Throws InvalidArgumentError unless direction and polarization are orthonormal to 1e-12.
  PlaneWaveMode(const Vec3 &direction, const Vec3 &polarization, double omega);

  const Vec3 &direction() const { return direction_; }
  const Vec3 &polarization() const { return polarization_; }
  double omega() const { return omega_; }
  double wavenumber() const { return omega_ / constants::c0; }

private:
  Vec3 direction_;
  Vec3 polarization_;
  double omega_;
};

/// One complex 3-vector per voxel of a grid, x-fastest.
struct VectorField {
  GridGeometry grid;
  std::vector<CVec3> values;

  VectorField() = default;
  explicit VectorField(const GridGeometry &g) : grid(g), values(g.voxel_count(), CVec3::Zero()) {}
};

/// Induced volumetric polarization current J^s [A/m^2].
using PolarizationCurrentField = VectorField;

enum class Preconditioner { none, diagonal, block };

std::string to_string(Preconditioner p);
Preconditioner preconditioner_from_string(const std::string &name);

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  double wall_seconds = 0.0;
  Preconditioner preconditioner = Preconditioner::none;
  int restarts = 0;
  std::vector<double> residual_history;
};

struct SolverOptions {
  double tol = 1e-6;
  int max_iter = 1000;
  Preconditioner precond = Preconditioner::none;
  Index3 blocks{1, 1, 1};
  /// Fixed-order reductions and estimate-mode FFT plans so runs are bit-reproducible.
  bool deterministic = false;
  std::size_t memory_budget = kDefaultMemoryBudget;
};

/// E^inc sampled at every voxel center.
VectorField incident_field(const PlaneWaveMode &mode, const DielectricScene &scene);

/// Matrix-free VIE operator restricted to the material voxels of a scene.
///
/// Unknowns are packed as [voxel][component] over scene.material_voxels(); the operator is
/// -J/(i w (eps - eps0)) - i w mu0 h^3 sum_j K(r_i - r_j) J_j with the kernel's zero-offset
/// entry carrying the cell self coupling.
class VieOperator {
public:
  VieOperator(const DielectricScene &scene, const GreenKernel &kernel, double omega,
              bool measure_plans = false);
  ~VieOperator();

  std::size_t size() const { return 3 * scene_.material_count(); }
  const DielectricScene &scene() const { return scene_; }
  const GreenKernel &kernel() const { return kernel_; }
  double omega() const { return omega_; }

  void apply(std::span<const cdouble> x, std::span<cdouble> y) const;

  /// Local term coefficient -1/(i w (eps_r - 1) eps0) for material voxel m.
  cdouble local_coefficient(std::size_t m) const { return local_[m]; }
  /// Prefactor -i w mu0 applied to the Green integral.
  cdouble coupling_prefactor() const;

private:
  const DielectricScene &scene_;
  const GreenKernel &kernel_;
  double omega_;
  std::vector<cdouble> local_;
  std::unique_ptr<Fft3> fft_;
  mutable std::array<SpectralBuffer, 3> work_;
};

/// Convenience wrapper over VieOperator acting on full-grid fields (zero off-material).
VectorField apply_operator(const PolarizationCurrentField &J, const DielectricScene &scene,
                           const GreenKernel &kernel, double omega);

/// Gather / scatter between full-grid fields and packed material unknowns.
std::vector<cdouble> pack_material(const VectorField &field, const DielectricScene &scene);
VectorField unpack_material(std::span<const cdouble> packed, const DielectricScene &scene);

/// Dense operator entry block coupling material voxels (target, source) as a 3x3 dyad.
Dyad operator_block(const DielectricScene &scene, double omega, std::size_t target_voxel,
                    std::size_t source_voxel, cdouble local_coefficient);

/// Approximate inverse applied as z = M^{-1} r.
class PreconditionerOp {
public:
  virtual ~PreconditionerOp() = default;
  virtual void apply(std::span<const cdouble> r, std::span<cdouble> z) const = 0;
  virtual Preconditioner kind() const = 0;
};

std::unique_ptr<PreconditionerOp> build_diagonal_preconditioner(const VieOperator &op);

/// Partitions the material bounding box into blocks[0] x blocks[1] x blocks[2] subdomains and
/// LU-factorizes each restricted dense operator. Throws ResourceError when the factors would
/// exceed `memory_budget` bytes.
std::unique_ptr<PreconditionerOp>
build_block_preconditioner(const VieOperator &op, const Index3 &blocks,
                           std::size_t memory_budget = kDefaultMemoryBudget);

struct SolveResult {
  PolarizationCurrentField current;
  SolveReport report;
};

/// BiCGStab on the packed system with right preconditioning, so the reported residual is
/// the true relative residual ||A J - E^inc|| / ||E^inc|| over material voxels.
/// Throws NonConvergenceError on max_iter or a repeated breakdown.
std::vector<cdouble> bicgstab(const VieOperator &op, std::span<const cdouble> rhs,
                              const PreconditionerOp *precond, const SolverOptions &options,
                              SolveReport &report, std::span<const cdouble> initial_guess = {});

/// Solves for a prebuilt kernel (reusable across modes of the same frequency).
SolveResult solve(const DielectricScene &scene, const GreenKernel &kernel,
                  const PlaneWaveMode &mode, const SolverOptions &options);

/// Builds the kernel for the mode's frequency and solves.
SolveResult solve(const DielectricScene &scene, const PlaneWaveMode &mode,
                  const SolverOptions &options);

/// Current-field dump: text header ("HOMFIELD-CURRENT 1", dims, spacing, origin, "end")
/// followed by little-endian f64 complex triples (Jx, Jy, Jz as re/im pairs), x-fastest.
void write_current_dump(const PolarizationCurrentField &J, const std::filesystem::path &path);
PolarizationCurrentField read_current_dump(const std::filesystem::path &path);

} // namespace homfield
