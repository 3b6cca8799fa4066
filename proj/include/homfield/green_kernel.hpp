#pragma once

#include "homfield/fft.hpp"
#include "homfield/types.hpp"

#include <array>
#include <cstddef>
#include <filesystem>

namespace homfield {

/// Free-space dyadic Green's function (I + grad grad / k0^2) e^{ik0 R} / (4 pi R) at a
/// nonzero separation. Throws SingularityError for a zero offset.
Dyad eval_green_dyad(const Vec3 &offset, double k0);

/// Volume integral of the dyadic Green's function over a spherical cell of the same volume
/// as a cubic voxel, excluding the delta-function part: (2/(3k0^2)) [(1 - ik0a) e^{ik0a} - 1] I
/// with a = spacing (3/(4 pi))^{1/3}.
Dyad self_interaction_term(double spacing, double k0);

/// Radius of the sphere with the volume of a cubic cell of edge `spacing`.
double equivalent_cell_radius(double spacing);

/// Full zero-offset cell coupling: the principal-value integral above minus the
/// depolarization dyad L/k0^2 with L = I/3.
Dyad cell_self_coupling(double spacing, double k0);

/// Unique dyad components in storage order.
enum class DyadComponent : int { xx = 0, xy, xz, yy, yz, zz };

/// Storage slot of dyad entry (row, col).
int dyad_slot(int row, int col);

/// Translation-invariant voxel interaction kernel, circulant-embedded and transformed.
///
/// The embedded real-space kernel holds eval_green_dyad at every voxel-center offset and
/// cell_self_coupling / spacing^3 at offset zero, so multiplying the convolution by the cell
/// volume yields the discretized Green integral.
class GreenKernel {
public:
  GreenKernel(Index3 scene_dims, double spacing, double k0);

  const Index3 &scene_dims() const { return scene_dims_; }
  const Index3 &fft_dims() const { return fft_dims_; }
  double spacing() const { return spacing_; }
  double k0() const { return k0_; }
  const Dyad &self_term() const { return self_term_; }

  std::size_t fft_size() const {
    return static_cast<std::size_t>(fft_dims_[0]) * fft_dims_[1] * fft_dims_[2];
  }
  const SpectralBuffer &spectrum(DyadComponent c) const { return spectra_[static_cast<int>(c)]; }
  SpectralBuffer &spectrum(DyadComponent c) { return spectra_[static_cast<int>(c)]; }
  const std::array<SpectralBuffer, 6> &spectra() const { return spectra_; }

  /// Bytes held by the six spectral arrays.
  std::size_t bytes() const { return 6 * fft_size() * sizeof(cdouble); }

private:
  Index3 scene_dims_;
  Index3 fft_dims_;
  double spacing_;
  double k0_;
  Dyad self_term_;
  std::array<SpectralBuffer, 6> spectra_;
};

/// Circulant embedding size for a grid axis of n voxels.
int embedding_size(int n);

/// Bytes a kernel for these dims would occupy.
std::size_t kernel_bytes(const Index3 &scene_dims);

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{3} << 30;

/// Samples, embeds and transforms the kernel for a grid of `scene_dims` voxels.
/// Throws ResourceError when the kernel would exceed `memory_budget` bytes.
GreenKernel build_toeplitz_kernel(const Index3 &scene_dims, double spacing, double k0,
                                  std::size_t memory_budget = kDefaultMemoryBudget);

/// Binary kernel cache: magic "HFKERNEL", then dims (3 x f64), spacing, k0 as little-endian
/// IEEE-754 doubles, then the spectral arrays (interleaved re/im f64) in xx,xy,xz,yy,yz,zz order.
void save_kernel(const GreenKernel &kernel, const std::filesystem::path &path);

/// Loads a cached kernel; throws IoError when the file is unreadable or its key
/// (dims, spacing, k0) differs from the requested one.
GreenKernel load_kernel(const std::filesystem::path &path, const Index3 &scene_dims,
                        double spacing, double k0);

} // namespace homfield
