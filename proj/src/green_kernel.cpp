#include "homfield/green_kernel.hpp"

#include "homfield/errors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

namespace homfield {

namespace {

static_assert(std::endian::native == std::endian::little,
              "kernel cache I/O assumes a little-endian host");

constexpr char kKernelMagic[8] = {'H', 'F', 'K', 'E', 'R', 'N', 'E', 'L'};

void write_f64(std::ostream &os, double v) { os.write(reinterpret_cast<const char *>(&v), 8); }

double read_f64(std::istream &is) {
  double v = 0.0;
  is.read(reinterpret_cast<char *>(&v), 8);
  return v;
}

} // namespace

Dyad eval_green_dyad(const Vec3 &offset, double k0) {
  const double R = offset.norm();
  if (!(R > 0.0)) throw SingularityError("dyadic Green's function is singular at zero offset");
  const Vec3 rhat = offset / R;
  const double kr = k0 * R;
  const cdouble g = std::exp(kI * kr) / (4.0 * kPi * R);
  const cdouble ikr = kI / kr;
  const double inv_kr2 = 1.0 / (kr * kr);
  // (I + grad grad / k^2) g = g [A I + B rhat rhat]
  const cdouble A = 1.0 + ikr - inv_kr2;
  const cdouble B = -1.0 - 3.0 * ikr + 3.0 * inv_kr2;
  Dyad G = (B * g) * (rhat * rhat.transpose()).cast<cdouble>();
  G.diagonal().array() += A * g;
  return G;
}

double equivalent_cell_radius(double spacing) {
  return spacing * std::cbrt(3.0 / (4.0 * kPi));
}

Dyad self_interaction_term(double spacing, double k0) {
  if (!(spacing > 0.0)) throw InvalidArgumentError("spacing must be positive");
  const double a = equivalent_cell_radius(spacing);
  const cdouble ika = kI * (k0 * a);
  const cdouble value = 2.0 / (3.0 * k0 * k0) * ((1.0 - ika) * std::exp(ika) - 1.0);
  return value * Dyad::Identity();
}

Dyad cell_self_coupling(double spacing, double k0) {
  return self_interaction_term(spacing, k0) - Dyad::Identity() / (3.0 * k0 * k0);
}

int dyad_slot(int row, int col) {
  static constexpr int slots[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return slots[row][col];
}

int embedding_size(int n) { return next_fast_fft_size(2 * n - 1); }

std::size_t kernel_bytes(const Index3 &scene_dims) {
  std::size_t n = 6 * sizeof(cdouble);
  for (int d : scene_dims) n *= static_cast<std::size_t>(embedding_size(d));
  return n;
}

GreenKernel::GreenKernel(Index3 scene_dims, double spacing, double k0)
    : scene_dims_(scene_dims), spacing_(spacing), k0_(k0),
      self_term_(cell_self_coupling(spacing, k0)) {
  for (int a = 0; a < 3; ++a) fft_dims_[a] = embedding_size(scene_dims_[a]);
  for (auto &s : spectra_) s.assign(fft_size(), cdouble{});
}

GreenKernel build_toeplitz_kernel(const Index3 &scene_dims, double spacing, double k0,
                                  std::size_t memory_budget) {
  for (int d : scene_dims)
    if (d < 1) throw InvalidArgumentError("kernel dims must be >= 1");
  if (!(spacing > 0.0) || !(k0 > 0.0))
    throw InvalidArgumentError("kernel spacing and k0 must be positive");
  const std::size_t need = kernel_bytes(scene_dims);
  if (need > memory_budget)
    throw ResourceError("Green kernel needs " + std::to_string(need) +
                            " bytes, above the memory budget of " +
                            std::to_string(memory_budget),
                        need);

  GreenKernel kernel(scene_dims, spacing, k0);
  const Index3 M = kernel.fft_dims();
  const Dyad self = kernel.self_term() / (spacing * spacing * spacing);
  std::array<cdouble *, 6> spectra{};
  for (int c = 0; c < 6; ++c) spectra[c] = kernel.spectrum(static_cast<DyadComponent>(c)).data();

  const int nx = scene_dims[0], ny = scene_dims[1], nz = scene_dims[2];
#pragma omp parallel for schedule(static)
  for (int dz = -(nz - 1); dz <= nz - 1; ++dz) {
    const std::size_t iz = static_cast<std::size_t>(dz < 0 ? dz + M[2] : dz);
    for (int dy = -(ny - 1); dy <= ny - 1; ++dy) {
      const std::size_t iy = static_cast<std::size_t>(dy < 0 ? dy + M[1] : dy);
      for (int dx = -(nx - 1); dx <= nx - 1; ++dx) {
        const std::size_t ix = static_cast<std::size_t>(dx < 0 ? dx + M[0] : dx);
        const std::size_t idx = ix + static_cast<std::size_t>(M[0]) * (iy + M[1] * iz);
        const Dyad G = (dx == 0 && dy == 0 && dz == 0)
                           ? self
                           : eval_green_dyad(spacing * Vec3(dx, dy, dz), k0);
        spectra[0][idx] = G(0, 0);
        spectra[1][idx] = G(0, 1);
        spectra[2][idx] = G(0, 2);
        spectra[3][idx] = G(1, 1);
        spectra[4][idx] = G(1, 2);
        spectra[5][idx] = G(2, 2);
      }
    }
  }

  Fft3 fft(M);
  for (cdouble *s : spectra) fft.forward(s);
  return kernel;
}

void save_kernel(const GreenKernel &kernel, const std::filesystem::path &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open kernel cache for writing: " + path.string());
  os.write(kKernelMagic, sizeof kKernelMagic);
  for (int d : kernel.scene_dims()) write_f64(os, d);
  write_f64(os, kernel.spacing());
  write_f64(os, kernel.k0());
  for (const auto &s : kernel.spectra())
    os.write(reinterpret_cast<const char *>(s.data()),
             static_cast<std::streamsize>(s.size() * sizeof(cdouble)));
  if (!os) throw IoError("failed writing kernel cache: " + path.string());
}

GreenKernel load_kernel(const std::filesystem::path &path, const Index3 &scene_dims,
                        double spacing, double k0) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open kernel cache: " + path.string());
  char magic[8] = {};
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kKernelMagic, sizeof magic) != 0)
    throw IoError("not a kernel cache file: " + path.string());
  Index3 dims{};
  for (int &d : dims) d = static_cast<int>(read_f64(is));
  const double h = read_f64(is);
  const double k = read_f64(is);
  if (!is || dims != scene_dims || h != spacing || k != k0)
    throw IoError("kernel cache key mismatch: " + path.string());

  GreenKernel kernel(scene_dims, spacing, k0);
  for (int c = 0; c < 6; ++c) {
    auto &s = kernel.spectrum(static_cast<DyadComponent>(c));
    is.read(reinterpret_cast<char *>(s.data()),
            static_cast<std::streamsize>(s.size() * sizeof(cdouble)));
  }
  if (!is) throw IoError("truncated kernel cache: " + path.string());
  return kernel;
}

} // namespace homfield
