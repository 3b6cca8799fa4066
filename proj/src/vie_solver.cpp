#include "homfield/vie_solver.hpp"

#include "homfield/errors.hpp"
#include "homfield/linalg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace homfield {

PlaneWaveMode::PlaneWaveMode(const Vec3 &direction, const Vec3 &polarization, double omega)
    : direction_(direction), polarization_(polarization), omega_(omega) {
  constexpr double tol = 1e-12;
  if (std::abs(direction.norm() - 1.0) > tol || std::abs(polarization.norm() - 1.0) > tol ||
      std::abs(direction.dot(polarization)) > tol)
    throw InvalidArgumentError(
        "plane-wave direction and polarization must be orthogonal unit vectors");
  if (!(omega > 0.0)) throw InvalidArgumentError("plane-wave frequency must be positive");
}

std::string to_string(Preconditioner p) {
  switch (p) {
  case Preconditioner::none: return "none";
  case Preconditioner::diagonal: return "diagonal";
  case Preconditioner::block: return "block";
  }
  return "none";
}

Preconditioner preconditioner_from_string(const std::string &name) {
  if (name == "none") return Preconditioner::none;
  if (name == "diagonal") return Preconditioner::diagonal;
  if (name == "block") return Preconditioner::block;
  throw InvalidArgumentError("unknown preconditioner '" + name + "'");
}

VectorField incident_field(const PlaneWaveMode &mode, const DielectricScene &scene) {
  VectorField E(scene.grid());
  const double k = mode.wavenumber();
  const CVec3 pol = mode.polarization().cast<cdouble>();
  for (std::size_t v = 0; v < E.values.size(); ++v) {
    const double phase = k * mode.direction().dot(scene.grid().center(v));
    E.values[v] = pol * std::exp(kI * phase);
  }
  return E;
}

std::vector<cdouble> pack_material(const VectorField &field, const DielectricScene &scene) {
  const auto &mat = scene.material_voxels();
  std::vector<cdouble> out(3 * mat.size());
  for (std::size_t m = 0; m < mat.size(); ++m)
    for (int c = 0; c < 3; ++c) out[3 * m + c] = field.values[mat[m]][c];
  return out;
}

VectorField unpack_material(std::span<const cdouble> packed, const DielectricScene &scene) {
  const auto &mat = scene.material_voxels();
  if (packed.size() != 3 * mat.size())
    throw InvalidArgumentError("packed vector does not match the material voxel count");
  VectorField out(scene.grid());
  for (std::size_t m = 0; m < mat.size(); ++m)
    out.values[mat[m]] = CVec3(packed[3 * m], packed[3 * m + 1], packed[3 * m + 2]);
  return out;
}

// ---------------------------------------------------------------------------------------
// Operator

namespace {

cdouble local_term(cdouble rel_eps, double omega) {
  return -1.0 / (kI * omega * (rel_eps - 1.0) * constants::eps0);
}

std::size_t embed_index(const Index3 &c, const Index3 &M) {
  return static_cast<std::size_t>(c[0]) +
         static_cast<std::size_t>(M[0]) *
             (static_cast<std::size_t>(c[1]) + static_cast<std::size_t>(M[1]) * c[2]);
}

} // namespace

VieOperator::VieOperator(const DielectricScene &scene, const GreenKernel &kernel, double omega,
                         bool measure_plans)
    : scene_(scene), kernel_(kernel), omega_(omega) {
  if (kernel.scene_dims() != scene.grid().dims || kernel.spacing() != scene.grid().spacing)
    throw InvalidArgumentError("kernel was built for a different grid");
  if (std::abs(kernel.k0() - wavenumber_from_omega(omega)) > 1e-12 * kernel.k0())
    throw InvalidArgumentError("kernel wavenumber does not match the solve frequency");
  local_.reserve(scene.material_count());
  for (std::size_t v : scene.material_voxels())
    local_.push_back(local_term(scene.rel_permittivity(v), omega));
  fft_ = std::make_unique<Fft3>(kernel.fft_dims(), scene.grid().dims, measure_plans);
  for (auto &w : work_) w.assign(kernel.fft_size(), cdouble{});
}

VieOperator::~VieOperator() = default;

cdouble VieOperator::coupling_prefactor() const { return -kI * omega_ * constants::mu0; }

void VieOperator::apply(std::span<const cdouble> x, std::span<cdouble> y) const {
  const auto &mat = scene_.material_voxels();
  const std::size_t n = mat.size();
  if (x.size() != 3 * n || y.size() != 3 * n)
    throw InvalidArgumentError("operator input/output size mismatch");
  const Index3 M = kernel_.fft_dims();
  const GridGeometry &grid = scene_.grid();
  const std::size_t total = kernel_.fft_size();

  for (auto &w : work_) std::memset(static_cast<void *>(w.data()), 0, total * sizeof(cdouble));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(n); ++m) {
    const std::size_t e = embed_index(grid.unravel(mat[m]), M);
    for (int c = 0; c < 3; ++c) work_[c][e] = x[3 * m + c];
  }
  for (auto &w : work_) fft_->forward(w.data());

  const auto &K = kernel_.spectra();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(total); ++q) {
    const cdouble jx = work_[0][q], jy = work_[1][q], jz = work_[2][q];
    const cdouble kxx = K[0][q], kxy = K[1][q], kxz = K[2][q];
    const cdouble kyy = K[3][q], kyz = K[4][q], kzz = K[5][q];
    work_[0][q] = kxx * jx + kxy * jy + kxz * jz;
    work_[1][q] = kxy * jx + kyy * jy + kyz * jz;
    work_[2][q] = kxz * jx + kyz * jy + kzz * jz;
  }
  for (auto &w : work_) fft_->inverse(w.data());

  const cdouble scale =
      coupling_prefactor() * grid.cell_volume() / static_cast<double>(total);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(n); ++m) {
    const std::size_t e = embed_index(grid.unravel(mat[m]), M);
    for (int c = 0; c < 3; ++c) y[3 * m + c] = local_[m] * x[3 * m + c] + scale * work_[c][e];
  }
}

VectorField apply_operator(const PolarizationCurrentField &J, const DielectricScene &scene,
                           const GreenKernel &kernel, double omega) {
  if (!(J.grid == scene.grid())) throw InvalidArgumentError("current grid differs from scene");
  VieOperator op(scene, kernel, omega);
  const auto x = pack_material(J, scene);
  std::vector<cdouble> y(x.size());
  op.apply(x, y);
  return unpack_material(y, scene);
}

Dyad operator_block(const DielectricScene &scene, double omega, std::size_t target_voxel,
                    std::size_t source_voxel, cdouble local_coefficient) {
  const double k0 = wavenumber_from_omega(omega);
  const cdouble pre = -kI * omega * constants::mu0;
  const GridGeometry &g = scene.grid();
  if (target_voxel == source_voxel) {
    Dyad d = pre * cell_self_coupling(g.spacing, k0);
    d.diagonal().array() += local_coefficient;
    return d;
  }
  return (pre * g.cell_volume()) *
         eval_green_dyad(g.center(target_voxel) - g.center(source_voxel), k0);
}

// ---------------------------------------------------------------------------------------
// Preconditioners

namespace {

class DiagonalPreconditioner final : public PreconditionerOp {
public:
  explicit DiagonalPreconditioner(const VieOperator &op) {
    const auto &scene = op.scene();
    const auto &mat = scene.material_voxels();
    inv_.reserve(mat.size());
    for (std::size_t m = 0; m < mat.size(); ++m)
      inv_.push_back(
          operator_block(scene, op.omega(), mat[m], mat[m], op.local_coefficient(m)).inverse());
  }
  void apply(std::span<const cdouble> r, std::span<cdouble> z) const override {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(inv_.size()); ++m) {
      const CVec3 v = inv_[m] * Eigen::Map<const CVec3>(r.data() + 3 * m);
      for (int c = 0; c < 3; ++c) z[3 * m + c] = v[c];
    }
  }
  Preconditioner kind() const override { return Preconditioner::diagonal; }

private:
  std::vector<Dyad> inv_;
};

class BlockPreconditioner final : public PreconditionerOp {
public:
  struct Block {
    std::vector<std::size_t> members; // indices into the material list
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
  };

  explicit BlockPreconditioner(std::vector<Block> blocks) : blocks_(std::move(blocks)) {}

  void apply(std::span<const cdouble> r, std::span<cdouble> z) const override {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks_.size()); ++b) {
      const Block &blk = blocks_[b];
      const auto n = static_cast<Eigen::Index>(blk.members.size());
      Eigen::VectorXcd rb(3 * n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) rb[3 * i + c] = r[3 * blk.members[i] + c];
      const Eigen::VectorXcd zb = blk.lu.solve(rb);
      for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) z[3 * blk.members[i] + c] = zb[3 * i + c];
    }
  }
  Preconditioner kind() const override { return Preconditioner::block; }

private:
  std::vector<Block> blocks_;
};

} // namespace

std::unique_ptr<PreconditionerOp> build_diagonal_preconditioner(const VieOperator &op) {
  return std::make_unique<DiagonalPreconditioner>(op);
}

std::unique_ptr<PreconditionerOp> build_block_preconditioner(const VieOperator &op,
                                                             const Index3 &blocks,
                                                             std::size_t memory_budget) {
  for (int b : blocks)
    if (b < 1) throw InvalidArgumentError("block counts must be >= 1");
  const auto &scene = op.scene();
  const auto &mat = scene.material_voxels();
  if (mat.empty()) throw InvalidArgumentError("scene has no material voxels");
  const Index3 lo = scene.material_min();
  const Index3 hi = scene.material_max();

  const std::size_t nblocks = static_cast<std::size_t>(blocks[0]) * blocks[1] * blocks[2];
  std::vector<std::vector<std::size_t>> members(nblocks);
  for (std::size_t m = 0; m < mat.size(); ++m) {
    const Index3 c = scene.grid().unravel(mat[m]);
    std::size_t id = 0;
    for (int a = 2; a >= 0; --a) {
      const int extent = hi[a] - lo[a] + 1;
      const int b = static_cast<int>(static_cast<long long>(c[a] - lo[a]) * blocks[a] / extent);
      id = id * static_cast<std::size_t>(blocks[a]) + static_cast<std::size_t>(b);
    }
    members[id].push_back(m);
  }

  std::size_t need = 0;
  std::size_t largest = 0;
  for (const auto &mem : members) {
    const std::size_t dim = 3 * mem.size();
    need += dim * dim * sizeof(cdouble);
    largest = std::max(largest, mem.size());
  }
  if (need > memory_budget)
    throw ResourceError("block preconditioner needs " + std::to_string(need) +
                            " bytes (largest block " + std::to_string(largest) +
                            " voxels); use more blocks",
                        need);

  std::vector<BlockPreconditioner::Block> out;
  for (auto &mem : members)
    if (!mem.empty()) out.push_back({std::move(mem), {}});

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(out.size()); ++b) {
    auto &blk = out[b];
    const auto n = static_cast<Eigen::Index>(blk.members.size());
    Eigen::MatrixXcd A(3 * n, 3 * n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t mi = blk.members[i];
        const std::size_t mj = blk.members[j];
        A.block<3, 3>(3 * i, 3 * j) =
            operator_block(scene, op.omega(), mat[mi], mat[mj], op.local_coefficient(mi));
      }
    blk.lu.compute(A);
  }
  return std::make_unique<BlockPreconditioner>(std::move(out));
}

// ---------------------------------------------------------------------------------------
// BiCGStab

std::vector<cdouble> bicgstab(const VieOperator &op, std::span<const cdouble> rhs,
                              const PreconditionerOp *precond, const SolverOptions &options,
                              SolveReport &report, std::span<const cdouble> initial_guess) {
  const std::size_t n = op.size();
  if (rhs.size() != n) throw InvalidArgumentError("right-hand side size mismatch");
  if (!(options.tol > 0.0 && options.tol < 1.0))
    throw InvalidArgumentError("tolerance must lie in (0, 1)");
  if (options.max_iter < 1) throw InvalidArgumentError("max_iter must be >= 1");

  using linalg::axpy;
  using linalg::dot;
  using linalg::norm;

  std::vector<cdouble> x(n, cdouble{});
  if (!initial_guess.empty()) {
    if (initial_guess.size() != n) throw InvalidArgumentError("initial guess size mismatch");
    std::copy(initial_guess.begin(), initial_guess.end(), x.begin());
  }
  const double bnorm = norm(rhs);
  report.residual_history.clear();
  report.iterations = 0;
  report.restarts = 0;
  report.preconditioner = precond ? precond->kind() : Preconditioner::none;
  if (bnorm == 0.0) {
    report.relative_residual = 0.0;
    return x;
  }

  std::vector<cdouble> r(n), rhat(n), p(n), v(n), s(n), t(n), phat(n), shat(n), best;
  auto precondition = [&](const std::vector<cdouble> &in, std::vector<cdouble> &out) {
    if (precond) precond->apply(in, out);
    else std::copy(in.begin(), in.end(), out.begin());
  };
  auto true_residual = [&]() {
    op.apply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
    return norm(r) / bnorm;
  };

  double res = true_residual();
  double best_res = res;
  best = x;
  report.residual_history.push_back(res);
  int breakdowns = 0;
  constexpr double kCollapse = 1e-30;

  auto restart = [&]() {
    rhat = r;
    std::fill(p.begin(), p.end(), cdouble{});
    std::fill(v.begin(), v.end(), cdouble{});
  };
  restart();
  cdouble rho{1.0}, alpha{1.0}, omega{1.0};

  while (res > options.tol) {
    if (report.iterations >= options.max_iter) {
      report.relative_residual = best_res;
      throw NonConvergenceError("BiCGStab did not converge in " +
                                    std::to_string(options.max_iter) + " iterations",
                                best_res, report.iterations);
    }
    ++report.iterations;

    const cdouble rho_new = dot(rhat, r);
    bool breakdown = std::abs(rho_new) <= kCollapse * norm(rhat) * norm(r);
    cdouble rv{};
    if (!breakdown) {
      const cdouble beta = (rho_new / rho) * (alpha / omega);
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      precondition(p, phat);
      op.apply(phat, v);
      rv = dot(rhat, v);
      breakdown = std::abs(rv) <= kCollapse * norm(rhat) * norm(v);
    }
    if (breakdown) {
      if (++breakdowns > 1) {
        report.relative_residual = best_res;
        throw NonConvergenceError("BiCGStab breakdown after restart", best_res,
                                  report.iterations);
      }
      ++report.restarts;
      res = true_residual();
      restart();
      rho = alpha = omega = 1.0;
      continue;
    }
    rho = rho_new;
    alpha = rho / rv;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];

    if (norm(s) / bnorm <= options.tol) {
      axpy(alpha, phat, x);
      res = true_residual();
    } else {
      precondition(s, shat);
      op.apply(shat, t);
      const double tt = std::real(dot(t, t));
      omega = tt > 0.0 ? dot(t, s) / tt : cdouble{};
      if (std::abs(omega) == 0.0) {
        axpy(alpha, phat, x);
        if (++breakdowns > 1) {
          report.relative_residual = best_res;
          throw NonConvergenceError("BiCGStab stagnation (omega = 0) after restart", best_res,
                                    report.iterations);
        }
        ++report.restarts;
        res = true_residual();
        restart();
        rho = alpha = omega = 1.0;
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * phat[i] + omega * shat[i];
        r[i] = s[i] - omega * t[i];
      }
      res = norm(r) / bnorm;
      // Confirm convergence against the true residual; the recurrence can drift.
      if (res <= options.tol) res = true_residual();
    }
    report.residual_history.push_back(res);
    if (res < best_res) {
      best_res = res;
      best = x;
    }
  }
  report.relative_residual = res;
  return x;
}

SolveResult solve(const DielectricScene &scene, const GreenKernel &kernel,
                  const PlaneWaveMode &mode, const SolverOptions &options) {
  const auto start = std::chrono::steady_clock::now();
  if (scene.material_count() == 0)
    throw InvalidArgumentError("scene has no material voxels; refusing to solve free space");

  VieOperator op(scene, kernel, mode.omega(), !options.deterministic);
  std::unique_ptr<PreconditionerOp> pc;
  switch (options.precond) {
  case Preconditioner::none: break;
  case Preconditioner::diagonal: pc = build_diagonal_preconditioner(op); break;
  case Preconditioner::block:
    pc = build_block_preconditioner(op, options.blocks, options.memory_budget);
    break;
  }
  const auto rhs = pack_material(incident_field(mode, scene), scene);
  SolveResult result;
  const auto x = bicgstab(op, rhs, pc.get(), options, result.report);
  result.current = unpack_material(x, scene);
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SolveResult solve(const DielectricScene &scene, const PlaneWaveMode &mode,
                  const SolverOptions &options) {
  if (scene.material_count() == 0)
    throw InvalidArgumentError("scene has no material voxels; refusing to solve free space");
  const auto start = std::chrono::steady_clock::now();
  const GreenKernel kernel = build_toeplitz_kernel(scene.grid().dims, scene.grid().spacing,
                                                   mode.wavenumber(), options.memory_budget);
  SolveResult result = solve(scene, kernel, mode, options);
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------------------
// Current dump

void write_current_dump(const PolarizationCurrentField &J, const std::filesystem::path &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open current dump for writing: " + path.string());
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "HOMFIELD-CURRENT 1\ndims %d %d %d\nspacing %.17g\norigin %.17g %.17g %.17g\nend\n",
                J.grid.dims[0], J.grid.dims[1], J.grid.dims[2], J.grid.spacing,
                J.grid.origin.x(), J.grid.origin.y(), J.grid.origin.z());
  os << buf;
  for (const CVec3 &v : J.values)
    os.write(reinterpret_cast<const char *>(v.data()), 3 * sizeof(cdouble));
  if (!os) throw IoError("failed writing current dump: " + path.string());
}

PolarizationCurrentField read_current_dump(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open current dump: " + path.string());
  std::string line;
  GridGeometry g;
  bool have_dims = false, have_spacing = false;
  if (!std::getline(is, line) || line != "HOMFIELD-CURRENT 1")
    throw IoError("not a current dump: " + path.string());
  while (std::getline(is, line) && line != "end") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dims") {
      ls >> g.dims[0] >> g.dims[1] >> g.dims[2];
      have_dims = true;
    } else if (key == "spacing") {
      ls >> g.spacing;
      have_spacing = true;
    } else if (key == "origin") {
      ls >> g.origin.x() >> g.origin.y() >> g.origin.z();
    }
    if (ls.fail()) throw IoError("malformed current dump header line: " + line);
  }
  if (line != "end" || !have_dims || !have_spacing)
    throw IoError("incomplete current dump header: " + path.string());
  PolarizationCurrentField J(g);
  for (CVec3 &v : J.values) is.read(reinterpret_cast<char *>(v.data()), 3 * sizeof(cdouble));
  if (!is) throw IoError("truncated current dump: " + path.string());
  return J;
}

} // namespace homfield
