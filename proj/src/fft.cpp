#include "homfield/fft.hpp"

#include "homfield/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace homfield {

namespace {

std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}

int g_threads = 1;

void init_fftw_threads() {
  static std::once_flag once;
  std::call_once(once, [] {
#ifdef HOMFIELD_FFTW_OMP
    fftw_init_threads();
#endif
  });
}

fftw_complex *as_fftw(cdouble *p) { return reinterpret_cast<fftw_complex *>(p); }

} // namespace

void *fftw_aligned_alloc(std::size_t bytes) {
  void *p = fftw_malloc(std::max<std::size_t>(bytes, 1));
  if (p == nullptr) throw std::bad_alloc();
  return p;
}

void fftw_aligned_free(void *p) noexcept { fftw_free(p); }

int next_fast_fft_size(int n) {
  if (n <= 1) return 1;
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

void set_thread_count(int threads) {
  g_threads = std::max(1, threads);
#ifdef _OPENMP
  omp_set_num_threads(g_threads);
#endif
}

int thread_count() { return g_threads; }

struct Fft3::Plans {
  // Passes in execution order for each direction.
  fftw_plan fwd[3]{};
  fftw_plan inv[3]{};
};

Fft3::Fft3(Index3 dims, Index3 active, bool measure)
    : dims_(dims), active_(active), plans_(std::make_unique<Plans>()) {
  for (int a = 0; a < 3; ++a)
    if (dims_[a] < 1 || active_[a] < 1 || active_[a] > dims_[a])
      throw InvalidArgumentError("invalid FFT dimensions");

  init_fftw_threads();
  const int mx = dims_[0], my = dims_[1], mz = dims_[2];
  const int ay = active_[1], az = active_[2];
  const unsigned flags = measure ? FFTW_MEASURE : FFTW_ESTIMATE;

  std::lock_guard lock(planner_mutex());
#ifdef HOMFIELD_FFTW_OMP
  fftw_plan_with_nthreads(g_threads);
#endif
  SpectralBuffer scratch(size());
  fftw_complex *buf = as_fftw(scratch.data());

  // Along x for lines y < ay, z < az.
  auto plan_x = [&](int sign) {
    fftw_iodim d{mx, 1, 1};
    fftw_iodim loops[2] = {{ay, mx, mx}, {az, mx * my, mx * my}};
    return fftw_plan_guru_dft(1, &d, 2, loops, buf, buf, sign, flags);
  };
  // Along y for all x, z < az.
  auto plan_y = [&](int sign) {
    fftw_iodim d{my, mx, mx};
    fftw_iodim loops[2] = {{mx, 1, 1}, {az, mx * my, mx * my}};
    return fftw_plan_guru_dft(1, &d, 2, loops, buf, buf, sign, flags);
  };
  // Along z for every (x, y).
  auto plan_z = [&](int sign) {
    fftw_iodim d{mz, mx * my, mx * my};
    fftw_iodim loops[1] = {{mx * my, 1, 1}};
    return fftw_plan_guru_dft(1, &d, 1, loops, buf, buf, sign, flags);
  };

  plans_->fwd[0] = plan_x(FFTW_FORWARD);
  plans_->fwd[1] = plan_y(FFTW_FORWARD);
  plans_->fwd[2] = plan_z(FFTW_FORWARD);
  plans_->inv[0] = plan_z(FFTW_BACKWARD);
  plans_->inv[1] = plan_y(FFTW_BACKWARD);
  plans_->inv[2] = plan_x(FFTW_BACKWARD);
  for (auto *p : {plans_->fwd, plans_->inv})
    for (int i = 0; i < 3; ++i)
      if (p[i] == nullptr) throw NumericalError("FFTW failed to create a plan", 0.0);
}

Fft3::~Fft3() {
  std::lock_guard lock(planner_mutex());
  for (auto *p : {plans_->fwd, plans_->inv})
    for (int i = 0; i < 3; ++i)
      if (p[i] != nullptr) fftw_destroy_plan(p[i]);
}

void Fft3::forward(cdouble *data) const {
  for (auto *p : plans_->fwd) fftw_execute_dft(p, as_fftw(data), as_fftw(data));
}

void Fft3::inverse(cdouble *data) const {
  for (auto *p : plans_->inv) fftw_execute_dft(p, as_fftw(data), as_fftw(data));
}

} // namespace homfield
