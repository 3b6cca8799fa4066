#pragma once

#include "homfield/types.hpp"

#include <cstddef>
#include <memory>
#include <new>
#include <vector>

namespace homfield {

/// Allocator handing out FFTW-aligned storage so plans can be re-executed on any buffer.
template <class T> struct FftwAllocator {
  using value_type = T;
  FftwAllocator() noexcept = default;
  template <class U> FftwAllocator(const FftwAllocator<U> &) noexcept {}
  T *allocate(std::size_t n);
  void deallocate(T *p, std::size_t) noexcept;
  template <class U> bool operator==(const FftwAllocator<U> &) const noexcept { return true; }
};

void *fftw_aligned_alloc(std::size_t bytes);
void fftw_aligned_free(void *p) noexcept;

template <class T> T *FftwAllocator<T>::allocate(std::size_t n) {
  return static_cast<T *>(fftw_aligned_alloc(n * sizeof(T)));
}
template <class T> void FftwAllocator<T>::deallocate(T *p, std::size_t) noexcept {
  fftw_aligned_free(p);
}

using SpectralBuffer = std::vector<cdouble, FftwAllocator<cdouble>>;

/// Smallest integer >= n whose prime factors are all in {2, 3, 5, 7}.
int next_fast_fft_size(int n);

/// Unnormalized in-place 3-D complex transform on x-fastest arrays of the given dims.
///
/// When `active` is smaller than `dims`, forward() assumes the input is zero outside the
/// leading active box and inverse() only guarantees output inside it; the transforms then
/// skip the 1-D passes over all-zero (or discarded) lines.
class Fft3 {
public:
  Fft3(Index3 dims, Index3 active, bool measure);
  explicit Fft3(Index3 dims) : Fft3(dims, dims, false) {}
  ~Fft3();
  Fft3(const Fft3 &) = delete;
  Fft3 &operator=(const Fft3 &) = delete;

  void forward(cdouble *data) const;
  void inverse(cdouble *data) const;

  const Index3 &dims() const { return dims_; }
  std::size_t size() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }

private:
  struct Plans;
  Index3 dims_;
  Index3 active_;
  std::unique_ptr<Plans> plans_;
};

/// Sets the worker count used by OpenMP loops and FFTW plans created afterwards.
void set_thread_count(int threads);
int thread_count();

} // namespace homfield
