#include "homfield/linalg.hpp"

#include "homfield/errors.hpp"

#include <cmath>
#include <vector>

namespace homfield::linalg {

namespace {
constexpr std::size_t kChunk = 4096;
}

cdouble dot(std::span<const cdouble> a, std::span<const cdouble> b) {
  if (a.size() != b.size()) throw InvalidArgumentError("dot: size mismatch");
  const std::size_t n = a.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<cdouble> partial(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    cdouble s{};
    for (std::size_t i = lo; i < hi; ++i) s += std::conj(a[i]) * b[i];
    partial[c] = s;
  }
  cdouble total{};
  for (const cdouble &p : partial) total += p;
  return total;
}

double norm(std::span<const cdouble> a) { return std::sqrt(std::real(dot(a, a))); }

void axpy(cdouble alpha, std::span<const cdouble> x, std::span<cdouble> y) {
  if (x.size() != y.size()) throw InvalidArgumentError("axpy: size mismatch");
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(x.size()); ++i) y[i] += alpha * x[i];
}

} // namespace homfield::linalg
