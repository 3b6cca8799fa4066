#pragma once

#include "homfield/types.hpp"

#include <span>

namespace homfield::linalg {

/// Conjugated inner product sum conj(a_i) b_i. Partial sums are formed over fixed-size
/// chunks and combined in chunk order, so the result does not depend on the thread count.
cdouble dot(std::span<const cdouble> a, std::span<const cdouble> b);

double norm(std::span<const cdouble> a);

/// y += alpha x
void axpy(cdouble alpha, std::span<const cdouble> x, std::span<cdouble> y);

} // namespace homfield::linalg
