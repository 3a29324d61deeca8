#pragma once

#include <vector>

#include "hypoprop/types.hpp"

namespace hypoprop::detail {

/// Unnormalized in-place DFT over a row-major array with the given extents.
/// sign = -1 is the forward (e^{-2 pi i jk/n}) direction, +1 the backward one.
void fft_inplace(std::vector<cplx>& data, const std::vector<int>& extents, int sign);

}  // namespace hypoprop::detail
