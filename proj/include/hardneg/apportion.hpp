#pragma once

#include <cstddef>
#include <vector>

namespace hardneg {

/// Splits `total` units over slots in proportion to `weights` (largest
/// remainder, ties to the lower index), never exceeding `caps`. Units that do
/// not fit are re-apportioned over slots with room. The result sums to
/// min(total, sum(caps)). Zero total weight among open slots is treated as
/// uniform.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights,
                                   const std::vector<std::size_t>& caps);

}  // namespace hardneg
