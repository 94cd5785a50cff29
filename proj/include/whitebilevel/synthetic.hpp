#pragma once

#include <cstddef>
#include <cstdint>

#include "whitebilevel/image.hpp"

namespace wb {

/// Deterministic test image in [0,1]: a smooth background ramp overlaid with
/// piecewise-constant rectangles and disks, some carrying their own ramp.
Image make_synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed);

}  // namespace wb
