#pragma once

#include "whitebilevel/image.hpp"

namespace wb {

/// Returned by psnr() for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(peak^2 / MSE), capped at kPsnrCap.
double psnr(const Image& x, const Image& ref, double peak = 1.0);

/// Mean SSIM over all valid 11x11 windows (Gaussian weights, sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1. Images must be at least 11x11.
double ssim(const Image& x, const Image& ref);

}  // namespace wb
