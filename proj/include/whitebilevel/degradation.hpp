#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "whitebilevel/image.hpp"
#include "whitebilevel/operators.hpp"

namespace wb {

/// Identity of the normal sampler recorded in output metadata.
inline constexpr std::string_view kNoiseGenerator = "std::mt19937_64 + std::normal_distribution<double>";

/// Normalized Gaussian taps exp(-(i^2 + j^2) / (2 std^2)) on a centered
/// size x size grid. Throws on even size or non-positive std.
Kernel make_gaussian_kernel(std::size_t size, double std_dev);

/// Centered line segment of `length` unit-spaced samples at `angle_deg`
/// (counter-clockwise from the +column axis, rows pointing down), each
/// covered cell weighted equally, normalized to sum 1.
Kernel make_motion_kernel(std::size_t length, double angle_deg);

struct GaussianBlur {
    std::size_t size = 9;
    double std_dev = 2.0;
};

struct MotionBlur {
    std::size_t length = 10;
    double angle_deg = 60.0;
};

struct CustomBlur {
    Kernel kernel;
};

using KernelSpec = std::variant<GaussianBlur, MotionBlur, CustomBlur>;

Kernel make_kernel(const KernelSpec& spec);
/// "gaussian", "motion" or "custom".
std::string kernel_name(const KernelSpec& spec);

struct DegradationSpec {
    KernelSpec kernel = GaussianBlur{};
    double bsnr = 10.0;
    std::uint64_t seed = 0;
};

/// 10 log10( ||b - mean(b)||^2 / ||b - y||^2 ). Throws when y == b.
double bsnr(const Image& blurred_clean, const Image& noisy);

struct NoisyObservation {
    Image noisy;
    double sigma = 0.0;
};

/// sigma = ||b - mean(b)|| / (sqrt(m) 10^(bsnr/20)); returns b + sigma * g,
/// g standard normal from a generator seeded with `seed`.
NoisyObservation add_awgn_bsnr(const Image& blurred_clean, double target_bsnr, std::uint64_t seed);

}  // namespace wb
