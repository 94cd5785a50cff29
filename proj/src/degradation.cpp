#include "whitebilevel/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>

#include "whitebilevel/error.hpp"

namespace wb {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Image normalized(Image taps) {
    double total = 0.0;
    for (double v : taps.data()) total += v;
    taps *= 1.0 / total;
    return taps;
}

}  // namespace

Kernel make_gaussian_kernel(std::size_t size, double std_dev) {
    if (size % 2 == 0) throw InvalidArgument("Gaussian kernel size must be odd");
    if (!(std_dev > 0.0)) throw InvalidArgument("Gaussian kernel std must be positive");
    const long half = static_cast<long>(size / 2);
    Image taps(size, size);
    for (long i = -half; i <= half; ++i) {
        for (long j = -half; j <= half; ++j) {
            taps(static_cast<std::size_t>(i + half), static_cast<std::size_t>(j + half)) =
                std::exp(-static_cast<double>(i * i + j * j) / (2.0 * std_dev * std_dev));
        }
    }
    return Kernel::centered(normalized(std::move(taps)), true);
}

Kernel make_motion_kernel(std::size_t length, double angle_deg) {
    if (length < 1) throw InvalidArgument("motion kernel length must be at least 1");
    const double angle = angle_deg * std::numbers::pi / 180.0;
    const double dc = std::cos(angle);
    const double dr = -std::sin(angle);
    std::set<std::pair<long, long>> cells;  // (row, col) offsets from the anchor
    for (std::size_t k = 0; k < length; ++k) {
        const double t = static_cast<double>(k) - 0.5 * static_cast<double>(length - 1);
        cells.emplace(static_cast<long>(std::floor(t * dr + 0.5)), static_cast<long>(std::floor(t * dc + 0.5)));
    }
    long rmin = 0, rmax = 0, cmin = 0, cmax = 0;
    for (const auto& [r, c] : cells) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    Image taps(static_cast<std::size_t>(rmax - rmin + 1), static_cast<std::size_t>(cmax - cmin + 1));
    for (const auto& [r, c] : cells) {
        taps(static_cast<std::size_t>(r - rmin), static_cast<std::size_t>(c - cmin)) = 1.0;
    }
    return Kernel(normalized(std::move(taps)), static_cast<std::size_t>(-rmin), static_cast<std::size_t>(-cmin),
                  true);
}

Kernel make_kernel(const KernelSpec& spec) {
    return std::visit(Overloaded{[](const GaussianBlur& g) { return make_gaussian_kernel(g.size, g.std_dev); },
                                 [](const MotionBlur& m) { return make_motion_kernel(m.length, m.angle_deg); },
                                 [](const CustomBlur& c) { return c.kernel; }},
                      spec);
}

std::string kernel_name(const KernelSpec& spec) {
    return std::visit(Overloaded{[](const GaussianBlur&) { return std::string("gaussian"); },
                                 [](const MotionBlur&) { return std::string("motion"); },
                                 [](const CustomBlur&) { return std::string("custom"); }},
                      spec);
}

double bsnr(const Image& blurred_clean, const Image& noisy) {
    require_same_shape(blurred_clean, noisy, "BSNR");
    const double mu = mean(blurred_clean);
    double signal = 0.0;
    double noise = 0.0;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        signal += (blurred_clean[i] - mu) * (blurred_clean[i] - mu);
        noise += (blurred_clean[i] - noisy[i]) * (blurred_clean[i] - noisy[i]);
    }
    if (noise == 0.0) throw InvalidArgument("BSNR is undefined without noise");
    return 10.0 * std::log10(signal / noise);
}

NoisyObservation add_awgn_bsnr(const Image& blurred_clean, double target_bsnr, std::uint64_t seed) {
    const double mu = mean(blurred_clean);
    double signal = 0.0;
    double energy = 0.0;
    for (double v : blurred_clean.data()) {
        signal += (v - mu) * (v - mu);
        energy += v * v;
    }
    // Rounding in the mean leaves a tiny residue on constant images.
    if (signal <= 1e-24 * energy) throw InvalidArgument("cannot calibrate BSNR on a constant image");
    const double m = static_cast<double>(blurred_clean.size());
    NoisyObservation out;
    out.sigma = std::sqrt(signal) / (std::sqrt(m) * std::pow(10.0, target_bsnr / 20.0));
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    out.noisy = blurred_clean;
    for (double& v : out.noisy.data()) v += out.sigma * normal(engine);
    return out;
}

}  // namespace wb
