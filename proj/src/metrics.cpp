#include "whitebilevel/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "whitebilevel/error.hpp"

namespace wb {

namespace {

constexpr std::size_t kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = (0.01 * 1.0) * (0.01 * 1.0);
constexpr double kC2 = (0.03 * 1.0) * (0.03 * 1.0);

std::array<double, kWindow> gaussian_window() {
    std::array<double, kWindow> w{};
    double total = 0.0;
    for (std::size_t i = 0; i < kWindow; ++i) {
        const double d = static_cast<double>(i) - static_cast<double>(kWindow / 2);
        w[i] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

// Separable weighted mean over every fully contained window ("valid" region).
Image filter_valid(const Image& in, const std::array<double, kWindow>& w) {
    const std::size_t out_h = in.height() - kWindow + 1;
    const std::size_t out_w = in.width() - kWindow + 1;
    Image rows(in.height(), out_w);
    for (std::size_t r = 0; r < in.height(); ++r)
        for (std::size_t c = 0; c < out_w; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < kWindow; ++k) s += w[k] * in(r, c + k);
            rows(r, c) = s;
        }
    Image out(out_h, out_w);
    for (std::size_t r = 0; r < out_h; ++r)
        for (std::size_t c = 0; c < out_w; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < kWindow; ++k) s += w[k] * rows(r + k, c);
            out(r, c) = s;
        }
    return out;
}

Image product(const Image& a, const Image& b) {
    Image out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

}  // namespace

double psnr(const Image& x, const Image& ref, double peak) {
    require_same_shape(x, ref, "PSNR");
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sse += (x[i] - ref[i]) * (x[i] - ref[i]);
    const double mse = sse / static_cast<double>(x.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Image& x, const Image& ref) {
    require_same_shape(x, ref, "SSIM");
    if (x.height() < kWindow || x.width() < kWindow) {
        throw InvalidArgument("SSIM needs images of at least 11x11 pixels");
    }
    const auto w = gaussian_window();
    const Image mu_x = filter_valid(x, w);
    const Image mu_y = filter_valid(ref, w);
    const Image xx = filter_valid(product(x, x), w);
    const Image yy = filter_valid(product(ref, ref), w);
    const Image xy = filter_valid(product(x, ref), w);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i];
        const double my = mu_y[i];
        const double vx = xx[i] - mx * mx;
        const double vy = yy[i] - my * my;
        const double cxy = xy[i] - mx * my;
        total += ((2.0 * mx * my + kC1) * (2.0 * cxy + kC2)) / ((mx * mx + my * my + kC1) * (vx + vy + kC2));
    }
    return total / static_cast<double>(mu_x.size());
}

}  // namespace wb
