#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace wb::detail {

using Spectrum = std::vector<std::complex<double>>;

/// Real 2-D DFT of a fixed n1 x n2 grid using the half-spectrum layout
/// n1 x (n2/2 + 1). Plans are shared between callers; execution is reentrant.
class Fft2d {
public:
    Fft2d(std::size_t height, std::size_t width);
    ~Fft2d();
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    std::size_t spectrum_size() const { return height_ * (width_ / 2 + 1); }

    Spectrum forward(std::span<const double> samples) const;
    void forward(std::span<const double> samples, Spectrum& out) const;
    /// Unnormalized inverse; callers divide by n.
    std::vector<double> inverse(const Spectrum& spectrum) const;
    void inverse(const Spectrum& spectrum, std::span<double> out) const;

private:
    std::size_t height_;
    std::size_t width_;
    void* forward_plan_;
    void* inverse_plan_;
};

/// Returns the cached transform for the given grid; thread-safe.
const Fft2d& fft_for(std::size_t height, std::size_t width);

}  // namespace wb::detail
