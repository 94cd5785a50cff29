#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "whitebilevel/image.hpp"

namespace wb {

/// Small convolution kernel with an explicit anchor (the tap that lands on
/// the output pixel when the kernel is applied).
class Kernel {
public:
    Kernel() = default;
    /// Throws on non-finite taps, an anchor outside the support, or when
    /// `normalized` is set but the taps do not sum to 1 within 1e-12.
    Kernel(Image taps, std::size_t anchor_row, std::size_t anchor_col, bool normalized);

    /// Anchor at the center tap (size/2 along each axis).
    static Kernel centered(Image taps, bool normalized);
    static Kernel identity();

    const Image& taps() const { return taps_; }
    std::size_t anchor_row() const { return anchor_row_; }
    std::size_t anchor_col() const { return anchor_col_; }
    bool normalized() const { return normalized_; }
    bool nonnegative() const;
    double sum() const;

    /// Spatially reversed kernel (the kernel of the adjoint operator).
    Kernel reversed() const;
    Kernel scaled(double s) const;

private:
    Image taps_{1, 1, 1.0};
    std::size_t anchor_row_ = 0;
    std::size_t anchor_col_ = 0;
    bool normalized_ = true;
};

/// Periodic convolution operator A on an n1 x n2 grid, diagonalized by the
/// 2-D DFT. Immutable after construction; safe to share between threads.
class ConvOperator {
public:
    ConvOperator(Kernel kernel, std::size_t height, std::size_t width);

    const Kernel& kernel() const { return kernel_; }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    /// Half-spectrum transfer function, n1 x (n2/2 + 1) row-major.
    const std::vector<std::complex<double>>& transfer() const { return transfer_; }

    /// A x: circular convolution with the kernel.
    Image apply(const Image& x) const;
    /// A^T r: circular convolution with the reversed kernel.
    Image adjoint(const Image& r) const;
    /// A^T A x in a single transform round trip.
    Image normal(const Image& x) const;
    /// ||A||_2^2 = max |transfer|^2.
    double norm_sq() const { return norm_sq_; }
    /// Every diagonal entry of A^T A (the energy of the wrapped kernel).
    double normal_diagonal() const { return normal_diagonal_; }

    // In-place variants for hot loops; `out` is resized as needed.
    void apply_into(const Image& x, Image& out) const;
    void adjoint_into(const Image& r, Image& out) const;
    void normal_into(const Image& x, Image& out) const;

private:
    void filter(const Image& x, Image& out, int mode) const;

    Kernel kernel_;
    std::size_t height_;
    std::size_t width_;
    std::vector<std::complex<double>> transfer_;
    double norm_sq_ = 0.0;
    double normal_diagonal_ = 0.0;
};

/// Forward differences with periodic wrap:
/// horizontal[r,c] = x[r,c+1] - x[r,c], vertical[r,c] = x[r+1,c] - x[r,c].
GradField grad_apply(const Image& x);

/// D^T g, the negative periodic divergence.
Image grad_adjoint(const GradField& g);

void grad_apply_into(const Image& x, GradField& out);
void grad_adjoint_into(const GradField& g, Image& out);

/// Circular cross-correlation
///   out[j1,j2] = sum_{k1,k2} x1[k1,k2] * x2[(j1+k1) mod n1, (j2+k2) mod n2],
/// evaluated in the frequency domain as IDFT(conj(X1) * X2).
Image cross_correlate(const Image& x1, const Image& x2);

}  // namespace wb
