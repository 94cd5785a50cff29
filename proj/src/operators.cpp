#include "whitebilevel/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fft.hpp"
#include "whitebilevel/error.hpp"

namespace wb {

namespace {

constexpr double kNormalizationTol = 1e-12;

enum FilterMode { kApply = 0, kAdjoint = 1, kNormal = 2 };

}  // namespace

Kernel::Kernel(Image taps, std::size_t anchor_row, std::size_t anchor_col, bool normalized)
    : taps_(std::move(taps)), anchor_row_(anchor_row), anchor_col_(anchor_col), normalized_(normalized) {
    if (taps_.empty()) throw InvalidArgument("kernel has no taps");
    if (!taps_.all_finite()) throw InvalidArgument("kernel taps must be finite");
    if (anchor_row_ >= taps_.height() || anchor_col_ >= taps_.width()) {
        throw InvalidArgument("kernel anchor lies outside the support");
    }
    if (normalized_ && std::abs(sum() - 1.0) > kNormalizationTol) {
        throw InvalidArgument("normalized kernel taps sum to " + std::to_string(sum()));
    }
}

Kernel Kernel::centered(Image taps, bool normalized) {
    const std::size_t ar = taps.height() / 2;
    const std::size_t ac = taps.width() / 2;
    return Kernel(std::move(taps), ar, ac, normalized);
}

Kernel Kernel::identity() { return Kernel(Image(1, 1, 1.0), 0, 0, true); }

bool Kernel::nonnegative() const {
    const auto t = taps_.data();
    return std::all_of(t.begin(), t.end(), [](double v) { return v >= 0.0; });
}

double Kernel::sum() const {
    const auto t = taps_.data();
    return std::accumulate(t.begin(), t.end(), 0.0);
}

Kernel Kernel::reversed() const {
    const std::size_t h = taps_.height();
    const std::size_t w = taps_.width();
    Image rev(h, w);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) rev(h - 1 - i, w - 1 - j) = taps_(i, j);
    return Kernel(std::move(rev), h - 1 - anchor_row_, w - 1 - anchor_col_, normalized_);
}

Kernel Kernel::scaled(double s) const {
    Image t = taps_;
    t *= s;
    const bool still_normalized = normalized_ && std::abs(s - 1.0) <= kNormalizationTol;
    return Kernel(std::move(t), anchor_row_, anchor_col_, still_normalized);
}

ConvOperator::ConvOperator(Kernel kernel, std::size_t height, std::size_t width)
    : kernel_(std::move(kernel)), height_(height), width_(width) {
    if (height_ == 0 || width_ == 0) throw InvalidArgument("operator grid must be non-empty");
    // Anchor goes to pixel (0,0); taps wrap around the periodic grid.
    Image embedded(height_, width_);
    const Image& t = kernel_.taps();
    const auto n1 = static_cast<long>(height_);
    const auto n2 = static_cast<long>(width_);
    for (std::size_t i = 0; i < t.height(); ++i) {
        for (std::size_t j = 0; j < t.width(); ++j) {
            long r = (static_cast<long>(i) - static_cast<long>(kernel_.anchor_row())) % n1;
            long c = (static_cast<long>(j) - static_cast<long>(kernel_.anchor_col())) % n2;
            if (r < 0) r += n1;
            if (c < 0) c += n2;
            embedded(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) += t(i, j);
        }
    }
    for (double v : embedded.data()) normal_diagonal_ += v * v;
    transfer_ = detail::fft_for(height_, width_).forward(embedded.data());
    for (const auto& h : transfer_) norm_sq_ = std::max(norm_sq_, std::norm(h));
}

void ConvOperator::filter(const Image& x, Image& out, int mode) const {
    if (x.height() != height_ || x.width() != width_) {
        throw DimensionMismatch("operator is " + std::to_string(height_) + "x" + std::to_string(width_) +
                                ", image is " + std::to_string(x.height()) + "x" +
                                std::to_string(x.width()));
    }
    const auto& fft = detail::fft_for(height_, width_);
    thread_local detail::Spectrum spec;
    fft.forward(x.data(), spec);
    for (std::size_t k = 0; k < spec.size(); ++k) {
        switch (mode) {
            case kApply: spec[k] *= transfer_[k]; break;
            case kAdjoint: spec[k] *= std::conj(transfer_[k]); break;
            default: spec[k] *= std::norm(transfer_[k]); break;
        }
    }
    if (!out.same_shape(x)) out = Image(height_, width_);
    fft.inverse(spec, out.data());
    out *= 1.0 / static_cast<double>(out.size());
}

void ConvOperator::apply_into(const Image& x, Image& out) const { filter(x, out, kApply); }
void ConvOperator::adjoint_into(const Image& r, Image& out) const { filter(r, out, kAdjoint); }
void ConvOperator::normal_into(const Image& x, Image& out) const { filter(x, out, kNormal); }

Image ConvOperator::apply(const Image& x) const {
    Image out;
    apply_into(x, out);
    return out;
}

Image ConvOperator::adjoint(const Image& r) const {
    Image out;
    adjoint_into(r, out);
    return out;
}

Image ConvOperator::normal(const Image& x) const {
    Image out;
    normal_into(x, out);
    return out;
}

void grad_apply_into(const Image& x, GradField& g) {
    const std::size_t h = x.height();
    const std::size_t w = x.width();
    if (g.horizontal.height() != h || g.horizontal.width() != w || !g.vertical.same_shape(g.horizontal)) {
        g = GradField(h, w);
    }
    const double* src = x.data().data();
    double* gh = g.horizontal.data().data();
    double* gv = g.vertical.data().data();
    for (std::size_t r = 0; r < h; ++r) {
        const double* row = src + r * w;
        const double* below = src + ((r + 1 == h) ? 0 : r + 1) * w;
        double* oh = gh + r * w;
        double* ov = gv + r * w;
        for (std::size_t c = 0; c + 1 < w; ++c) oh[c] = row[c + 1] - row[c];
        oh[w - 1] = row[0] - row[w - 1];
        for (std::size_t c = 0; c < w; ++c) ov[c] = below[c] - row[c];
    }
}

GradField grad_apply(const Image& x) {
    GradField g;
    grad_apply_into(x, g);
    return g;
}

void grad_adjoint_into(const GradField& g, Image& out) {
    require_same_shape(g.horizontal, g.vertical, "gradient field planes");
    const std::size_t h = g.height();
    const std::size_t w = g.width();
    if (out.height() != h || out.width() != w) out = Image(h, w);
    const double* gh = g.horizontal.data().data();
    const double* gv = g.vertical.data().data();
    double* dst = out.data().data();
    for (std::size_t r = 0; r < h; ++r) {
        const double* hrow = gh + r * w;
        const double* vrow = gv + r * w;
        const double* vabove = gv + ((r == 0) ? h - 1 : r - 1) * w;
        double* o = dst + r * w;
        o[0] = hrow[w - 1] - hrow[0] + vabove[0] - vrow[0];
        for (std::size_t c = 1; c < w; ++c) o[c] = hrow[c - 1] - hrow[c] + vabove[c] - vrow[c];
    }
}

Image grad_adjoint(const GradField& g) {
    Image out;
    grad_adjoint_into(g, out);
    return out;
}

Image cross_correlate(const Image& x1, const Image& x2) {
    require_same_shape(x1, x2, "cross-correlation");
    const auto& fft = detail::fft_for(x1.height(), x1.width());
    auto a = fft.forward(x1.data());
    const auto b = fft.forward(x2.data());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::conj(a[k]) * b[k];
    auto out = fft.inverse(a);
    const double inv_n = 1.0 / static_cast<double>(out.size());
    Image result(x1.height(), x1.width());
    for (std::size_t i = 0; i < out.size(); ++i) result[i] = out[i] * inv_n;
    return result;
}

}  // namespace wb
