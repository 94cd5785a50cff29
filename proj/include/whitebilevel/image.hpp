#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wb {

/// Real-valued 2-D raster stored row-major. Used for images, residuals,
/// derivative images and kernels alike.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, double fill = 0.0);
    /// Takes ownership of row-major samples; throws if the length is wrong
    /// or any sample is non-finite.
    Image(std::size_t height, std::size_t width, std::vector<double> samples);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
    double operator()(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    const std::vector<double>& samples() const { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }
    bool all_finite() const;

    Image& operator+=(const Image& other);
    Image& operator-=(const Image& other);
    Image& operator*=(double s);
    /// this += s * other
    Image& axpy(double s, const Image& other);

    bool operator==(const Image& other) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

Image operator+(Image a, const Image& b);
Image operator-(Image a, const Image& b);
Image operator*(double s, Image a);

double dot(const Image& a, const Image& b);
double norm2(const Image& a);
double squared_norm(const Image& a);
double mean(const Image& a);

/// Throws DimensionMismatch unless a and b share dimensions.
void require_same_shape(const Image& a, const Image& b, const char* what);

/// Discrete gradient field Dx: pixel j owns the 2-vector (horizontal[j], vertical[j]).
struct GradField {
    Image horizontal;
    Image vertical;

    GradField() = default;
    GradField(std::size_t height, std::size_t width)
        : horizontal(height, width), vertical(height, width) {}

    std::size_t height() const { return horizontal.height(); }
    std::size_t width() const { return horizontal.width(); }
};

double dot(const GradField& a, const GradField& b);

}  // namespace wb
