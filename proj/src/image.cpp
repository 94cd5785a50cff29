#include "whitebilevel/image.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "whitebilevel/error.hpp"

namespace wb {

Image::Image(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {}

Image::Image(std::size_t height, std::size_t width, std::vector<double> samples)
    : height_(height), width_(width), data_(std::move(samples)) {
    if (data_.size() != height_ * width_) {
        throw DimensionMismatch("image data has " + std::to_string(data_.size()) +
                                " samples, expected " + std::to_string(height_ * width_));
    }
    if (!all_finite()) {
        throw InvalidArgument("image data contains non-finite samples");
    }
}

bool Image::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Image& Image::operator+=(const Image& other) {
    require_same_shape(*this, other, "image addition");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Image& Image::operator-=(const Image& other) {
    require_same_shape(*this, other, "image subtraction");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Image& Image::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Image& Image::axpy(double s, const Image& other) {
    require_same_shape(*this, other, "image axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
    return *this;
}

Image operator+(Image a, const Image& b) { return a += b; }
Image operator-(Image a, const Image& b) { return a -= b; }
Image operator*(double s, Image a) { return a *= s; }

double dot(const Image& a, const Image& b) {
    require_same_shape(a, b, "dot product");
    const auto x = a.data();
    const auto y = b.data();
    return std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
}

double squared_norm(const Image& a) { return dot(a, a); }

double norm2(const Image& a) { return std::sqrt(squared_norm(a)); }

double mean(const Image& a) {
    if (a.empty()) return 0.0;
    const auto x = a.data();
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.height()) + "x" +
                                std::to_string(a.width()) + " vs " +
                                std::to_string(b.height()) + "x" + std::to_string(b.width()));
    }
}

double dot(const GradField& a, const GradField& b) {
    return dot(a.horizontal, b.horizontal) + dot(a.vertical, b.vertical);
}

}  // namespace wb
