#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace wb::detail {

namespace {

// FFTW's planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// SIMD-aligned scratch; plans are created and executed on buffers of this kind.
struct AlignedBuffers {
    AlignedBuffers(std::size_t n_real, std::size_t n_cplx)
        : real(fftw_alloc_real(n_real)), cplx(fftw_alloc_complex(n_cplx)) {}
    ~AlignedBuffers() {
        fftw_free(real);
        fftw_free(cplx);
    }
    AlignedBuffers(const AlignedBuffers&) = delete;
    AlignedBuffers& operator=(const AlignedBuffers&) = delete;

    double* real;
    fftw_complex* cplx;
};

AlignedBuffers& scratch_for(std::size_t n_real, std::size_t n_cplx) {
    thread_local std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<AlignedBuffers>> pool;
    auto& slot = pool[{n_real, n_cplx}];
    if (!slot) slot = std::make_unique<AlignedBuffers>(n_real, n_cplx);
    return *slot;
}

}  // namespace

Fft2d::Fft2d(std::size_t height, std::size_t width) : height_(height), width_(width) {
    const int n1 = static_cast<int>(height);
    const int n2 = static_cast<int>(width);
    AlignedBuffers buffers(height * width, spectrum_size());
    // FFTW_ESTIMATE keeps plan selection (and therefore rounding) reproducible across runs.
    const unsigned flags = FFTW_ESTIMATE;
    std::lock_guard lock(planner_mutex());
    forward_plan_ = fftw_plan_dft_r2c_2d(n1, n2, buffers.real, buffers.cplx, flags);
    inverse_plan_ = fftw_plan_dft_c2r_2d(n1, n2, buffers.cplx, buffers.real, flags | FFTW_DESTROY_INPUT);
}

Fft2d::~Fft2d() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Fft2d::forward(std::span<const double> samples, Spectrum& out) const {
    auto& buf = scratch_for(height_ * width_, spectrum_size());
    std::copy(samples.begin(), samples.end(), buf.real);
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), buf.real, buf.cplx);
    out.resize(spectrum_size());
    const auto* c = reinterpret_cast<const std::complex<double>*>(buf.cplx);
    std::copy(c, c + spectrum_size(), out.begin());
}

void Fft2d::inverse(const Spectrum& spectrum, std::span<double> out) const {
    auto& buf = scratch_for(height_ * width_, spectrum_size());
    auto* c = reinterpret_cast<std::complex<double>*>(buf.cplx);
    std::copy(spectrum.begin(), spectrum.end(), c);
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), buf.cplx, buf.real);
    std::copy(buf.real, buf.real + height_ * width_, out.begin());
}

Spectrum Fft2d::forward(std::span<const double> samples) const {
    Spectrum out;
    forward(samples, out);
    return out;
}

std::vector<double> Fft2d::inverse(const Spectrum& spectrum) const {
    std::vector<double> out(height_ * width_);
    inverse(spectrum, out);
    return out;
}

const Fft2d& fft_for(std::size_t height, std::size_t width) {
    static std::mutex cache_mutex;
    // Intentionally leaked so plans outlive every static that may still use them.
    static auto* cache = new std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<Fft2d>>();
    std::lock_guard lock(cache_mutex);
    auto& slot = (*cache)[{height, width}];
    if (!slot) slot = std::make_unique<Fft2d>(height, width);
    return *slot;
}

}  // namespace wb::detail
