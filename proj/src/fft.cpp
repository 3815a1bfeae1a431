#include "sasv/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "sasv/common.hpp"

namespace sasv {

namespace {
// FFTW planning is not reentrant; execution is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuf = std::unique_ptr<T[], FftwDeleter>;

template <typename T>
FftwBuf<T> fftw_alloc_buf(std::size_t n) {
    return FftwBuf<T>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}
}  // namespace

struct RealFft::Impl {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    ~Impl() {
        std::lock_guard<std::mutex> lock(plan_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (inv) fftw_destroy_plan(inv);
    }
};

RealFft::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
    if (n < 2) fail(Errc::bad_argument, "FFT size must be >= 2");
    auto real = fftw_alloc_buf<double>(n);
    auto cplx = fftw_alloc_buf<fftw_complex>(n / 2 + 1);
    std::lock_guard<std::mutex> lock(plan_mutex());
    impl_->fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.get(), cplx.get(), FFTW_ESTIMATE);
    impl_->inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), cplx.get(), real.get(), FFTW_ESTIMATE);
}

RealFft::~RealFft() = default;

void RealFft::forward(const double* in, std::complex<double>* out) const {
    auto real = fftw_alloc_buf<double>(n_);
    auto cplx = fftw_alloc_buf<fftw_complex>(spectrum_size());
    std::memcpy(real.get(), in, sizeof(double) * n_);
    fftw_execute_dft_r2c(impl_->fwd, real.get(), cplx.get());
    std::memcpy(out, cplx.get(), sizeof(fftw_complex) * spectrum_size());
}

void RealFft::inverse(const std::complex<double>* in, double* out) const {
    auto real = fftw_alloc_buf<double>(n_);
    auto cplx = fftw_alloc_buf<fftw_complex>(spectrum_size());
    std::memcpy(cplx.get(), in, sizeof(fftw_complex) * spectrum_size());
    fftw_execute_dft_c2r(impl_->inv, cplx.get(), real.get());
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = real[i] * scale;
}

FirConvolver::FirConvolver(std::span<const double> taps, std::size_t fft_size)
    : taps_(taps.size()), fft_size_(fft_size) {
    if (taps.empty()) fail(Errc::bad_argument, "FIR with zero taps");
    if (fft_size_ < 2 * taps_) fft_size_ = 2 * taps_;
    block_ = fft_size_ - taps_ + 1;
    fft_ = std::make_shared<RealFft>(fft_size_);
    std::vector<double> padded(fft_size_, 0.0);
    std::copy(taps.begin(), taps.end(), padded.begin());
    tap_spectrum_.resize(fft_->spectrum_size());
    fft_->forward(padded.data(), tap_spectrum_.data());
}

std::vector<double> FirConvolver::filter(std::span<const double> x) const {
    std::vector<double> out(x.size(), 0.0);
    if (x.empty()) return out;
    std::vector<double> scratch(fft_size_);
    std::vector<std::complex<double>> spec(fft_->spectrum_size());
    for (std::size_t start = 0; start < x.size(); start += block_) {
        const std::size_t len = std::min(block_, x.size() - start);
        std::fill(scratch.begin(), scratch.end(), 0.0);
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(start),
                  x.begin() + static_cast<std::ptrdiff_t>(start + len), scratch.begin());
        fft_->forward(scratch.data(), spec.data());
        for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= tap_spectrum_[k];
        fft_->inverse(spec.data(), scratch.data());
        const std::size_t copy_len = std::min(len + taps_ - 1, x.size() - start);
        for (std::size_t i = 0; i < copy_len; ++i) out[start + i] += scratch[i];
    }
    return out;
}

}  // namespace sasv
