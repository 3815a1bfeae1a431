#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace sasv {

/// Fixed-size real<->complex FFT (FFTW backend, double precision).
/// Planning happens once at construction; execution is reentrant, so a
/// const RealFft may be shared across threads.
class RealFft {
public:
    explicit RealFft(std::size_t n);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const { return n_; }
    std::size_t spectrum_size() const { return n_ / 2 + 1; }

    /// in: n reals; out: n/2+1 complex bins.
    void forward(const double* in, std::complex<double>* out) const;
    /// in: n/2+1 complex bins; out: n reals, scaled by 1/n.
    void inverse(const std::complex<double>* in, double* out) const;

private:
    struct Impl;
    std::size_t n_;
    std::unique_ptr<Impl> impl_;
};

/// Causal FIR convolution by overlap-add. Output has the input's length
/// (the tail past the last input sample is dropped).
class FirConvolver {
public:
    explicit FirConvolver(std::span<const double> taps, std::size_t fft_size = 32768);

    std::vector<double> filter(std::span<const double> x) const;
    std::size_t tap_count() const { return taps_; }

private:
    std::size_t taps_;
    std::size_t fft_size_;
    std::size_t block_;
    std::shared_ptr<const RealFft> fft_;
    std::vector<std::complex<double>> tap_spectrum_;
};

}  // namespace sasv
