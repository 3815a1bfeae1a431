#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include "sasv/audio_io.hpp"
#include "sasv/fft.hpp"

namespace sasv {

enum class FilterKind { gammatone, inverse_gammatone };

struct FilterBankConfig {
    double min_cf_hz = 100.0;
    double max_cf_hz = 7000.0;
    int n_pairs = 10;
    int order = 4;            // gammatone order = biquad sections per channel
    int inverse_fir_taps = 512;
};

/// ERB of a gammatone channel centered at freq_hz (Glasberg & Moore).
double erb_bandwidth_hz(double freq_hz);
/// Frequency -> ERB-rate scale.
double erb_rate(double freq_hz);
/// ERB-rate -> frequency.
double erb_rate_inverse(double rate);

struct FilterSpec {
    struct Biquad {
        double b0 = 1.0, b1 = 0.0, b2 = 0.0;  // numerator
        double a1 = 0.0, a2 = 0.0;            // denominator (a0 == 1)
    };

    FilterKind kind = FilterKind::gammatone;
    double center_freq_hz = 0.0;
    double bandwidth_hz = 0.0;
    int order = 4;
    std::vector<Biquad> sections;  // gammatone cascade
    std::vector<double> fir_taps;  // inverse channel
    double gain = 1.0;             // applied once across the cascade
};

/// The 20-channel front end: channels 1..n_pairs are gammatone bandpass
/// filters on ERB-rate-spaced center frequencies, channels n_pairs+1..2*n_pairs
/// are their band-rejection complements. Immutable after design; apply_channel
/// is safe to call concurrently.
class FilterBank {
public:
    static FilterBank design(int sample_rate_hz, const FilterBankConfig& config);

    int sample_rate_hz() const { return sample_rate_hz_; }
    int channel_count() const { return static_cast<int>(channels_.size()); }
    const FilterSpec& channel(int index_1based) const;

    /// Single-pass causal filtering of the whole buffer; output length equals
    /// input length. The caller clips afterwards.
    std::vector<double> apply_channel(int index_1based, const AudioBuffer& audio) const;

    /// |H(f)| of one channel, evaluated analytically for the biquad cascade
    /// and by direct DFT of the taps for FIR channels.
    double magnitude_response(int index_1based, double freq_hz) const;

    /// Human-readable coefficient dump.
    void export_coefficients(std::ostream& os) const;

private:
    int sample_rate_hz_ = 0;
    FilterBankConfig config_;
    std::vector<FilterSpec> channels_;
    std::vector<std::shared_ptr<const FirConvolver>> convolvers_;  // inverse channels only
};

}  // namespace sasv
