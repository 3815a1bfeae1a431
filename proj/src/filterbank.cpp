#include "sasv/filterbank.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>

namespace sasv {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kErbSlope = 0.00437;     // per Hz
constexpr double kBandwidthFactor = 1.019;
constexpr double kNotchFloor = 1e-4;      // -80 dB floor inside the rejected band
constexpr std::size_t kDesignFftSize = 16384;

std::complex<double> biquad_response(const FilterSpec::Biquad& s, double omega) {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = std::polar(1.0, -2.0 * omega);
    return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

double cascade_magnitude(const FilterSpec& spec, double omega) {
    std::complex<double> h = 1.0;
    for (const auto& s : spec.sections) h *= biquad_response(s, omega);
    return std::abs(h) * spec.gain;
}

double fir_magnitude(const FilterSpec& spec, double omega) {
    std::complex<double> h = 0.0;
    for (std::size_t n = 0; n < spec.fir_taps.size(); ++n)
        h += spec.fir_taps[n] * std::polar(1.0, -omega * static_cast<double>(n));
    return std::abs(h) * spec.gain;
}

/// Minimum-phase FIR whose squared magnitude approximates the sampled power
/// spectrum, via the real-cepstrum factorization.
std::vector<double> min_phase_fir(const std::vector<double>& power_half_spectrum,
                                  std::size_t taps) {
    const std::size_t nfft = 2 * (power_half_spectrum.size() - 1);
    RealFft fft(nfft);

    std::vector<std::complex<double>> log_mag(power_half_spectrum.size());
    for (std::size_t k = 0; k < power_half_spectrum.size(); ++k)
        log_mag[k] = 0.5 * std::log(power_half_spectrum[k]);

    std::vector<double> cepstrum(nfft);
    fft.inverse(log_mag.data(), cepstrum.data());

    std::vector<double> folded(nfft, 0.0);
    folded[0] = cepstrum[0];
    for (std::size_t n = 1; n < nfft / 2; ++n) folded[n] = 2.0 * cepstrum[n];
    folded[nfft / 2] = cepstrum[nfft / 2];

    std::vector<std::complex<double>> spec(fft.spectrum_size());
    fft.forward(folded.data(), spec.data());
    for (auto& v : spec) v = std::exp(v);

    std::vector<double> impulse(nfft);
    fft.inverse(spec.data(), impulse.data());
    impulse.resize(taps);
    return impulse;
}
}  // namespace

double erb_bandwidth_hz(double freq_hz) { return 24.7 * (kErbSlope * freq_hz + 1.0); }

double erb_rate(double freq_hz) { return 21.4 * std::log10(kErbSlope * freq_hz + 1.0); }

double erb_rate_inverse(double rate) {
    return (std::pow(10.0, rate / 21.4) - 1.0) / kErbSlope;
}

FilterBank FilterBank::design(int sample_rate_hz, const FilterBankConfig& config) {
    if (sample_rate_hz < 8000)
        fail(Errc::invalid_frequency_range,
             "sample rate " + std::to_string(sample_rate_hz) + " below 8000 Hz");
    const double nyquist = sample_rate_hz / 2.0;
    if (!(config.min_cf_hz > 0.0) || !(config.min_cf_hz < config.max_cf_hz) ||
        !(config.max_cf_hz < nyquist))
        fail(Errc::invalid_frequency_range,
             "need 0 < min_cf < max_cf < Nyquist, got [" + std::to_string(config.min_cf_hz) +
                 ", " + std::to_string(config.max_cf_hz) + "] at fs " +
                 std::to_string(sample_rate_hz));
    if (config.n_pairs < 1 || config.order < 1 || config.inverse_fir_taps < 8)
        fail(Errc::invalid_frequency_range, "bad filter bank shape parameters");

    FilterBank bank;
    bank.sample_rate_hz_ = sample_rate_hz;
    bank.config_ = config;

    // Center frequencies equally spaced on the ERB-rate scale.
    std::vector<double> cfs(static_cast<std::size_t>(config.n_pairs));
    const double r_lo = erb_rate(config.min_cf_hz);
    const double r_hi = erb_rate(config.max_cf_hz);
    for (int i = 0; i < config.n_pairs; ++i) {
        const double t = config.n_pairs == 1
                             ? 0.5
                             : static_cast<double>(i) / static_cast<double>(config.n_pairs - 1);
        cfs[static_cast<std::size_t>(i)] = erb_rate_inverse(r_lo + (r_hi - r_lo) * t);
    }

    // Gammatone half: identical all-pole biquad sections, unity gain at cf.
    for (double cf : cfs) {
        FilterSpec spec;
        spec.kind = FilterKind::gammatone;
        spec.center_freq_hz = cf;
        spec.bandwidth_hz = kBandwidthFactor * erb_bandwidth_hz(cf);
        spec.order = config.order;
        const double r = std::exp(-kTwoPi * spec.bandwidth_hz / sample_rate_hz);
        const double theta = kTwoPi * cf / sample_rate_hz;
        FilterSpec::Biquad s;
        s.a1 = -2.0 * r * std::cos(theta);
        s.a2 = r * r;
        spec.sections.assign(static_cast<std::size_t>(config.order), s);
        spec.gain = 1.0;
        const double peak = cascade_magnitude(spec, theta);
        spec.gain = 1.0 / peak;
        bank.channels_.push_back(std::move(spec));
    }

    // Inverse half: minimum-phase FIR factored from the power complement of
    // the partner's magnitude response.
    for (int i = 0; i < config.n_pairs; ++i) {
        const FilterSpec& partner = bank.channels_[static_cast<std::size_t>(i)];
        std::vector<double> power(kDesignFftSize / 2 + 1);
        for (std::size_t k = 0; k < power.size(); ++k) {
            const double omega = kTwoPi * static_cast<double>(k) / kDesignFftSize;
            const double m = cascade_magnitude(partner, omega);
            power[k] = std::max(kNotchFloor * kNotchFloor, 1.0 - m * m);
        }
        FilterSpec spec;
        spec.kind = FilterKind::inverse_gammatone;
        spec.center_freq_hz = partner.center_freq_hz;
        spec.bandwidth_hz = partner.bandwidth_hz;
        spec.order = config.order;
        spec.fir_taps = min_phase_fir(power, static_cast<std::size_t>(config.inverse_fir_taps));
        spec.gain = 1.0;
        bank.channels_.push_back(std::move(spec));
    }

    for (const auto& spec : bank.channels_) {
        if (spec.kind == FilterKind::inverse_gammatone)
            bank.convolvers_.push_back(std::make_shared<const FirConvolver>(spec.fir_taps));
        else
            bank.convolvers_.push_back(nullptr);
    }
    return bank;
}

const FilterSpec& FilterBank::channel(int index_1based) const {
    if (index_1based < 1 || index_1based > channel_count())
        fail(Errc::bad_channel_index, "channel index " + std::to_string(index_1based) +
                                          " not in 1.." + std::to_string(channel_count()));
    return channels_[static_cast<std::size_t>(index_1based - 1)];
}

std::vector<double> FilterBank::apply_channel(int index_1based, const AudioBuffer& audio) const {
    const FilterSpec& spec = channel(index_1based);
    if (audio.sample_rate_hz != sample_rate_hz_)
        fail(Errc::sample_rate_mismatch,
             "buffer at " + std::to_string(audio.sample_rate_hz) + " Hz, bank at " +
                 std::to_string(sample_rate_hz_) + " Hz");

    if (spec.kind == FilterKind::inverse_gammatone) {
        const auto& conv = convolvers_[static_cast<std::size_t>(index_1based - 1)];
        return conv->filter(audio.samples);
    }

    std::vector<double> y(audio.samples.begin(), audio.samples.end());
    for (const auto& s : spec.sections) {
        double y1 = 0.0, y2 = 0.0;
        for (double& v : y) {
            const double out = v - s.a1 * y1 - s.a2 * y2;
            y2 = y1;
            y1 = out;
            v = out;
        }
    }
    for (double& v : y) v *= spec.gain;
    return y;
}

double FilterBank::magnitude_response(int index_1based, double freq_hz) const {
    const FilterSpec& spec = channel(index_1based);
    const double omega = kTwoPi * freq_hz / sample_rate_hz_;
    return spec.kind == FilterKind::gammatone ? cascade_magnitude(spec, omega)
                                              : fir_magnitude(spec, omega);
}

void FilterBank::export_coefficients(std::ostream& os) const {
    os << "# channel kind center_freq_hz bandwidth_hz order coefficients\n";
    for (int i = 1; i <= channel_count(); ++i) {
        const FilterSpec& spec = channels_[static_cast<std::size_t>(i - 1)];
        os << i << ' '
           << (spec.kind == FilterKind::gammatone ? "gammatone" : "inverse_gammatone") << ' '
           << spec.center_freq_hz << ' ' << spec.bandwidth_hz << ' ' << spec.order;
        if (spec.kind == FilterKind::gammatone) {
            os << " gain=" << spec.gain;
            for (const auto& s : spec.sections)
                os << " [b " << s.b0 << ' ' << s.b1 << ' ' << s.b2 << " a 1 " << s.a1 << ' '
                   << s.a2 << ']';
        } else {
            os << " taps";
            for (double t : spec.fir_taps) os << ' ' << t;
        }
        os << '\n';
    }
}

}  // namespace sasv
