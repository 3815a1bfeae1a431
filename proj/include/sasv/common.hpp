#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sasv {

/// Error categories; each maps onto a CLI exit code (config=2, data=3, numeric=4).
enum class Errc {
    // audio
    malformed_wav,
    unsupported_format,
    empty_audio,
    non_finite_sample,
    // filterbank
    invalid_frequency_range,
    sample_rate_mismatch,
    bad_channel_index,
    // pmf
    empty_input,
    out_of_range_sample,
    empty_group,
    channel_count_mismatch,
    bad_epsilon,
    // similarity / embedding
    bin_count_mismatch,
    not_normalized,
    // classifiers
    single_class_data,
    non_finite_feature,
    too_few_minority_samples,
    layout_mismatch,
    bad_margins,
    divergent_loss,
    // metrics
    empty_class,
    missing_spoof_trials,
    zero_default_cost,
    unpaired_trials,
    statistic_undefined_on_resample,
    // fusion
    bad_alpha,
    out_of_declared_range,
    // generic
    io_error,
    config_error,
    bad_argument,
};

class SasvError : public std::runtime_error {
public:
    SasvError(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

    /// Process exit code per the CLI contract.
    int exit_code() const noexcept {
        switch (code_) {
            case Errc::config_error:
            case Errc::bad_argument:
            case Errc::bad_epsilon:
            case Errc::bad_margins:
            case Errc::bad_alpha:
            case Errc::invalid_frequency_range:
                return 2;
            case Errc::non_finite_sample:
            case Errc::non_finite_feature:
            case Errc::divergent_loss:
            case Errc::not_normalized:
                return 4;
            default:
                return 3;
        }
    }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw SasvError(code, what); }

/// Compensated (Kahan) accumulator for long sums of small doubles.
class KahanSum {
public:
    void add(double x) {
        const double y = x - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// splitmix64 step; used to derive independent per-item seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a digest of a canonical config string, rendered as fixed-width hex.
inline std::string config_digest(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace sasv
