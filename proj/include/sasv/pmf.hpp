#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sasv/audio_io.hpp"
#include "sasv/common.hpp"
#include "sasv/filterbank.hpp"

namespace sasv {

/// Bin count of the amplitude histograms over [-1, 1].
inline constexpr int kDefaultBinCount = 1 << 16;

/// Maps a sample in [-1, 1] to its bin. The right edge +1.0 lands in the last
/// bin; anything outside the interval (including NaN) raises
/// Errc::out_of_range_sample.
int pmf_bin_index(double sample, int bin_count = kDefaultBinCount);

/// Streaming histogram over [-1, 1]. Counts are exact integers, so pooling
/// several add_samples calls equals accumulating the concatenated signal.
class PmfAccumulator {
  public:
    explicit PmfAccumulator(int bin_count = kDefaultBinCount);

    void add_samples(std::span<const double> samples);
    void merge(const PmfAccumulator& other);

    int bin_count() const { return static_cast<int>(counts_.size()); }
    std::uint64_t total_count() const { return total_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

    /// Normalizes counts to a probability vector. Errc::empty_input when no
    /// samples were added.
    std::vector<double> normalized() const;

  private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Mixes a PMF with the uniform distribution: (1-eps)*p + eps/B, used to make
/// log-ratio divergences finite. eps must lie in (0, 1e-3].
std::vector<double> smooth_pmf(std::span<const double> pmf, double epsilon);

/// Per-channel PMFs of one utterance: filter through every bank channel, clip
/// to [-1, 1], histogram. Result is indexed [channel-1][bin].
std::vector<std::vector<double>> utterance_pmfs(const FilterBank& bank,
                                                const AudioBuffer& audio,
                                                int bin_count = kDefaultBinCount);

/// Class-conditional PMF model: one pooled PMF per filter bank channel.
struct PmfModel {
    std::string name;               // class label, e.g. "bonafide" or "male"
    std::uint32_t file_count = 0;   // utterances pooled into the model
    std::vector<std::vector<double>> channels;

    int channel_count() const { return static_cast<int>(channels.size()); }
    int bin_count() const { return channels.empty() ? 0 : static_cast<int>(channels[0].size()); }
};

/// Binary model file, magic "PMFM", little-endian payload.
void save_pmf_model(const PmfModel& model, const std::filesystem::path& path);
PmfModel load_pmf_model(const std::filesystem::path& path);

}  // namespace sasv
