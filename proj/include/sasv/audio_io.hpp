#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sasv/common.hpp"

namespace sasv {

/// Mono waveform normalized to [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate_hz = 0;
    std::string source_id;
};

/// Reads a RIFF/WAVE file holding 16-bit integer PCM with exactly one channel.
/// Integer samples are mapped to v / 32768 so the int16 range covers [-1, 1).
/// source_id is the file stem. Throws MalformedWav / UnsupportedFormat /
/// EmptyAudio with the path and byte offset of the offending chunk.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes samples as 16-bit mono PCM. Values are rounded to the nearest
/// int16 grid point (x * 32768) and clamped, so +1.0 lands on 32767; inputs
/// already on the grid round-trip exactly.
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz);

/// Clamps every value to [-1, 1], preserving length and order.
/// Throws NonFiniteSample on NaN or infinity.
std::vector<double> clip_to_unit(std::span<const double> samples);

}  // namespace sasv
