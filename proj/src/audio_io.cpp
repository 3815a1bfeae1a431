#include "sasv/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace sasv {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
           std::uint32_t(p[3]) << 24;
}

std::uint16_t read_u16(const unsigned char* p) {
    return std::uint16_t(p[0] | (p[1] << 8));
}

[[noreturn]] void bad_wav(const std::filesystem::path& path, std::size_t offset,
                          const std::string& what) {
    fail(Errc::malformed_wav,
         path.string() + ": " + what + " (byte offset " + std::to_string(offset) + ")");
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open " + path.string());
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

    if (raw.size() < 12) bad_wav(path, raw.size(), "file shorter than RIFF header");
    if (std::memcmp(raw.data(), "RIFF", 4) != 0) bad_wav(path, 0, "missing RIFF tag");
    if (std::memcmp(raw.data() + 8, "WAVE", 4) != 0) bad_wav(path, 8, "missing WAVE tag");

    bool have_fmt = false;
    std::uint16_t format_tag = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const unsigned char* data_ptr = nullptr;
    std::uint32_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= raw.size()) {
        const char* id = reinterpret_cast<const char*>(raw.data() + pos);
        const std::uint32_t len = read_u32(raw.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + len > raw.size()) bad_wav(path, pos, "chunk overruns file");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (len < 16) bad_wav(path, pos, "fmt chunk too short");
            format_tag = read_u16(raw.data() + body);
            channels = read_u16(raw.data() + body + 2);
            sample_rate = read_u32(raw.data() + body + 4);
            bits = read_u16(raw.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_ptr = raw.data() + body;
            data_len = len;
        }
        pos = body + len + (len & 1);  // chunks are word-aligned
    }

    if (!have_fmt) bad_wav(path, pos, "no fmt chunk");
    if (data_ptr == nullptr) bad_wav(path, pos, "no data chunk");
    if (format_tag != 1)
        fail(Errc::unsupported_format,
             path.string() + ": format tag " + std::to_string(format_tag) + " (want PCM)");
    if (bits != 16)
        fail(Errc::unsupported_format,
             path.string() + ": " + std::to_string(bits) + "-bit samples (want 16)");
    if (channels != 1)
        fail(Errc::unsupported_format,
             path.string() + ": " + std::to_string(channels) + " channels (want mono)");
    if (sample_rate == 0) bad_wav(path, 0, "zero sample rate");
    if (data_len < 2) fail(Errc::empty_audio, path.string() + ": no samples");

    const std::size_t n = data_len / 2;
    AudioBuffer buf;
    buf.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t v =
            static_cast<std::int16_t>(read_u16(data_ptr + 2 * i));
        buf.samples[i] = static_cast<double>(v) / 32768.0;
    }
    buf.sample_rate_hz = static_cast<int>(sample_rate);
    buf.source_id = path.stem().string();
    return buf;
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate_hz) {
    if (samples.empty()) fail(Errc::empty_audio, "refusing to write empty wav");
    std::vector<unsigned char> out;
    const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
    out.reserve(44 + data_len);

    auto push_u32 = [&out](std::uint32_t v) {
        out.push_back(v & 0xff);
        out.push_back((v >> 8) & 0xff);
        out.push_back((v >> 16) & 0xff);
        out.push_back((v >> 24) & 0xff);
    };
    auto push_u16 = [&out](std::uint16_t v) {
        out.push_back(v & 0xff);
        out.push_back((v >> 8) & 0xff);
    };
    auto push_tag = [&out](const char* t) { out.insert(out.end(), t, t + 4); };

    push_tag("RIFF");
    push_u32(36 + data_len);
    push_tag("WAVE");
    push_tag("fmt ");
    push_u32(16);
    push_u16(1);  // PCM
    push_u16(1);  // mono
    push_u32(static_cast<std::uint32_t>(sample_rate_hz));
    push_u32(static_cast<std::uint32_t>(sample_rate_hz) * 2);
    push_u16(2);
    push_u16(16);
    push_tag("data");
    push_u32(data_len);
    for (double x : samples) {
        if (!std::isfinite(x)) fail(Errc::non_finite_sample, "non-finite sample in wav write");
        long q = std::lround(x * 32768.0);
        q = std::clamp(q, -32768L, 32767L);
        push_u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::io_error, "cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) fail(Errc::io_error, "short write to " + path.string());
}

std::vector<double> clip_to_unit(std::span<const double> samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    for (double x : samples) {
        if (!std::isfinite(x)) fail(Errc::non_finite_sample, "non-finite sample in clip_to_unit");
        out.push_back(std::clamp(x, -1.0, 1.0));
    }
    return out;
}

}  // namespace sasv
