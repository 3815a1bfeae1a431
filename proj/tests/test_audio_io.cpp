#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "sasv/audio_io.hpp"
#include "test_util.hpp"

using namespace sasv;

namespace {

void put_le32(std::ofstream& os, uint32_t v) {
  char b[4] = {char(v & 0xFF), char((v >> 8) & 0xFF), char((v >> 16) & 0xFF),
               char((v >> 24) & 0xFF)};
  os.write(b, 4);
}
void put_le16(std::ofstream& os, uint16_t v) {
  char b[2] = {char(v & 0xFF), char((v >> 8) & 0xFF)};
  os.write(b, 2);
}

// Independent minimal PCM writer so read_wav is checked against bytes this
// test laid down itself, not against write_wav.
void write_pcm(const std::filesystem::path& path, const std::vector<int16_t>& samples,
               int rate, int bits_per_sample = 16) {
  std::ofstream os(path, std::ios::binary);
  const uint32_t bytes_per_sample = bits_per_sample / 8;
  const uint32_t data_bytes = uint32_t(samples.size()) * bytes_per_sample;
  os.write("RIFF", 4);
  put_le32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_le32(os, 16);
  put_le16(os, 1);  // PCM
  put_le16(os, 1);  // mono
  put_le32(os, uint32_t(rate));
  put_le32(os, uint32_t(rate) * bytes_per_sample);
  put_le16(os, uint16_t(bytes_per_sample));
  put_le16(os, uint16_t(bits_per_sample));
  os.write("data", 4);
  put_le32(os, data_bytes);
  for (int16_t s : samples) {
    if (bits_per_sample == 16) {
      put_le16(os, uint16_t(s));
    } else {
      char b = char(s & 0xFF);
      os.write(&b, 1);
    }
  }
}

}  // namespace

TEST_CASE("int16 extremes map to v/32768") {
  auto dir = testutil::scratch_dir("audio_extremes");
  write_pcm(dir / "x.wav", {32767, 0, -32768}, 16000);
  AudioBuffer buf = read_wav(dir / "x.wav");
  REQUIRE(buf.samples.size() == 3);
  CHECK(buf.samples[0] == 32767.0 / 32768.0);
  CHECK(buf.samples[1] == 0.0);
  CHECK(buf.samples[2] == -1.0);
  CHECK(buf.sample_rate_hz == 16000);
  CHECK(buf.source_id == "x");
}

TEST_CASE("8-bit PCM rejected") {
  auto dir = testutil::scratch_dir("audio_8bit");
  write_pcm(dir / "x.wav", {1, 2, 3}, 16000, 8);
  CHECK_THROWS_AS(read_wav(dir / "x.wav"), SasvError);
  try {
    read_wav(dir / "x.wav");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::unsupported_format);
  }
}

TEST_CASE("zero-sample file rejected") {
  auto dir = testutil::scratch_dir("audio_empty");
  write_pcm(dir / "x.wav", {}, 16000);
  try {
    read_wav(dir / "x.wav");
    FAIL("expected EmptyAudio");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::empty_audio);
  }
}

TEST_CASE("truncated header rejected") {
  auto dir = testutil::scratch_dir("audio_bad");
  {
    std::ofstream os(dir / "x.wav", std::ios::binary);
    os.write("RIFFxx", 6);
  }
  try {
    read_wav(dir / "x.wav");
    FAIL("expected MalformedWav");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::malformed_wav);
  }
}

TEST_CASE("full-scale sine survives a write/read round trip") {
  auto dir = testutil::scratch_dir("audio_sine");
  const int rate = 16000;
  std::vector<double> sine(rate);
  for (int i = 0; i < rate; ++i)
    sine[i] = std::sin(2.0 * std::numbers::pi * 440.0 * i / rate);
  write_wav(dir / "sine.wav", sine, rate);
  AudioBuffer buf = read_wav(dir / "sine.wav");
  REQUIRE(buf.samples.size() == sine.size());
  double max_abs = 0.0;
  for (std::size_t i = 0; i < sine.size(); ++i) {
    // Half a quantization step everywhere except the top clamp zone: values
    // past 32767.5/32768 have no int16 neighbor above and saturate at 32767.
    double tol = sine[i] >= 32767.5 / 32768.0 ? 1.0 / 32768.0 : 1.0 / 65536.0;
    CHECK(std::fabs(buf.samples[i] - sine[i]) <= tol);
    max_abs = std::max(max_abs, std::fabs(buf.samples[i]));
  }
  CHECK(max_abs >= 0.999);
  CHECK(max_abs <= 1.0);
}

TEST_CASE("grid-aligned samples round-trip exactly") {
  auto dir = testutil::scratch_dir("audio_grid");
  std::mt19937_64 rng(7);
  std::vector<double> samples(500);
  for (double& s : samples)
    s = double(int64_t(rng() % 65536) - 32768) / 32768.0;
  write_wav(dir / "g.wav", samples, 8000);
  AudioBuffer buf = read_wav(dir / "g.wav");
  REQUIRE(buf.samples.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    CHECK(buf.samples[i] == samples[i]);
}

TEST_CASE("clip_to_unit clamps out-of-range and passes the rest") {
  std::vector<double> in = {1.5, -2.0, 0.3};
  auto out = clip_to_unit(in);
  CHECK(out == std::vector<double>{1.0, -1.0, 0.3});
  CHECK(clip_to_unit(std::vector<double>{0.0}) == std::vector<double>{0.0});
}

TEST_CASE("clip_to_unit is idempotent and order-preserving") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.6);
  std::vector<double> in(4000);
  for (double& s : in) s = noise(rng);
  std::size_t out_of_range = 0;
  for (double s : in)
    if (s > 1.0 || s < -1.0) ++out_of_range;
  CHECK(out_of_range > 0);

  auto once = clip_to_unit(in);
  auto twice = clip_to_unit(once);
  CHECK(once == twice);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] > 1.0 || in[i] < -1.0) {
      CHECK(std::fabs(once[i]) == 1.0);
      ++clamped;
    } else {
      CHECK(once[i] == in[i]);
    }
  }
  CHECK(clamped == out_of_range);
}

TEST_CASE("clip_to_unit rejects non-finite input") {
  try {
    clip_to_unit(std::vector<double>{0.1, std::nan("")});
    FAIL("expected NonFiniteSample");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::non_finite_sample);
  }
  CHECK_THROWS_AS(clip_to_unit(std::vector<double>{HUGE_VAL}), SasvError);
}
