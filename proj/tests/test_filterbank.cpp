#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "sasv/filterbank.hpp"
#include "test_util.hpp"

using namespace sasv;

namespace {

AudioBuffer make_buffer(std::vector<double> samples, int rate = 16000) {
  AudioBuffer buf;
  buf.samples = std::move(samples);
  buf.sample_rate_hz = rate;
  buf.source_id = "synthetic";
  return buf;
}

std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<double> x(n);
  for (double& v : x) v = unit(rng);
  return x;
}

double rms(const std::vector<double>& x, std::size_t from) {
  double acc = 0.0;
  for (std::size_t i = from; i < x.size(); ++i) acc += x[i] * x[i];
  return std::sqrt(acc / double(x.size() - from));
}

}  // namespace

TEST_CASE("bank structure: 20 channels, ascending centers, one per kind") {
  FilterBank bank = FilterBank::design(16000, {});
  CHECK(bank.channel_count() == 20);
  for (int n = 1; n <= 10; ++n) {
    const FilterSpec& g = bank.channel(n);
    const FilterSpec& inv = bank.channel(n + 10);
    CHECK(g.kind == FilterKind::gammatone);
    CHECK(inv.kind == FilterKind::inverse_gammatone);
    CHECK(g.center_freq_hz == inv.center_freq_hz);
    CHECK(g.center_freq_hz >= 100.0 - 1e-6);
    CHECK(g.center_freq_hz <= 7000.0 + 1e-6);
    CHECK(g.bandwidth_hz > 0.0);
    if (n > 1) CHECK(g.center_freq_hz > bank.channel(n - 1).center_freq_hz);
  }
  CHECK(bank.channel(1).center_freq_hz == doctest::Approx(100.0));
  CHECK(bank.channel(10).center_freq_hz == doctest::Approx(7000.0));
}

TEST_CASE("inverted frequency range rejected") {
  FilterBankConfig cfg;
  cfg.min_cf_hz = 7000.0;
  cfg.max_cf_hz = 100.0;
  try {
    FilterBank::design(16000, cfg);
    FAIL("expected InvalidFrequencyRange");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::invalid_frequency_range);
  }
  cfg.min_cf_hz = 100.0;
  cfg.max_cf_hz = 9000.0;  // above Nyquist
  CHECK_THROWS_AS(FilterBank::design(16000, cfg), SasvError);
}

TEST_CASE("design is deterministic: identical config, identical coefficients") {
  FilterBank a = FilterBank::design(16000, {});
  FilterBank b = FilterBank::design(16000, {});
  std::ostringstream sa, sb;
  a.export_coefficients(sa);
  b.export_coefficients(sb);
  CHECK(sa.str() == sb.str());
  for (int n = 1; n <= 20; ++n) {
    const FilterSpec& fa = a.channel(n);
    const FilterSpec& fb = b.channel(n);
    CHECK(fa.gain == fb.gain);
    REQUIRE(fa.sections.size() == fb.sections.size());
    for (std::size_t s = 0; s < fa.sections.size(); ++s) {
      CHECK(fa.sections[s].a1 == fb.sections[s].a1);
      CHECK(fa.sections[s].a2 == fb.sections[s].a2);
    }
    CHECK(fa.fir_taps == fb.fir_taps);
  }
}

TEST_CASE("gammatone response peaks near its center frequency") {
  FilterBank bank = FilterBank::design(16000, {});
  for (int n = 1; n <= 10; ++n) {
    double cf = bank.channel(n).center_freq_hz;
    double at_cf = bank.magnitude_response(n, cf);
    // 2*cf may exceed Nyquist for the top channels; the evaluation aliases
    // onto the mirrored frequency, still far from the passband.
    double off = bank.magnitude_response(n, 2.0 * cf);
    CHECK(at_cf >= off);
    CHECK(at_cf == doctest::Approx(1.0).epsilon(1e-6));  // unity gain at cf
  }
}

TEST_CASE("zero input yields zero output on every channel") {
  FilterBank bank = FilterBank::design(16000, {});
  AudioBuffer zero = make_buffer(std::vector<double>(2048, 0.0));
  for (int n = 1; n <= 20; ++n) {
    auto y = bank.apply_channel(n, zero);
    REQUIRE(y.size() == zero.samples.size());
    for (double v : y) CHECK(v == 0.0);
  }
}

TEST_CASE("channels are linear: superposition to 1e-9") {
  FilterBank bank = FilterBank::design(16000, {});
  std::mt19937_64 rng(31);
  std::vector<double> x = random_signal(rng, 3000);
  std::vector<double> y = random_signal(rng, 3000);
  std::vector<double> sum(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sum[i] = x[i] + y[i];
  for (int n : {1, 5, 10, 11, 15, 20}) {
    auto fx = bank.apply_channel(n, make_buffer(x));
    auto fy = bank.apply_channel(n, make_buffer(y));
    auto fsum = bank.apply_channel(n, make_buffer(sum));
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(std::fabs(fsum[i] - (fx[i] + fy[i])) <= 1e-9);
  }
}

TEST_CASE("channels are time-invariant: shifted input, shifted output") {
  FilterBank bank = FilterBank::design(16000, {});
  std::mt19937_64 rng(37);
  const std::size_t shift = 100;
  std::vector<double> x = random_signal(rng, 2000);
  std::vector<double> shifted(x.size() + shift, 0.0);
  std::copy(x.begin(), x.end(), shifted.begin() + shift);
  for (int n : {2, 9, 12, 19}) {
    auto fx = bank.apply_channel(n, make_buffer(x));
    auto fshift = bank.apply_channel(n, make_buffer(shifted));
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(std::fabs(fshift[i + shift] - fx[i]) <= 1e-9);
  }
}

TEST_CASE("gammatone and inverse responses are complementary in power") {
  FilterBank bank = FilterBank::design(16000, {});
  for (int n = 1; n <= 10; ++n) {
    for (double f = 100.0; f <= 7000.0; f *= 1.35) {
      double hg = bank.magnitude_response(n, f);
      double hi = bank.magnitude_response(n + 10, f);
      double power = hg * hg + hi * hi;
      CHECK(power >= 0.5);
      CHECK(power <= 1.5);
    }
  }
}

TEST_CASE("on-center sine passes with > 2x the RMS of an off-center sine") {
  const int rate = 16000;
  FilterBank bank = FilterBank::design(rate, {});
  for (int n : {2, 5, 8}) {
    double cf = bank.channel(n).center_freq_hz;
    std::vector<double> on(rate), off(rate);
    for (int i = 0; i < rate; ++i) {
      on[i] = 0.5 * std::sin(2.0 * std::numbers::pi * cf * i / rate);
      off[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 2.0 * cf * i / rate);
    }
    auto fon = bank.apply_channel(n, make_buffer(on, rate));
    auto foff = bank.apply_channel(n, make_buffer(off, rate));
    CHECK(rms(fon, fon.size() / 2) > 2.0 * rms(foff, foff.size() / 2));
  }
}

TEST_CASE("sample-rate mismatch and bad channel index rejected") {
  FilterBank bank = FilterBank::design(16000, {});
  AudioBuffer wrong = make_buffer({0.1, 0.2}, 8000);
  try {
    bank.apply_channel(1, wrong);
    FAIL("expected SampleRateMismatch");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::sample_rate_mismatch);
  }
  AudioBuffer ok = make_buffer({0.1, 0.2}, 16000);
  try {
    bank.apply_channel(21, ok);
    FAIL("expected BadChannelIndex");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::bad_channel_index);
  }
  CHECK_THROWS_AS(bank.apply_channel(0, ok), SasvError);
}
