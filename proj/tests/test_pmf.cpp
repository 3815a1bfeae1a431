#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sasv/pmf.hpp"
#include "sasv/similarity.hpp"
#include "test_util.hpp"

using namespace sasv;

namespace {

std::vector<double> pmf_of(std::span<const double> samples, int bins) {
  PmfAccumulator acc(bins);
  acc.add_samples(samples);
  return acc.normalized();
}

}  // namespace

TEST_CASE("endpoint samples land in the outermost bins") {
  auto p = pmf_of(std::vector<double>{-1.0, -1.0, 1.0, 1.0}, 4);
  CHECK(p == std::vector<double>{0.5, 0.0, 0.0, 0.5});
}

TEST_CASE("constant signal gives a delta PMF") {
  auto p = pmf_of(std::vector<double>(100, 0.0), 16);
  int hot = pmf_bin_index(0.0, 16);
  for (int i = 0; i < 16; ++i) CHECK(p[i] == (i == hot ? 1.0 : 0.0));
}

TEST_CASE("bin index covers [-1,1] with the right edge closed") {
  const int bins = 8;
  const double width = 2.0 / bins;
  CHECK(pmf_bin_index(-1.0, bins) == 0);
  CHECK(pmf_bin_index(1.0, bins) == bins - 1);
  for (int i = 0; i < bins; ++i) {
    CHECK(pmf_bin_index(-1.0 + i * width, bins) == i);
    CHECK(pmf_bin_index(-1.0 + (i + 0.999) * width, bins) == i);
  }
  CHECK_THROWS_AS(pmf_bin_index(1.0000001, bins), SasvError);
  CHECK_THROWS_AS(pmf_bin_index(std::nan(""), bins), SasvError);
}

TEST_CASE("uniform noise matches an independent histogram at full bin count") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::size_t n = 1'000'000;
  std::vector<double> samples(n);
  for (double& s : samples) s = unit(rng);

  auto p = pmf_of(samples, kDefaultBinCount);

  // Independent histogram: direct floor arithmetic, no accumulator code.
  std::vector<std::uint64_t> ref(kDefaultBinCount, 0);
  for (double s : samples) {
    int idx = int((s + 1.0) / 2.0 * kDefaultBinCount);
    idx = std::clamp(idx, 0, kDefaultBinCount - 1);
    ref[std::size_t(idx)] += 1;
  }
  double max_vs_ref = 0.0, max_vs_uniform = 0.0;
  for (int i = 0; i < kDefaultBinCount; ++i) {
    double r = double(ref[std::size_t(i)]) / double(n);
    max_vs_ref = std::max(max_vs_ref, std::fabs(p[std::size_t(i)] - r));
    max_vs_uniform = std::max(max_vs_uniform, std::fabs(p[std::size_t(i)] - 1.0 / kDefaultBinCount));
  }
  // A single mis-binned sample would move 1/n = 1e-6 of mass; anything below
  // 1e-15 is division rounding, not a binning disagreement.
  CHECK(max_vs_ref < 1e-15);
  CHECK(max_vs_uniform < 5e-5);
}

TEST_CASE("PMF sums to one and ignores sample order") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> samples(5000);
  for (double& s : samples) s = unit(rng);
  auto p = pmf_of(samples, 1024);
  double total = 0.0;
  for (double v : p) total += v;
  CHECK(std::fabs(total - 1.0) <= 1e-9);

  std::shuffle(samples.begin(), samples.end(), rng);
  CHECK(pmf_of(samples, 1024) == p);
}

TEST_CASE("empty accumulator cannot normalize") {
  PmfAccumulator acc(64);
  try {
    acc.normalized();
    FAIL("expected EmptyInput");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::empty_input);
  }
}

TEST_CASE("merging accumulators equals pooling the samples") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  PmfAccumulator pooled(512);
  PmfAccumulator merged(512);
  std::vector<double> all;
  for (int file = 0; file < 50; ++file) {
    std::size_t len = 200 + rng() % 1800;
    std::vector<double> samples(len);
    for (double& s : samples) s = unit(rng);
    PmfAccumulator one(512);
    one.add_samples(samples);
    merged.merge(one);
    all.insert(all.end(), samples.begin(), samples.end());
  }
  pooled.add_samples(all);
  auto a = pooled.normalized();
  auto b = merged.normalized();
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::fabs(a[i] - b[i]) <= 1e-12);
}

TEST_CASE("merge rejects mismatched bin counts") {
  PmfAccumulator a(64), b(128);
  try {
    a.merge(b);
    FAIL("expected BinCountMismatch");
  } catch (const SasvError& e) {
    CHECK(e.code() == Errc::bin_count_mismatch);
  }
}

TEST_CASE("smoothing fixes the uniform PMF and lifts zero bins") {
  const int bins = 256;
  std::vector<double> uniform(bins, 1.0 / bins);
  auto su = smooth_pmf(uniform, 1e-4);
  for (double v : su) CHECK(v == doctest::Approx(1.0 / bins).epsilon(1e-12));

  std::vector<double> delta(bins, 0.0);
  delta[3] = 1.0;
  auto sd = smooth_pmf(delta, 1e-6);
  for (int i = 0; i < bins; ++i) {
    if (i == 3) continue;
    CHECK(sd[i] == doctest::Approx(1e-6 / bins).epsilon(1e-12));
  }
  double total = 0.0;
  for (double v : sd) total += v;
  CHECK(std::fabs(total - 1.0) <= 1e-9);
}

TEST_CASE("smoothed PMFs have positive bins and zero self-divergence") {
  std::mt19937_64 rng(23);
  auto p = testutil::random_pmf(rng, 512, 0.5);
  auto sp = smooth_pmf(p, 1e-6);
  for (double v : sp) CHECK(v > 0.0);
  CHECK(measure(Measure::kullback_leibler, sp, sp) == 0.0);
}

TEST_CASE("smoothing epsilon outside (0, 1e-3] rejected") {
  std::vector<double> p(4, 0.25);
  for (double eps : {0.0, -1e-6, 2e-3, 1.0}) {
    try {
      smooth_pmf(p, eps);
      FAIL("expected BadEpsilon");
    } catch (const SasvError& e) {
      CHECK(e.code() == Errc::bad_epsilon);
    }
  }
}

TEST_CASE("PMF model file round-trips bit-exactly") {
  auto dir = testutil::scratch_dir("pmf_model");
  std::mt19937_64 rng(29);
  PmfModel model;
  model.name = "bonafide";
  model.file_count = 42;
  for (int c = 0; c < 20; ++c) model.channels.push_back(testutil::random_pmf(rng, 128));

  save_pmf_model(model, dir / "m.pmfm");
  PmfModel back = load_pmf_model(dir / "m.pmfm");
  CHECK(back.name == model.name);
  CHECK(back.file_count == model.file_count);
  REQUIRE(back.channels.size() == model.channels.size());
  for (std::size_t c = 0; c < model.channels.size(); ++c)
    CHECK(back.channels[c] == model.channels[c]);
}

TEST_CASE("utterance PMFs: one per channel, each normalized") {
  FilterBank bank = FilterBank::design(16000, {});
  std::mt19937_64 rng(31);
  AudioBuffer buf;
  buf.sample_rate_hz = 16000;
  buf.source_id = "u";
  buf.samples.resize(4000);
  std::uniform_real_distribution<double> unit(-0.8, 0.8);
  for (double& s : buf.samples) s = unit(rng);

  auto pmfs = utterance_pmfs(bank, buf, 1024);
  REQUIRE(pmfs.size() == 20);
  for (const auto& p : pmfs) {
    REQUIRE(p.size() == 1024);
    double total = 0.0;
    for (double v : p) total += v;
    CHECK(std::fabs(total - 1.0) <= 1e-9);
  }
}
