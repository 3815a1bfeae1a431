#include "sasv/pmf.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace sasv {

namespace {
constexpr char kMagic[4] = {'P', 'M', 'F', 'M'};
constexpr std::uint16_t kVersion = 1;
constexpr double kNormalizationTolerance = 1e-9;

void put_bytes(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void put_u16(std::ostream& os, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>(v >> 8)};
    put_bytes(os, b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    put_bytes(os, b, 4);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    put_bytes(os, b, 8);
}

void get_bytes(std::istream& is, void* data, std::size_t n, const std::filesystem::path& path) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        fail(Errc::io_error, "truncated PMF model file: " + path.string());
}

std::uint16_t get_u16(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[2];
    get_bytes(is, b, 2, path);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[4];
    get_bytes(is, b, 4, path);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is, const std::filesystem::path& path) {
    unsigned char b[8];
    get_bytes(is, b, 8, path);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}
}  // namespace

int pmf_bin_index(double sample, int bin_count) {
    if (bin_count < 1) fail(Errc::bad_argument, "bin count must be positive");
    if (!(sample >= -1.0 && sample <= 1.0))
        fail(Errc::out_of_range_sample,
             "sample " + std::to_string(sample) + " outside [-1, 1]; clip first");
    const int bin = static_cast<int>((sample + 1.0) * 0.5 * bin_count);
    return bin >= bin_count ? bin_count - 1 : bin;
}

PmfAccumulator::PmfAccumulator(int bin_count) {
    if (bin_count < 1) fail(Errc::bad_argument, "bin count must be positive");
    counts_.assign(static_cast<std::size_t>(bin_count), 0);
}

void PmfAccumulator::add_samples(std::span<const double> samples) {
    const int bins = bin_count();
    for (double x : samples) ++counts_[static_cast<std::size_t>(pmf_bin_index(x, bins))];
    total_ += samples.size();
}

void PmfAccumulator::merge(const PmfAccumulator& other) {
    if (other.bin_count() != bin_count())
        fail(Errc::bin_count_mismatch, "cannot merge histograms with different bin counts");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
}

std::vector<double> PmfAccumulator::normalized() const {
    if (total_ == 0) fail(Errc::empty_input, "no samples accumulated");
    std::vector<double> pmf(counts_.size());
    const double inv = 1.0 / static_cast<double>(total_);
    for (std::size_t i = 0; i < counts_.size(); ++i)
        pmf[i] = static_cast<double>(counts_[i]) * inv;
    return pmf;
}

std::vector<double> smooth_pmf(std::span<const double> pmf, double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1e-3))
        fail(Errc::bad_epsilon, "smoothing epsilon must lie in (0, 1e-3]");
    if (pmf.empty()) fail(Errc::empty_input, "cannot smooth an empty PMF");
    const double uniform = epsilon / static_cast<double>(pmf.size());
    std::vector<double> out(pmf.size());
    for (std::size_t i = 0; i < pmf.size(); ++i) out[i] = (1.0 - epsilon) * pmf[i] + uniform;
    return out;
}

std::vector<std::vector<double>> utterance_pmfs(const FilterBank& bank, const AudioBuffer& audio,
                                                int bin_count) {
    std::vector<std::vector<double>> pmfs;
    pmfs.reserve(static_cast<std::size_t>(bank.channel_count()));
    for (int c = 1; c <= bank.channel_count(); ++c) {
        const std::vector<double> filtered = bank.apply_channel(c, audio);
        const std::vector<double> clipped = clip_to_unit(filtered);
        PmfAccumulator acc(bin_count);
        acc.add_samples(clipped);
        pmfs.push_back(acc.normalized());
    }
    return pmfs;
}

void save_pmf_model(const PmfModel& model, const std::filesystem::path& path) {
    if (model.channels.empty()) fail(Errc::empty_input, "model has no channels");
    const int bins = model.bin_count();
    for (const auto& ch : model.channels)
        if (static_cast<int>(ch.size()) != bins)
            fail(Errc::bin_count_mismatch, "model channels disagree on bin count");

    std::ofstream os(path, std::ios::binary);
    if (!os) fail(Errc::io_error, "cannot open for writing: " + path.string());
    put_bytes(os, kMagic, 4);
    put_u16(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(model.name.size()));
    put_bytes(os, model.name.data(), model.name.size());
    put_u32(os, static_cast<std::uint32_t>(model.channels.size()));
    put_u32(os, static_cast<std::uint32_t>(bins));
    put_u32(os, model.file_count);
    for (const auto& ch : model.channels)
        for (double v : ch) put_f64(os, v);
    if (!os) fail(Errc::io_error, "write failed: " + path.string());
}

PmfModel load_pmf_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Errc::io_error, "cannot open: " + path.string());

    char magic[4];
    get_bytes(is, magic, 4, path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        fail(Errc::io_error, "not a PMF model file: " + path.string());
    const std::uint16_t version = get_u16(is, path);
    if (version != kVersion)
        fail(Errc::io_error,
             "unsupported PMF model version " + std::to_string(version) + ": " + path.string());

    PmfModel model;
    const std::uint32_t name_len = get_u32(is, path);
    model.name.resize(name_len);
    if (name_len > 0) get_bytes(is, model.name.data(), name_len, path);
    const std::uint32_t channel_count = get_u32(is, path);
    const std::uint32_t bin_count = get_u32(is, path);
    model.file_count = get_u32(is, path);
    if (channel_count == 0 || bin_count == 0)
        fail(Errc::io_error, "degenerate PMF model dimensions: " + path.string());

    model.channels.assign(channel_count, std::vector<double>(bin_count));
    for (auto& ch : model.channels) {
        KahanSum sum;
        for (double& v : ch) {
            v = get_f64(is, path);
            sum.add(v);
        }
        if (std::abs(sum.value() - 1.0) > kNormalizationTolerance)
            fail(Errc::not_normalized, "channel PMF does not sum to 1 in " + path.string());
    }
    return model;
}

}  // namespace sasv
