#include <cmath>
#include <random>
#include <sstream>

#include "sasv/audio_io.hpp"
#include "sasv/synth.hpp"

namespace sasv {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Sampler {
    std::mt19937_64 rng;
    bool has_spare = false;
    double spare = 0.0;

    explicit Sampler(std::uint64_t seed) : rng(seed) {}

    double gaussian() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u1 = uniform01(rng);
        while (u1 == 0.0) u1 = uniform01(rng);
        const double u2 = uniform01(rng);
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare = r * std::sin(kTwoPi * u2);
        has_spare = true;
        return r * std::cos(kTwoPi * u2);
    }

    double laplacian() {
        double u = uniform01(rng);
        while (u == 0.0) u = uniform01(rng);
        const double v = u - 0.5;
        const double mag = -std::log(1.0 - 2.0 * std::abs(v));
        return v < 0.0 ? -mag : mag;
    }
};

std::string subset_name(int subset) {
    switch (subset) {
        case 0: return "train";
        case 1: return "dev";
        default: return "eval";
    }
}

std::string make_id(const std::string& subset, char gender, TrialClass cls, int index) {
    std::ostringstream id;
    id << subset << '_' << gender << '_' << to_string(cls) << '_';
    id.width(4);
    id.fill('0');
    id << index;
    return id.str();
}

void validate(const SynthConfig& config) {
    if (config.sample_rate_hz < 8000)
        fail(Errc::config_error, "synth sample rate must be at least 8000");
    if (!(config.duration_s > 0.0)) fail(Errc::config_error, "synth duration must be positive");
    if (config.attacks < 1) fail(Errc::config_error, "synth needs at least one attack id");
    for (const SubsetCounts* s : {&config.train, &config.dev, &config.eval})
        if (s->target < 0 || s->nontarget < 0 || s->spoof < 0)
            fail(Errc::config_error, "synth subset counts must be non-negative");
}

}  // namespace

SynthFamily synth_family(const SynthConfig& config, char gender, TrialClass cls, int attack) {
    SynthFamily f;
    if (config.profile == SynthProfile::overlapping) {
        // Indistinguishable on purpose: one shared source model.
        f.excitation = SynthFamily::Excitation::gaussian;
        f.tilt = 0.7;
        f.burst_gain = 1.0;
        return f;
    }
    f.tilt = gender == 'f' ? 0.45 : 0.85;
    if (cls == TrialClass::spoof) {
        f.excitation = SynthFamily::Excitation::gaussian;
        f.burst_gain = 1.0;  // flat synthetic delivery
        f.tilt += -0.10 + 0.06 * static_cast<double>((attack - 1) % 3);
    } else {
        f.excitation = SynthFamily::Excitation::laplacian;
        f.burst_gain = 0.2;  // alternating loud/quiet speech-like bursts
    }
    return f;
}

std::vector<double> synth_utterance(const SynthFamily& family, int n_samples,
                                    std::uint64_t seed) {
    if (n_samples < 1) fail(Errc::bad_argument, "utterance length must be positive");
    if (!(family.tilt >= 0.0 && family.tilt < 1.0))
        fail(Errc::bad_argument, "tilt must lie in [0, 1)");

    Sampler sampler(seed);
    std::vector<double> y(static_cast<std::size_t>(n_samples));
    double prev = 0.0;
    for (int t = 0; t < n_samples; ++t) {
        const double e = family.excitation == SynthFamily::Excitation::laplacian
                             ? sampler.laplacian()
                             : sampler.gaussian();
        prev = e + family.tilt * prev;
        double v = prev;
        if (family.burst_gain != 1.0 && (t / family.burst_len) % 2 == 1)
            v *= family.burst_gain;
        y[static_cast<std::size_t>(t)] = v;
    }

    KahanSum energy;
    for (double v : y) energy.add(v * v);
    const double rms = std::sqrt(energy.value() / static_cast<double>(n_samples));
    const double scale = rms > 0.0 ? family.rms / rms : 0.0;
    for (double& v : y) v *= scale;
    return y;
}

TrialScoreSet synth_asv_scores(const Manifest& manifest, std::uint64_t seed) {
    Sampler sampler(seed);
    TrialScoreSet out;
    out.entries.reserve(manifest.size());
    for (const ManifestRow& r : manifest) {
        double mean = 0.0, sd = 1.0;
        switch (r.cls) {
            case TrialClass::target: mean = 5.0; break;
            case TrialClass::nontarget: mean = 0.0; break;
            case TrialClass::spoof:
                mean = 2.0;
                sd = 1.5;
                break;
        }
        out.entries.push_back({r.trial_id, r.gender, r.cls, mean + sd * sampler.gaussian()});
    }
    return out;
}

SynthCorpus generate_corpus(const std::filesystem::path& out_dir, const SynthConfig& config) {
    validate(config);
    const std::filesystem::path wav_dir = out_dir / "wav";
    std::error_code ec;
    std::filesystem::create_directories(wav_dir, ec);
    if (ec) fail(Errc::io_error, "cannot create " + wav_dir.string() + ": " + ec.message());

    const int n_samples =
        std::max(1, static_cast<int>(std::lround(config.duration_s *
                                                 static_cast<double>(config.sample_rate_hz))));

    SynthCorpus corpus;
    corpus.dir = out_dir;
    std::uint64_t ordinal = 0;
    for (int subset = 0; subset < 3; ++subset) {
        const SubsetCounts& counts =
            subset == 0 ? config.train : (subset == 1 ? config.dev : config.eval);
        Manifest& manifest = subset == 0 ? corpus.train : (subset == 1 ? corpus.dev : corpus.eval);
        const std::string name = subset_name(subset);
        for (char gender : {'m', 'f'}) {
            for (TrialClass cls :
                 {TrialClass::target, TrialClass::nontarget, TrialClass::spoof}) {
                const int count = cls == TrialClass::target
                                      ? counts.target
                                      : (cls == TrialClass::nontarget ? counts.nontarget
                                                                      : counts.spoof);
                for (int i = 0; i < count; ++i) {
                    ManifestRow row;
                    row.trial_id = make_id(name, gender, cls, i + 1);
                    row.gender = gender;
                    row.cls = cls;
                    int attack = 0;
                    if (cls == TrialClass::spoof) {
                        attack = 1 + i % config.attacks;
                        std::ostringstream a;
                        a << 'A';
                        a.width(2);
                        a.fill('0');
                        a << attack;
                        row.attack_id = a.str();
                    }
                    const SynthFamily family = synth_family(config, gender, cls, attack);
                    const std::vector<double> samples =
                        synth_utterance(family, n_samples, mix_seed(config.seed, ordinal));
                    ++ordinal;
                    write_wav(wav_dir / (row.trial_id + ".wav"), samples,
                              config.sample_rate_hz);
                    manifest.push_back(std::move(row));
                }
            }
        }
    }

    write_manifest(corpus.train, out_dir / "train.tsv");
    write_manifest(corpus.dev, out_dir / "dev.tsv");
    write_manifest(corpus.eval, out_dir / "eval.tsv");
    write_score_file(synth_asv_scores(corpus.dev, mix_seed(config.seed, 0xA57D)),
                     out_dir / "asv_dev.txt");
    write_score_file(synth_asv_scores(corpus.eval, mix_seed(config.seed, 0xA57E)),
                     out_dir / "asv_eval.txt");
    return corpus;
}

}  // namespace sasv
