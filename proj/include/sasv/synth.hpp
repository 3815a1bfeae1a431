#pragma once

#include <filesystem>
#include <vector>

#include "sasv/config.hpp"
#include "sasv/manifest.hpp"

namespace sasv {

/// Source model of one synthetic family: excitation shape, one-pole spectral
/// tilt, and a burst envelope. Families are chosen so class differences
/// survive narrowband filtering (tilt shifts per-channel variance, bursts
/// make amplitude scale mixtures); an i.i.d. shape difference alone would be
/// gaussianized away by the filter bank.
struct SynthFamily {
    enum class Excitation { gaussian, laplacian } excitation = Excitation::gaussian;
    double tilt = 0.7;        // one-pole feedback in [0, 1)
    double burst_gain = 1.0;  // quiet-segment gain; 1 means no bursts
    int burst_len = 400;      // samples per envelope segment
    double rms = 0.12;
};

/// Family parameters for one utterance of the corpus.
SynthFamily synth_family(const SynthConfig& config, char gender, TrialClass cls, int attack);

/// One seeded utterance of the family.
std::vector<double> synth_utterance(const SynthFamily& family, int n_samples,
                                    std::uint64_t seed);

/// Seeded per-class Gaussian verification scores standing in for an external
/// ASV system: targets high, nontargets low, spoofs in between.
TrialScoreSet synth_asv_scores(const Manifest& manifest, std::uint64_t seed);

struct SynthCorpus {
    std::filesystem::path dir;
    Manifest train, dev, eval;
};

/// Writes wav/<trial_id>.wav for every utterance, the three subset manifests
/// (train.tsv, dev.tsv, eval.tsv), and synthetic verification scores
/// (asv_dev.txt, asv_eval.txt). Reruns with the same config are
/// byte-identical.
SynthCorpus generate_corpus(const std::filesystem::path& out_dir, const SynthConfig& config);

}  // namespace sasv
