#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "sasv/classifiers.hpp"
#include "sasv/filterbank.hpp"
#include "sasv/fusion.hpp"
#include "sasv/metrics.hpp"

namespace sasv {

enum class GenderMode { gender_dependent, gender_independent, oracle_labels };
enum class SynthProfile { well_separated, overlapping };

std::string_view to_string(GenderMode m);
GenderMode gender_mode_from_string(std::string_view s);
std::string_view to_string(SynthProfile p);
SynthProfile synth_profile_from_string(std::string_view s);

struct BootstrapConfig {
    int m = 1000;
    double alpha_percent = 5.0;
    std::uint64_t seed = 101;
    bool stratified = true;
};

/// Per-class utterance counts for one synthetic subset, per gender.
struct SubsetCounts {
    int target = 0;
    int nontarget = 0;
    int spoof = 0;
};

struct SynthConfig {
    SynthProfile profile = SynthProfile::well_separated;
    int sample_rate_hz = 16000;
    double duration_s = 1.0;
    int attacks = 3;
    SubsetCounts train{50, 10, 60};
    SubsetCounts dev{25, 5, 30};
    SubsetCounts eval{35, 15, 50};
    std::uint64_t seed = 1234;
};

/// Whole-run settings: every stochastic stage carries its own seed so reruns
/// are bit-reproducible. Loaded from a flat key-value file with [section]
/// headers; unknown keys are rejected.
struct RunConfig {
    int threads = 1;
    std::string workdir = ".";

    FilterBankConfig filterbank;  // + sample rate below
    int sample_rate_hz = 16000;

    int pmf_bins = 65536;
    double epsilon = 1e-6;
    QuadraticChiParams qc;

    // gender recognizer (logistic_regression or gbdt)
    ModelKind gender_classifier = ModelKind::gbdt;
    LogregConfig gender_logreg{0.0, 500, 0.1, 7};
    GbdtConfig gender_gbdt{200, 3, 0.1, 1.0, 256, 7};

    // countermeasure network
    MlpVariant cm_variant = MlpVariant::gender_independent;
    int cm_epochs = -1;      // -1 keeps the variant default
    int cm_batch_size = -1;  // -1 keeps the variant default
    double cm_lr = 0.01;
    double cm_dropout = 0.2;
    std::uint64_t cm_seed = 11;
    OcsParams ocs;
    bool smote = true;
    int smote_k = 5;
    std::uint64_t smote_seed = 13;

    TandemCostModel costs;                        // tandem cost model
    TandemCostModel asv_dcf{1.0, 10.0, 10.0, 0.99, 0.01, 0.0};  // spoof-free weighting

    BootstrapConfig bootstrap;
    SynthConfig synth;
    GenderMode gender_mode = GenderMode::gender_dependent;
    FusionConfig fusion;
    std::string fusion_tune_on = "dev";  // dev | eval

    void validate() const;

    /// Derives all stage seeds from one master seed.
    void apply_master_seed(std::uint64_t seed);

    /// All keys with current values, parseable by load.
    void dump(std::ostream& os) const;

    static RunConfig load(const std::filesystem::path& path);

    /// Applies "section.key=value" lines (already trimmed) onto *this.
    void set(const std::string& dotted_key, const std::string& value);
};

}  // namespace sasv
