#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sasv/metrics.hpp"

namespace sasv {

/// One utterance of a dataset: its trial identity, speaker gender, trial
/// class, and spoofing attack id ("-" for bona fide speech).
struct ManifestRow {
    std::string trial_id;
    char gender = '-';
    TrialClass cls = TrialClass::target;
    std::string attack_id = "-";

    bool bona_fide() const { return cls != TrialClass::spoof; }
};

using Manifest = std::vector<ManifestRow>;

/// Text manifest, one row per line: trial_id gender class attack_id.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Adapts an ASVspoof2019 LA protocol file (columns: speaker file - attack
/// key) to a manifest; bona fide rows become targets. The optional speaker
/// map ("speaker m|f" lines) fills in genders, else '-'.
Manifest asvspoof_manifest(const std::filesystem::path& protocol_file,
                           const std::filesystem::path& speaker_gender_map = {});

}  // namespace sasv
