#pragma once

#include <iosfwd>
#include <span>
#include <utility>

#include "sasv/classifiers.hpp"
#include "sasv/config.hpp"
#include "sasv/embedding.hpp"
#include "sasv/manifest.hpp"
#include "sasv/pmf.hpp"

namespace sasv {

/// Conjunction of manifest-row filters, parsed from "name=key:value,...".
/// Keys: gender (m|f) and class (target|nontarget|spoof|bona, '|'-separable);
/// bona means target or nontarget. No filters means every row.
struct GroupSelector {
    std::string name;
    char gender = 0;  // 0 = any
    bool allow_target = true;
    bool allow_nontarget = true;
    bool allow_spoof = true;
};

GroupSelector parse_group_selector(const std::string& text);
bool selector_matches(const GroupSelector& sel, const ManifestRow& row);

/// Pools the per-channel histograms of every matching utterance (exact counts,
/// normalized once at the end) into a class model named after the selector.
PmfModel build_class_model(const Manifest& manifest, const std::filesystem::path& wav_dir,
                           const GroupSelector& sel, const FilterBank& bank, int bin_count);

/// One embedding per manifest row, in manifest order. label carries the trial
/// class string so downstream scoring needs no manifest join.
EmbeddingSet embed_manifest(const Manifest& manifest, const std::filesystem::path& wav_dir,
                            const PmfModel& class1, const PmfModel& class2,
                            const FilterBank& bank, int bin_count,
                            const EmbeddingParams& params);

/// Trial class stored in a row's label field.
TrialClass label_class(const Embedding& row);

/// Classifier rows from embeddings. Labels: 1 bona fide, 0 spoof.
Dataset cm_dataset(const EmbeddingSet& set);
/// Labels: 1 male, 0 female; rows with unknown gender are skipped.
Dataset gender_dataset(const EmbeddingSet& set);

/// Raw-score decision point of a model: scores at or above it mean label 1.
double decision_threshold(const TrainedModel& model);

TrialScoreSet score_embeddings(const TrainedModel& model, const EmbeddingSet& set);

/// Routes each row to the model of genders[i] ('m' or 'f').
TrialScoreSet score_embeddings_routed(const TrainedModel& male_model,
                                      const TrainedModel& female_model, const EmbeddingSet& set,
                                      std::span<const char> genders);

std::vector<char> predict_genders(const TrainedModel& gender_model, const EmbeddingSet& set);

std::pair<TrialScoreSet, TrialScoreSet> split_tandem(const TandemScoreSet& tandem);

struct SliceReport {
    std::string name;  // pooled, male, female
    std::size_t cm_trials = 0;
    std::size_t asv_trials = 0;
    AsvOperatingPoint asv_op;  // frozen at the slice's ASV EER threshold
    MetricEstimate cm_eer;
    MetricEstimate asv_eer;
    MetricEstimate asv_min_dcf;
    MetricEstimate min_tdcf_constrained;
    MetricEstimate min_tdcf_unconstrained;
    MetricEstimate min_adcf;
};

struct EvalReport {
    std::vector<SliceReport> slices;
};

/// Joins the two score files, then reports every tandem metric with its
/// bootstrap CI, pooled and per gender when genders are labeled.
EvalReport evaluate_tandem(const TrialScoreSet& cm, const TrialScoreSet& asv,
                           const RunConfig& config);

void write_report_text(const EvalReport& report, std::ostream& os);
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace sasv
