#pragma once

#include <vector>

#include "sasv/classifiers.hpp"
#include "sasv/metrics.hpp"

namespace sasv {

/// Native range a score stream declares: unit scores live in [0, 1],
/// symmetric scores in [-1, 1] and get remapped to the unit interval.
enum class ScoreRange { unit, symmetric };

enum class FusionMethod { weighted_average, classifier };

struct FusionConfig {
    FusionMethod method = FusionMethod::weighted_average;
    double alpha = 0.5;
    double grid_step = 0.01;
    ModelKind classifier_kind = ModelKind::logistic_regression;
    LogregConfig logreg;
    GbdtConfig gbdt;
    ScoreRange range_a = ScoreRange::symmetric;
    ScoreRange range_b = ScoreRange::unit;
};

/// symmetric -> (s+1)/2, unit -> unchanged. Scores outside the declared
/// range by more than 1e-9 are rejected.
double map_to_unit(double score, ScoreRange range);
TrialScoreSet map_to_unit(const TrialScoreSet& scores, ScoreRange range);

/// alpha*s_a + (1-alpha)*s_b with alpha in [0, 1].
double fuse_weighted(double s_a, double s_b, double alpha);

/// Pairs two unit-mapped streams on trial_id and fuses each pair.
TrialScoreSet fuse_weighted(const TrialScoreSet& cm_a, const TrialScoreSet& cm_b, double alpha);

struct AlphaSweepRow {
    double alpha = 0.0;
    double eer = 0.0;
};

struct AlphaSweepResult {
    std::vector<AlphaSweepRow> rows;  // ascending alpha over [0, 1]
    double best_alpha = 0.0;
    double best_eer = 0.0;
};

/// Bona-vs-spoof EER of the fused stream at every grid point
/// {0, step, 2*step, ..., 1}; the minimizer with ties broken toward the
/// smaller alpha. Inputs must already be unit-mapped. grid_step in (0, 0.5].
AlphaSweepResult sweep_alpha(const TrialScoreSet& cm_a, const TrialScoreSet& cm_b,
                             double grid_step);

/// Trains the configured classifier on 2-feature rows (s_a, s_b) and scores
/// eval_pairs. Row labels: 1 bona fide, 0 spoof; emitted classes follow the
/// same convention (target / spoof).
TrialScoreSet fuse_classifier(const Dataset& train_pairs, const Dataset& eval_pairs,
                              const FusionConfig& config);

/// Score pairs joined on trial_id as classifier rows; labels 1 for bona fide
/// (target or nontarget), 0 for spoof.
Dataset pairs_as_dataset(const TrialScoreSet& cm_a, const TrialScoreSet& cm_b);

}  // namespace sasv
