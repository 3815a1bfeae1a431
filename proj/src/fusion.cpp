#include <algorithm>
#include <cmath>
#include <string>

#include "sasv/fusion.hpp"

namespace sasv {

namespace {

constexpr double kRangeTolerance = 1e-9;

TrialClass class_for_label(int label) {
    return label == 1 ? TrialClass::target : TrialClass::spoof;
}

}  // namespace

double map_to_unit(double score, ScoreRange range) {
    const double lo = range == ScoreRange::symmetric ? -1.0 : 0.0;
    if (!(score >= lo - kRangeTolerance && score <= 1.0 + kRangeTolerance))
        fail(Errc::out_of_declared_range,
             "score " + std::to_string(score) + " outside declared range");
    const double mapped = range == ScoreRange::symmetric ? (score + 1.0) / 2.0 : score;
    // Values admitted within the tolerance band land back on the endpoints.
    return std::min(1.0, std::max(0.0, mapped));
}

TrialScoreSet map_to_unit(const TrialScoreSet& scores, ScoreRange range) {
    TrialScoreSet out = scores;
    for (Trial& t : out.entries) t.score = map_to_unit(t.score, range);
    return out;
}

double fuse_weighted(double s_a, double s_b, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        fail(Errc::bad_alpha, "alpha " + std::to_string(alpha) + " outside [0, 1]");
    return alpha * s_a + (1.0 - alpha) * s_b;
}

TrialScoreSet fuse_weighted(const TrialScoreSet& cm_a, const TrialScoreSet& cm_b, double alpha) {
    const TandemScoreSet paired = join_tandem(cm_a, cm_b);
    TrialScoreSet out;
    out.entries.reserve(paired.entries.size());
    for (const TandemTrial& t : paired.entries)
        out.entries.push_back({t.trial_id, t.gender, t.cls, fuse_weighted(t.s_cm, t.s_asv, alpha)});
    return out;
}

AlphaSweepResult sweep_alpha(const TrialScoreSet& cm_a, const TrialScoreSet& cm_b,
                             double grid_step) {
    if (!(grid_step > 0.0 && grid_step <= 0.5))
        fail(Errc::bad_argument, "grid step must lie in (0, 0.5]");
    const TandemScoreSet paired = join_tandem(cm_a, cm_b);

    TrialScoreSet fused;
    fused.entries.reserve(paired.entries.size());
    for (const TandemTrial& t : paired.entries)
        fused.entries.push_back({t.trial_id, t.gender, t.cls, 0.0});

    AlphaSweepResult result;
    for (std::size_t k = 0;; ++k) {
        double alpha = static_cast<double>(k) * grid_step;
        if (alpha > 1.0 + 1e-12) break;
        if (alpha > 1.0) alpha = 1.0;
        for (std::size_t i = 0; i < paired.entries.size(); ++i)
            fused.entries[i].score =
                fuse_weighted(paired.entries[i].s_cm, paired.entries[i].s_asv, alpha);
        result.rows.push_back({alpha, eer_cm(fused).value});
        if (alpha == 1.0) break;
    }
    if (result.rows.back().alpha < 1.0) {
        for (std::size_t i = 0; i < paired.entries.size(); ++i)
            fused.entries[i].score =
                fuse_weighted(paired.entries[i].s_cm, paired.entries[i].s_asv, 1.0);
        result.rows.push_back({1.0, eer_cm(fused).value});
    }

    result.best_alpha = result.rows.front().alpha;
    result.best_eer = result.rows.front().eer;
    for (const AlphaSweepRow& row : result.rows)
        if (row.eer < result.best_eer) {
            result.best_eer = row.eer;
            result.best_alpha = row.alpha;
        }
    return result;
}

Dataset pairs_as_dataset(const TrialScoreSet& cm_a, const TrialScoreSet& cm_b) {
    const TandemScoreSet paired = join_tandem(cm_a, cm_b);
    Dataset out;
    for (const TandemTrial& t : paired.entries) {
        out.features.push_back({t.s_cm, t.s_asv});
        out.labels.push_back(t.cls == TrialClass::spoof ? 0 : 1);
        out.genders.push_back(t.gender);
        out.source_ids.push_back(t.trial_id);
    }
    return out;
}

TrialScoreSet fuse_classifier(const Dataset& train_pairs, const Dataset& eval_pairs,
                              const FusionConfig& config) {
    if (config.classifier_kind != ModelKind::logistic_regression &&
        config.classifier_kind != ModelKind::gbdt)
        fail(Errc::config_error, "score fusion supports logistic_regression or gbdt");
    train_pairs.validate();
    eval_pairs.validate();
    if (train_pairs.dim() != 2 || eval_pairs.dim() != 2)
        fail(Errc::bad_argument, "fusion rows must carry exactly two scores");

    const TrainedModel model = config.classifier_kind == ModelKind::logistic_regression
                                   ? train_logreg(train_pairs, config.logreg)
                                   : train_gbdt(train_pairs, config.gbdt);

    TrialScoreSet out;
    out.entries.reserve(eval_pairs.size());
    for (std::size_t i = 0; i < eval_pairs.size(); ++i)
        out.entries.push_back({eval_pairs.source_ids[i], eval_pairs.genders[i],
                               class_for_label(eval_pairs.labels[i]),
                               score(model, eval_pairs.features[i])});
    return out;
}

}  // namespace sasv
