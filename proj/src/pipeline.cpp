#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "sasv/audio_io.hpp"
#include "sasv/pipeline.hpp"

namespace sasv {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

MetricEstimate bootstrap_trial(const TrialScoreSet& set,
                               const std::function<double(const TrialScoreSet&)>& stat,
                               const BootstrapConfig& b, std::uint64_t seed) {
    return bootstrap_ci<TrialScoreSet>(set, stat, b.m, b.alpha_percent, seed, b.stratified);
}

MetricEstimate bootstrap_tandem(const TandemScoreSet& set,
                                const std::function<double(const TandemScoreSet&)>& stat,
                                const BootstrapConfig& b, std::uint64_t seed) {
    return bootstrap_ci<TandemScoreSet>(set, stat, b.m, b.alpha_percent, seed, b.stratified);
}

void report_line(std::ostream& os, const char* name, const MetricEstimate& e) {
    os << "  " << name << " = " << fmt(e.value) << " ci95 = [" << fmt(e.ci_low) << ", "
       << fmt(e.ci_high) << "]\n";
}

}  // namespace

GroupSelector parse_group_selector(const std::string& text) {
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos || eq == 0)
        fail(Errc::config_error, "group selector must look like name=key:value,...: " + text);

    GroupSelector sel;
    sel.name = text.substr(0, eq);
    const std::string filters = text.substr(eq + 1);
    if (filters.empty()) return sel;

    for (const std::string& filter : split(filters, ',')) {
        const std::size_t colon = filter.find(':');
        if (colon == std::string::npos)
            fail(Errc::config_error, "group filter must look like key:value: " + filter);
        const std::string key = filter.substr(0, colon);
        const std::string value = filter.substr(colon + 1);
        if (key == "gender") {
            if (value != "m" && value != "f")
                fail(Errc::config_error, "gender filter must be m or f: " + value);
            sel.gender = value[0];
        } else if (key == "class") {
            sel.allow_target = sel.allow_nontarget = sel.allow_spoof = false;
            for (const std::string& cls : split(value, '|')) {
                if (cls == "bona")
                    sel.allow_target = sel.allow_nontarget = true;
                else if (cls == "target")
                    sel.allow_target = true;
                else if (cls == "nontarget")
                    sel.allow_nontarget = true;
                else if (cls == "spoof")
                    sel.allow_spoof = true;
                else
                    fail(Errc::config_error, "unknown class filter: " + cls);
            }
        } else {
            fail(Errc::config_error, "unknown group filter key: " + key);
        }
    }
    return sel;
}

bool selector_matches(const GroupSelector& sel, const ManifestRow& row) {
    if (sel.gender != 0 && row.gender != sel.gender) return false;
    switch (row.cls) {
        case TrialClass::target: return sel.allow_target;
        case TrialClass::nontarget: return sel.allow_nontarget;
        case TrialClass::spoof: return sel.allow_spoof;
    }
    return false;
}

PmfModel build_class_model(const Manifest& manifest, const std::filesystem::path& wav_dir,
                           const GroupSelector& sel, const FilterBank& bank, int bin_count) {
    std::vector<PmfAccumulator> accs(static_cast<std::size_t>(bank.channel_count()),
                                     PmfAccumulator(bin_count));
    std::uint32_t files = 0;
    for (const ManifestRow& row : manifest) {
        if (!selector_matches(sel, row)) continue;
        const AudioBuffer audio = read_wav(wav_dir / (row.trial_id + ".wav"));
        if (audio.sample_rate_hz != bank.sample_rate_hz())
            fail(Errc::sample_rate_mismatch,
                 row.trial_id + ": sample rate " + std::to_string(audio.sample_rate_hz) +
                     " differs from the filter bank's " +
                     std::to_string(bank.sample_rate_hz()));
        for (int ch = 1; ch <= bank.channel_count(); ++ch)
            accs[static_cast<std::size_t>(ch - 1)].add_samples(
                clip_to_unit(bank.apply_channel(ch, audio)));
        ++files;
    }
    if (files == 0)
        fail(Errc::empty_group, "no manifest rows match group " + sel.name);

    PmfModel model;
    model.name = sel.name;
    model.file_count = files;
    model.channels.reserve(accs.size());
    for (const PmfAccumulator& acc : accs) model.channels.push_back(acc.normalized());
    return model;
}

EmbeddingSet embed_manifest(const Manifest& manifest, const std::filesystem::path& wav_dir,
                            const PmfModel& class1, const PmfModel& class2,
                            const FilterBank& bank, int bin_count,
                            const EmbeddingParams& params) {
    EmbeddingSet set;
    set.layout = EmbeddingLayout{bank.channel_count(), kMeasureCount};
    set.rows.reserve(manifest.size());
    for (const ManifestRow& row : manifest) {
        const AudioBuffer audio = read_wav(wav_dir / (row.trial_id + ".wav"));
        if (audio.sample_rate_hz != bank.sample_rate_hz())
            fail(Errc::sample_rate_mismatch,
                 row.trial_id + ": sample rate " + std::to_string(audio.sample_rate_hz) +
                     " differs from the filter bank's " +
                     std::to_string(bank.sample_rate_hz()));
        Embedding e;
        e.source_id = row.trial_id;
        e.class1 = class1.name;
        e.class2 = class2.name;
        e.label = std::string(to_string(row.cls));
        e.gender = row.gender;
        e.values = embed_utterance(utterance_pmfs(bank, audio, bin_count), class1, class2, params);
        set.rows.push_back(std::move(e));
    }
    return set;
}

TrialClass label_class(const Embedding& row) {
    if (row.label.empty())
        fail(Errc::bad_argument, row.source_id + ": embedding carries no class label");
    return trial_class_from_string(row.label);
}

Dataset cm_dataset(const EmbeddingSet& set) {
    Dataset out;
    for (const Embedding& row : set.rows) {
        out.features.push_back(row.values);
        out.labels.push_back(label_class(row) == TrialClass::spoof ? 0 : 1);
        out.genders.push_back(row.gender);
        out.source_ids.push_back(row.source_id);
    }
    return out;
}

Dataset gender_dataset(const EmbeddingSet& set) {
    Dataset out;
    for (const Embedding& row : set.rows) {
        if (row.gender != 'm' && row.gender != 'f') continue;
        out.features.push_back(row.values);
        out.labels.push_back(row.gender == 'm' ? 1 : 0);
        out.genders.push_back(row.gender);
        out.source_ids.push_back(row.source_id);
    }
    if (out.features.empty())
        fail(Errc::empty_input, "no rows carry a known gender");
    return out;
}

double decision_threshold(const TrainedModel& model) {
    switch (model.kind) {
        case ModelKind::logistic_regression: return 0.5;
        case ModelKind::gbdt: return 0.5;
        case ModelKind::grouped_mlp:
            return model.mlp.spec.head == MlpHead::sigmoid
                       ? 0.5
                       : (model.mlp.spec.ocs.m_target + model.mlp.spec.ocs.m_other) / 2.0;
    }
    return 0.0;
}

TrialScoreSet score_embeddings(const TrainedModel& model, const EmbeddingSet& set) {
    TrialScoreSet out;
    out.entries.reserve(set.rows.size());
    for (const Embedding& row : set.rows)
        out.entries.push_back(
            {row.source_id, row.gender, label_class(row), score(model, row.values)});
    return out;
}

TrialScoreSet score_embeddings_routed(const TrainedModel& male_model,
                                      const TrainedModel& female_model, const EmbeddingSet& set,
                                      std::span<const char> genders) {
    if (genders.size() != set.rows.size())
        fail(Errc::bad_argument, "one routing gender per row required");
    TrialScoreSet out;
    out.entries.reserve(set.rows.size());
    for (std::size_t i = 0; i < set.rows.size(); ++i) {
        const Embedding& row = set.rows[i];
        const char g = genders[i];
        if (g != 'm' && g != 'f')
            fail(Errc::bad_argument, row.source_id + ": routing gender must be m or f");
        const TrainedModel& model = g == 'm' ? male_model : female_model;
        out.entries.push_back({row.source_id, row.gender, label_class(row),
                               score(model, row.values)});
    }
    return out;
}

std::vector<char> predict_genders(const TrainedModel& gender_model, const EmbeddingSet& set) {
    const double tau = decision_threshold(gender_model);
    std::vector<char> out;
    out.reserve(set.rows.size());
    for (const Embedding& row : set.rows)
        out.push_back(score(gender_model, row.values) >= tau ? 'm' : 'f');
    return out;
}

std::pair<TrialScoreSet, TrialScoreSet> split_tandem(const TandemScoreSet& tandem) {
    std::pair<TrialScoreSet, TrialScoreSet> out;
    out.first.entries.reserve(tandem.entries.size());
    out.second.entries.reserve(tandem.entries.size());
    for (const TandemTrial& t : tandem.entries) {
        out.first.entries.push_back({t.trial_id, t.gender, t.cls, t.s_cm});
        out.second.entries.push_back({t.trial_id, t.gender, t.cls, t.s_asv});
    }
    return out;
}

EvalReport evaluate_tandem(const TrialScoreSet& cm, const TrialScoreSet& asv,
                           const RunConfig& config) {
    config.costs.validate();
    config.asv_dcf.validate();
    const TandemScoreSet joined = join_tandem(cm, asv);

    std::vector<std::pair<std::string, char>> slices{{"pooled", 0}};
    for (const char g : {'m', 'f'}) {
        bool present = false;
        for (const TandemTrial& t : joined.entries) present = present || t.gender == g;
        if (present) slices.push_back({g == 'm' ? "male" : "female", g});
    }

    const TandemCostModel& costs = config.costs;
    const TandemCostModel& dcf_weights = config.asv_dcf;
    const BootstrapConfig& b = config.bootstrap;

    EvalReport report;
    std::uint64_t slice_index = 0;
    for (const auto& [slice_name, gender] : slices) {
        const TandemScoreSet tandem = gender == 0 ? joined : filter_gender(joined, gender);
        const auto [cm_slice, asv_slice] = split_tandem(tandem);

        SliceReport s;
        s.name = slice_name;
        s.cm_trials = cm_slice.entries.size();
        s.asv_trials = asv_slice.entries.size();
        s.asv_op = asv_eer_operating_point(asv_slice);

        const auto seed = [&](std::uint64_t metric) {
            return mix_seed(b.seed, slice_index * 16 + metric);
        };
        s.cm_eer = bootstrap_trial(
            cm_slice, [](const TrialScoreSet& x) { return eer_cm(x).value; }, b, seed(0));
        s.asv_eer = bootstrap_trial(
            asv_slice, [](const TrialScoreSet& x) { return eer_asv(x).value; }, b, seed(1));
        s.asv_min_dcf = bootstrap_trial(
            asv_slice,
            [&dcf_weights](const TrialScoreSet& x) { return min_dcf(x, dcf_weights).value; },
            b, seed(2));
        s.min_tdcf_constrained = bootstrap_tandem(
            tandem,
            [&costs](const TandemScoreSet& x) {
                const auto [cm_part, asv_part] = split_tandem(x);
                const AsvOperatingPoint op = asv_eer_operating_point(asv_part);
                return min_tdcf_asv_constrained_normalized(cm_part, op, costs).value;
            },
            b, seed(3));
        s.min_tdcf_unconstrained = bootstrap_tandem(
            tandem,
            [&costs](const TandemScoreSet& x) {
                const auto [cm_part, asv_part] = split_tandem(x);
                return min_tdcf_unconstrained_normalized(cm_part, asv_part, costs).value;
            },
            b, seed(4));
        s.min_adcf = bootstrap_tandem(
            tandem,
            [&costs](const TandemScoreSet& x) { return min_adcf_normalized(x, costs).value; },
            b, seed(5));
        report.slices.push_back(std::move(s));
        ++slice_index;
    }
    return report;
}

void write_report_text(const EvalReport& report, std::ostream& os) {
    for (const SliceReport& s : report.slices) {
        os << "slice " << s.name << " cm_trials=" << s.cm_trials
           << " asv_trials=" << s.asv_trials << '\n';
        os << "  asv_op tau=" << fmt(s.asv_op.tau) << " p_miss=" << fmt(s.asv_op.p_miss)
           << " p_fa=" << fmt(s.asv_op.p_fa) << " p_fa_spoof=" << fmt(s.asv_op.p_fa_spoof)
           << '\n';
        report_line(os, "cm_eer", s.cm_eer);
        report_line(os, "asv_eer", s.asv_eer);
        report_line(os, "asv_min_dcf", s.asv_min_dcf);
        report_line(os, "min_tdcf_constrained_norm", s.min_tdcf_constrained);
        report_line(os, "min_tdcf_unconstrained_norm", s.min_tdcf_unconstrained);
        report_line(os, "min_adcf_norm", s.min_adcf);
    }
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) fail(Errc::io_error, "cannot write report: " + path.string());
    os << "slice,metric,value,ci_low,ci_high,n_bootstrap,alpha_percent\n";
    for (const SliceReport& s : report.slices) {
        const auto row = [&](const char* metric, const MetricEstimate& e) {
            os << s.name << ',' << metric << ',' << fmt(e.value) << ',' << fmt(e.ci_low) << ','
               << fmt(e.ci_high) << ',' << e.n_bootstrap << ',' << fmt(e.alpha_percent) << '\n';
        };
        row("cm_eer", s.cm_eer);
        row("asv_eer", s.asv_eer);
        row("asv_min_dcf", s.asv_min_dcf);
        row("min_tdcf_constrained_norm", s.min_tdcf_constrained);
        row("min_tdcf_unconstrained_norm", s.min_tdcf_unconstrained);
        row("min_adcf_norm", s.min_adcf);
    }
    if (!os) fail(Errc::io_error, "write failed: " + path.string());
}

}  // namespace sasv
