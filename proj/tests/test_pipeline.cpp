#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sasv/audio_io.hpp"
#include "sasv/pipeline.hpp"
#include "sasv/synth.hpp"
#include "test_util.hpp"

using namespace sasv;

namespace {

constexpr int kBins = 1024;

struct SharedCorpus {
    SynthCorpus corpus;
    FilterBank bank;
};

// One small corpus shared by every case that needs real waveforms.
const SharedCorpus& shared_corpus() {
    static const SharedCorpus shared = [] {
        SynthConfig cfg;
        cfg.profile = SynthProfile::well_separated;
        cfg.duration_s = 0.3;
        cfg.attacks = 2;
        cfg.train = {2, 1, 2};
        cfg.dev = {1, 1, 1};
        cfg.eval = {2, 1, 2};
        cfg.seed = 77;
        return SharedCorpus{generate_corpus(testutil::scratch_dir("pipeline_corpus"), cfg),
                            FilterBank::design(cfg.sample_rate_hz, FilterBankConfig{})};
    }();
    return shared;
}

std::filesystem::path wav_dir() { return shared_corpus().corpus.dir / "wav"; }

Embedding make_row(std::string id, char gender, const char* label,
                   std::vector<double> values) {
    Embedding e;
    e.source_id = std::move(id);
    e.class1 = "class1";
    e.class2 = "class2";
    e.label = label;
    e.gender = gender;
    e.values = std::move(values);
    return e;
}

// Gender-flipped polarity: the bona/spoof direction reverses between m and f,
// so one linear model cannot serve both genders.
EmbeddingSet gender_flipped_set(std::mt19937_64& rng, int per_cell, const char* prefix) {
    EmbeddingSet set;
    set.layout = EmbeddingLayout{4, 8};
    std::normal_distribution<double> noise(0.0, 0.1);
    int serial = 0;
    for (const char gender : {'m', 'f'}) {
        for (const bool bona : {true, false}) {
            for (int i = 0; i < per_cell; ++i) {
                const double sign = (bona == (gender == 'm')) ? 0.5 : -0.5;
                std::vector<double> values(32);
                for (std::size_t d = 0; d < values.size(); ++d)
                    values[d] = (d < 16 ? sign : 0.0) + noise(rng);
                const char* label = !bona ? "spoof" : i % 3 == 2 ? "nontarget" : "target";
                set.rows.push_back(make_row(prefix + std::to_string(serial++), gender, label,
                                            std::move(values)));
            }
        }
    }
    return set;
}

EmbeddingSet filter_rows(const EmbeddingSet& set, char gender) {
    EmbeddingSet out;
    out.layout = set.layout;
    for (const Embedding& row : set.rows)
        if (row.gender == gender) out.rows.push_back(row);
    return out;
}

// Spoofs mimic targets on the verification side; keeping them at the top of
// the score range also keeps the constrained default cost positive on every
// bootstrap resample.
TrialScoreSet synthetic_asv_for(const TrialScoreSet& cm, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    TrialScoreSet asv;
    for (const Trial& t : cm.entries) {
        const double mean = t.cls == TrialClass::target ? 5.0
                            : t.cls == TrialClass::spoof ? 8.0
                                                         : 0.0;
        asv.entries.push_back({t.trial_id, t.gender, t.cls, mean + n01(rng)});
    }
    return asv;
}

}  // namespace

TEST_CASE("group selectors parse filters and default to match-all") {
    const GroupSelector all = parse_group_selector("everything=");
    CHECK(all.name == "everything");
    CHECK(all.gender == 0);
    CHECK(all.allow_target);
    CHECK(all.allow_nontarget);
    CHECK(all.allow_spoof);

    const GroupSelector bona = parse_group_selector("bonafide=class:bona");
    CHECK(bona.allow_target);
    CHECK(bona.allow_nontarget);
    CHECK_FALSE(bona.allow_spoof);

    const GroupSelector spoof_f = parse_group_selector("spoof_f=gender:f,class:spoof");
    CHECK(spoof_f.gender == 'f');
    CHECK_FALSE(spoof_f.allow_target);
    CHECK_FALSE(spoof_f.allow_nontarget);
    CHECK(spoof_f.allow_spoof);

    const GroupSelector pair = parse_group_selector("mix=class:target|spoof");
    CHECK(pair.allow_target);
    CHECK_FALSE(pair.allow_nontarget);
    CHECK(pair.allow_spoof);

    const ManifestRow male_target{"a", 'm', TrialClass::target, "-"};
    const ManifestRow female_spoof{"b", 'f', TrialClass::spoof, "a01"};
    const ManifestRow female_nontarget{"c", 'f', TrialClass::nontarget, "-"};
    CHECK(selector_matches(all, male_target));
    CHECK(selector_matches(all, female_spoof));
    CHECK(selector_matches(bona, male_target));
    CHECK(selector_matches(bona, female_nontarget));
    CHECK_FALSE(selector_matches(bona, female_spoof));
    CHECK(selector_matches(spoof_f, female_spoof));
    CHECK_FALSE(selector_matches(spoof_f, male_target));
    CHECK_FALSE(selector_matches(spoof_f, female_nontarget));
    CHECK(selector_matches(pair, male_target));
    CHECK(selector_matches(pair, female_spoof));
    CHECK_FALSE(selector_matches(pair, female_nontarget));
}

TEST_CASE("malformed group selectors are rejected") {
    for (const char* text : {"noequals", "=class:bona", "g=nocolon", "g=gender:x",
                             "g=class:bogus", "g=size:3"}) {
        CHECK_THROWS_AS(parse_group_selector(text), SasvError);
        try {
            parse_group_selector(text);
        } catch (const SasvError& e) {
            CHECK(e.code() == Errc::config_error);
        }
    }
}

TEST_CASE("class model from one file equals that file's channel pmfs") {
    const auto& shared = shared_corpus();
    const Manifest& train = shared.corpus.train;

    Manifest one{train.front()};
    GroupSelector sel;
    sel.name = "single";
    const PmfModel model = build_class_model(one, wav_dir(), sel, shared.bank, kBins);
    CHECK(model.name == "single");
    CHECK(model.file_count == 1);
    CHECK(model.channel_count() == shared.bank.channel_count());
    CHECK(model.bin_count() == kBins);

    const AudioBuffer audio = read_wav(wav_dir() / (one.front().trial_id + ".wav"));
    const auto direct = utterance_pmfs(shared.bank, audio, kBins);
    REQUIRE(direct.size() == model.channels.size());
    for (std::size_t ch = 0; ch < direct.size(); ++ch) CHECK(model.channels[ch] == direct[ch]);
}

TEST_CASE("class models pool counts over matching files only") {
    const auto& shared = shared_corpus();
    const Manifest& train = shared.corpus.train;

    const GroupSelector bona = parse_group_selector("bonafide=class:bona");
    const PmfModel model = build_class_model(train, wav_dir(), bona, shared.bank, kBins);

    // Independent pooling: one accumulator per channel over the matching rows.
    std::vector<PmfAccumulator> accs(static_cast<std::size_t>(shared.bank.channel_count()),
                                     PmfAccumulator(kBins));
    std::uint32_t matched = 0;
    for (const ManifestRow& row : train) {
        if (row.cls == TrialClass::spoof) continue;
        const AudioBuffer audio = read_wav(wav_dir() / (row.trial_id + ".wav"));
        for (int ch = 1; ch <= shared.bank.channel_count(); ++ch)
            accs[static_cast<std::size_t>(ch - 1)].add_samples(
                clip_to_unit(shared.bank.apply_channel(ch, audio)));
        ++matched;
    }
    REQUIRE(matched >= 2);
    CHECK(model.file_count == matched);
    for (std::size_t ch = 0; ch < accs.size(); ++ch)
        CHECK(model.channels[ch] == accs[ch].normalized());

    // Non-matching rows must not influence the model: rebuilding from a
    // manifest stripped of spoof rows gives the identical bits.
    Manifest bona_only;
    for (const ManifestRow& row : train)
        if (row.cls != TrialClass::spoof) bona_only.push_back(row);
    const PmfModel rebuilt = build_class_model(bona_only, wav_dir(), bona, shared.bank, kBins);
    CHECK(rebuilt.file_count == model.file_count);
    for (std::size_t ch = 0; ch < accs.size(); ++ch)
        CHECK(rebuilt.channels[ch] == model.channels[ch]);
}

TEST_CASE("empty groups and sample-rate mismatches are rejected") {
    const auto& shared = shared_corpus();
    Manifest females;
    for (const ManifestRow& row : shared.corpus.train)
        if (row.gender == 'f') females.push_back(row);
    REQUIRE(!females.empty());

    const GroupSelector male = parse_group_selector("male=gender:m");
    CHECK_THROWS_AS(build_class_model(females, wav_dir(), male, shared.bank, kBins),
                    SasvError);
    try {
        build_class_model(females, wav_dir(), male, shared.bank, kBins);
    } catch (const SasvError& e) {
        CHECK(e.code() == Errc::empty_group);
        CHECK(std::string(e.what()).find("male") != std::string::npos);
    }

    const FilterBank fast_bank = FilterBank::design(32000, FilterBankConfig{});
    const GroupSelector all = parse_group_selector("all=");
    CHECK_THROWS_AS(build_class_model(shared.corpus.train, wav_dir(), all, fast_bank, kBins),
                    SasvError);
    try {
        build_class_model(shared.corpus.train, wav_dir(), all, fast_bank, kBins);
    } catch (const SasvError& e) {
        CHECK(e.code() == Errc::sample_rate_mismatch);
    }
}

TEST_CASE("embedding a manifest against equal models gives zeros, swapping negates") {
    const auto& shared = shared_corpus();
    const Manifest& dev = shared.corpus.dev;
    REQUIRE(!dev.empty());

    const PmfModel bona = build_class_model(shared.corpus.train, wav_dir(),
                                            parse_group_selector("bona=class:bona"),
                                            shared.bank, kBins);
    const PmfModel spoof = build_class_model(shared.corpus.train, wav_dir(),
                                             parse_group_selector("spoof=class:spoof"),
                                             shared.bank, kBins);

    const EmbeddingParams params;
    const EmbeddingSet same = embed_manifest(dev, wav_dir(), bona, bona, shared.bank, kBins,
                                             params);
    REQUIRE(same.rows.size() == dev.size());
    CHECK(same.layout.channel_count == shared.bank.channel_count());
    CHECK(same.layout.measure_count == kMeasureCount);
    for (const Embedding& row : same.rows) {
        REQUIRE(row.values.size() == static_cast<std::size_t>(same.layout.dim()));
        for (const double v : row.values) CHECK(v == 0.0);
    }

    const EmbeddingSet forward = embed_manifest(dev, wav_dir(), bona, spoof, shared.bank,
                                                kBins, params);
    const EmbeddingSet swapped = embed_manifest(dev, wav_dir(), spoof, bona, shared.bank,
                                                kBins, params);
    for (std::size_t i = 0; i < dev.size(); ++i) {
        const Embedding& f = forward.rows[i];
        CHECK(f.source_id == dev[i].trial_id);
        CHECK(f.gender == dev[i].gender);
        CHECK(f.label == std::string(to_string(dev[i].cls)));
        CHECK(f.class1 == "bona");
        CHECK(f.class2 == "spoof");
        for (std::size_t d = 0; d < f.values.size(); ++d)
            CHECK(f.values[d] == -swapped.rows[i].values[d]);
    }
}

TEST_CASE("cm and gender datasets carry the right labels") {
    EmbeddingSet set;
    set.layout = EmbeddingLayout{4, 8};
    set.rows.push_back(make_row("t1", 'm', "target", std::vector<double>(32, 0.1)));
    set.rows.push_back(make_row("t2", 'f', "nontarget", std::vector<double>(32, 0.2)));
    set.rows.push_back(make_row("t3", '-', "spoof", std::vector<double>(32, 0.3)));
    set.rows.push_back(make_row("t4", 'f', "spoof", std::vector<double>(32, 0.4)));

    CHECK(label_class(set.rows[0]) == TrialClass::target);
    CHECK(label_class(set.rows[3]) == TrialClass::spoof);

    const Dataset cm = cm_dataset(set);
    REQUIRE(cm.labels.size() == 4);
    CHECK(cm.labels == std::vector<int>{1, 1, 0, 0});
    CHECK(cm.features[2] == set.rows[2].values);
    CHECK(cm.source_ids ==
          std::vector<std::string>{"t1", "t2", "t3", "t4"});

    // Unknown gender rows drop out of the gender task entirely.
    const Dataset gender = gender_dataset(set);
    REQUIRE(gender.labels.size() == 3);
    CHECK(gender.labels == std::vector<int>{1, 0, 0});
    CHECK(gender.source_ids == std::vector<std::string>{"t1", "t2", "t4"});

    Embedding unlabeled = make_row("t5", 'm', "", std::vector<double>(32, 0.0));
    CHECK_THROWS_AS(label_class(unlabeled), SasvError);

    EmbeddingSet anonymous;
    anonymous.layout = set.layout;
    anonymous.rows.push_back(make_row("t6", '-', "target", std::vector<double>(32, 0.0)));
    try {
        gender_dataset(anonymous);
        FAIL("expected empty_input");
    } catch (const SasvError& e) {
        CHECK(e.code() == Errc::empty_input);
    }
}

TEST_CASE("decision thresholds depend on the model head") {
    std::mt19937_64 rng(41);
    const EmbeddingSet grouped = gender_flipped_set(rng, 8, "thr");
    const Dataset male_data = cm_dataset(filter_rows(grouped, 'm'));

    const TrainedModel logreg = train_logreg(male_data, LogregConfig{0.0, 5, 0.1, 1});
    CHECK(decision_threshold(logreg) == 0.5);

    const TrainedModel gbdt = train_gbdt(male_data, GbdtConfig{3, 2, 0.1, 1.0, 64, 1});
    CHECK(decision_threshold(gbdt) == 0.5);

    GroupedMlpSpec sigmoid_spec = make_mlp_spec(MlpVariant::male);
    sigmoid_spec.group_width = 2;
    sigmoid_spec.merge1_width = 8;
    sigmoid_spec.epochs = 0;
    const TrainedModel mlp_sigmoid = train_grouped_mlp(male_data, sigmoid_spec);
    CHECK(decision_threshold(mlp_sigmoid) == 0.5);

    GroupedMlpSpec ocs_spec = make_mlp_spec(MlpVariant::female);
    ocs_spec.group_width = 2;
    ocs_spec.merge1_width = 8;
    ocs_spec.merge2_width = 4;
    ocs_spec.epochs = 0;
    const TrainedModel mlp_ocs = train_grouped_mlp(male_data, ocs_spec);
    CHECK(decision_threshold(mlp_ocs) ==
          (ocs_spec.ocs.m_target + ocs_spec.ocs.m_other) / 2.0);
}

TEST_CASE("scoring embeddings matches scoring each row directly") {
    std::mt19937_64 rng(52);
    const EmbeddingSet set = gender_flipped_set(rng, 6, "sc");
    const TrainedModel model = train_logreg(cm_dataset(filter_rows(set, 'm')),
                                            LogregConfig{0.0, 50, 0.3, 1});

    const TrialScoreSet scored = score_embeddings(model, set);
    REQUIRE(scored.entries.size() == set.rows.size());
    for (std::size_t i = 0; i < set.rows.size(); ++i) {
        const Embedding& row = set.rows[i];
        CHECK(scored.entries[i].trial_id == row.source_id);
        CHECK(scored.entries[i].gender == row.gender);
        CHECK(scored.entries[i].cls == label_class(row));
        CHECK(scored.entries[i].score == score(model, row.values));
    }
}

TEST_CASE("routed scoring picks the per-gender model") {
    std::mt19937_64 rng(63);
    const EmbeddingSet set = gender_flipped_set(rng, 6, "rt");
    const LogregConfig cfg{0.0, 200, 0.5, 1};
    const TrainedModel male_model = train_logreg(cm_dataset(filter_rows(set, 'm')), cfg);
    const TrainedModel female_model = train_logreg(cm_dataset(filter_rows(set, 'f')), cfg);

    std::vector<char> genders;
    for (const Embedding& row : set.rows) genders.push_back(row.gender);

    const TrialScoreSet routed = score_embeddings_routed(male_model, female_model, set,
                                                         genders);
    REQUIRE(routed.entries.size() == set.rows.size());
    for (std::size_t i = 0; i < set.rows.size(); ++i) {
        const TrainedModel& expected = genders[i] == 'm' ? male_model : female_model;
        CHECK(routed.entries[i].score == score(expected, set.rows[i].values));
    }

    const std::vector<char> short_span(set.rows.size() - 1, 'm');
    CHECK_THROWS_AS(score_embeddings_routed(male_model, female_model, set, short_span),
                    SasvError);
    std::vector<char> bad = genders;
    bad[2] = '-';
    CHECK_THROWS_AS(score_embeddings_routed(male_model, female_model, set, bad), SasvError);
}

TEST_CASE("predicted genders are the thresholded gender-model scores") {
    std::mt19937_64 rng(74);
    EmbeddingSet set = gender_flipped_set(rng, 6, "pg");
    // Make gender itself linearly separable: shift the untouched half of the
    // feature vector by gender so a logistic model can recover it.
    for (Embedding& row : set.rows)
        for (std::size_t d = 16; d < 32; ++d)
            row.values[d] += row.gender == 'm' ? 0.6 : -0.6;

    const TrainedModel gender_model = train_logreg(gender_dataset(set),
                                                   LogregConfig{0.0, 300, 0.5, 1});
    const std::vector<char> predicted = predict_genders(gender_model, set);
    REQUIRE(predicted.size() == set.rows.size());
    int correct = 0;
    for (std::size_t i = 0; i < set.rows.size(); ++i) {
        const double s = score(gender_model, set.rows[i].values);
        CHECK(predicted[i] == (s >= 0.5 ? 'm' : 'f'));
        correct += predicted[i] == set.rows[i].gender;
    }
    CHECK(correct == static_cast<int>(set.rows.size()));
}

TEST_CASE("splitting a tandem set recovers both streams") {
    TrialScoreSet cm, asv;
    std::mt19937_64 rng(85);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 40; ++i) {
        const TrialClass cls = i % 3 == 0   ? TrialClass::target
                               : i % 3 == 1 ? TrialClass::nontarget
                                            : TrialClass::spoof;
        const char gender = i % 2 == 0 ? 'm' : 'f';
        const std::string id = "s" + std::to_string(i);
        cm.entries.push_back({id, gender, cls, u(rng)});
        asv.entries.push_back({id, gender, cls, u(rng)});
    }
    const TandemScoreSet joined = join_tandem(cm, asv);
    const auto [cm_back, asv_back] = split_tandem(joined);
    REQUIRE(cm_back.entries.size() == joined.entries.size());
    REQUIRE(asv_back.entries.size() == joined.entries.size());
    for (std::size_t i = 0; i < joined.entries.size(); ++i) {
        const TandemTrial& t = joined.entries[i];
        CHECK(cm_back.entries[i].trial_id == t.trial_id);
        CHECK(cm_back.entries[i].gender == t.gender);
        CHECK(cm_back.entries[i].cls == t.cls);
        CHECK(cm_back.entries[i].score == t.s_cm);
        CHECK(asv_back.entries[i].trial_id == t.trial_id);
        CHECK(asv_back.entries[i].score == t.s_asv);
    }
}

TEST_CASE("tandem evaluation reports pooled and per-gender slices") {
    // Perfectly separated scores in every slice: all error metrics and their
    // resampled CIs collapse to zero.
    TrialScoreSet cm, asv;
    int serial = 0;
    for (const char gender : {'m', 'f'}) {
        for (int i = 0; i < 6; ++i) {
            const std::string tid = "tar" + std::to_string(serial);
            cm.entries.push_back({tid, gender, TrialClass::target, 3.0 + 0.01 * i});
            asv.entries.push_back({tid, gender, TrialClass::target, 5.0 + 0.01 * i});
            const std::string nid = "non" + std::to_string(serial);
            cm.entries.push_back({nid, gender, TrialClass::nontarget, 2.5 + 0.01 * i});
            asv.entries.push_back({nid, gender, TrialClass::nontarget, -1.0 + 0.01 * i});
            // Spoof verification scores sit above the tar/non midpoint so the
            // constrained default cost stays positive.
            const std::string sid = "spf" + std::to_string(serial);
            cm.entries.push_back({sid, gender, TrialClass::spoof, -3.0 + 0.01 * i});
            asv.entries.push_back({sid, gender, TrialClass::spoof, 2.5 + 0.01 * i});
            ++serial;
        }
    }

    RunConfig config;
    config.bootstrap.m = 120;

    const EvalReport report = evaluate_tandem(cm, asv, config);
    REQUIRE(report.slices.size() == 3);
    CHECK(report.slices[0].name == "pooled");
    CHECK(report.slices[1].name == "male");
    CHECK(report.slices[2].name == "female");
    CHECK(report.slices[0].cm_trials == 36);
    CHECK(report.slices[1].cm_trials == 18);
    CHECK(report.slices[2].asv_trials == 18);

    for (const SliceReport& s : report.slices) {
        for (const MetricEstimate* e :
             {&s.cm_eer, &s.asv_eer, &s.asv_min_dcf, &s.min_tdcf_constrained,
              &s.min_tdcf_unconstrained, &s.min_adcf}) {
            CHECK(e->value == 0.0);
            CHECK(e->ci_low == 0.0);
            CHECK(e->ci_high == 0.0);
            CHECK(e->n_bootstrap == 120);
            CHECK(e->alpha_percent == 5.0);
        }
        CHECK(s.asv_op.p_miss == 0.0);
        CHECK(s.asv_op.p_fa == 0.0);
    }

    // Rows without gender labels yield a pooled slice only.
    TrialScoreSet cm_plain = cm, asv_plain = asv;
    for (auto& t : cm_plain.entries) t.gender = '-';
    for (auto& t : asv_plain.entries) t.gender = '-';
    const EvalReport pooled_only = evaluate_tandem(cm_plain, asv_plain, config);
    REQUIRE(pooled_only.slices.size() == 1);
    CHECK(pooled_only.slices[0].name == "pooled");
}

TEST_CASE("tandem evaluation is deterministic and round-trips through its writers") {
    std::mt19937_64 rng(96);
    std::normal_distribution<double> n01(0.0, 1.0);
    TrialScoreSet cm;
    int serial = 0;
    for (const char gender : {'m', 'f'}) {
        for (int i = 0; i < 10; ++i) {
            cm.entries.push_back({"a" + std::to_string(serial), gender, TrialClass::target,
                                  1.0 + n01(rng)});
            cm.entries.push_back({"b" + std::to_string(serial), gender,
                                  TrialClass::nontarget, 0.4 + n01(rng)});
            cm.entries.push_back({"c" + std::to_string(serial), gender, TrialClass::spoof,
                                  -0.6 + n01(rng)});
            ++serial;
        }
    }
    const TrialScoreSet asv = synthetic_asv_for(cm, 2025);

    RunConfig config;
    config.bootstrap.m = 120;

    const EvalReport first = evaluate_tandem(cm, asv, config);
    const EvalReport second = evaluate_tandem(cm, asv, config);

    std::ostringstream text_a, text_b;
    write_report_text(first, text_a);
    write_report_text(second, text_b);
    CHECK(text_a.str() == text_b.str());
    CHECK(!text_a.str().empty());

    for (const SliceReport& s : first.slices) {
        for (const MetricEstimate* e :
             {&s.cm_eer, &s.asv_eer, &s.asv_min_dcf, &s.min_tdcf_constrained,
              &s.min_tdcf_unconstrained, &s.min_adcf}) {
            CHECK(std::isfinite(e->value));
            CHECK(e->ci_low <= e->ci_high);
            CHECK(e->value >= 0.0);
        }
    }

    const auto dir = testutil::scratch_dir("pipeline_report");
    write_report_csv(first, dir / "report.csv");
    std::ifstream in(dir / "report.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    CHECK(line == "slice,metric,value,ci_low,ci_high,n_bootstrap,alpha_percent");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<int>(first.slices.size()) * 6);

    CHECK_THROWS_AS(write_report_csv(first, dir / "missing_dir" / "report.csv"), SasvError);

    TrialScoreSet extra = cm;
    extra.entries.push_back({"orphan", 'm', TrialClass::target, 0.0});
    CHECK_THROWS_AS(evaluate_tandem(extra, asv, config), SasvError);
}

TEST_CASE("per-gender routing beats one pooled model when polarity flips by gender") {
    std::mt19937_64 rng(107);
    const EmbeddingSet train = gender_flipped_set(rng, 40, "tr");
    const EmbeddingSet eval = gender_flipped_set(rng, 30, "ev");

    const LogregConfig cfg{0.0, 400, 0.5, 1};
    const TrainedModel male_model = train_logreg(cm_dataset(filter_rows(train, 'm')), cfg);
    const TrainedModel female_model = train_logreg(cm_dataset(filter_rows(train, 'f')), cfg);
    const TrainedModel pooled_model = train_logreg(cm_dataset(train), cfg);

    std::vector<char> genders;
    for (const Embedding& row : eval.rows) genders.push_back(row.gender);

    const TrialScoreSet routed = score_embeddings_routed(male_model, female_model, eval,
                                                         genders);
    const TrialScoreSet pooled = score_embeddings(pooled_model, eval);

    const double routed_eer = eer_cm(routed).value;
    const double pooled_eer = eer_cm(pooled).value;
    CHECK(routed_eer == 0.0);
    CHECK(pooled_eer > 0.3);

    // The ranking carries through the tandem metric: with a shared ASV front
    // end the routed system's minimum cost cannot exceed the pooled one's.
    const TrialScoreSet asv = synthetic_asv_for(routed, 3031);
    const TandemCostModel costs;
    const double routed_tdcf =
        min_tdcf_unconstrained_normalized(routed, asv, costs).value;
    const double pooled_tdcf =
        min_tdcf_unconstrained_normalized(pooled, asv, costs).value;
    CHECK(routed_tdcf <= pooled_tdcf + 1e-12);
    CHECK(routed_tdcf <= 0.05);
}
