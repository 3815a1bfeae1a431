#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "sasv/audio_io.hpp"
#include "sasv/config.hpp"
#include "sasv/fusion.hpp"
#include "sasv/pipeline.hpp"
#include "sasv/synth.hpp"

namespace {

using namespace sasv;

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> gender_mode;
};

RunConfig make_config(const GlobalOpts& g) {
    RunConfig c = g.config_path.empty() ? RunConfig{} : RunConfig::load(g.config_path);
    if (g.seed) c.apply_master_seed(*g.seed);
    if (g.threads) c.threads = *g.threads;
    if (g.gender_mode) c.gender_mode = gender_mode_from_string(*g.gender_mode);
    c.validate();
    return c;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void ensure_parent(const std::filesystem::path& path) {
    const std::filesystem::path dir = path.parent_path();
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
}

GroupedMlpSpec cm_spec_from_config(const RunConfig& c, MlpVariant variant) {
    GroupedMlpSpec spec = make_mlp_spec(variant);
    if (c.cm_epochs >= 0) spec.epochs = c.cm_epochs;
    if (c.cm_batch_size >= 1) spec.batch_size = c.cm_batch_size;
    spec.lr = c.cm_lr;
    spec.dropout_p = c.cm_dropout;
    spec.seed = c.cm_seed;
    spec.ocs = c.ocs;
    spec.validate();
    return spec;
}

double held_out_accuracy(const TrainedModel& model, const Dataset& data) {
    const double tau = decision_threshold(model);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        correct += (score(model, data.features[i]) >= tau ? 1 : 0) == data.labels[i];
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

void cmd_synth(const RunConfig& config, const std::string& out_dir,
               const std::optional<std::string>& profile) {
    SynthConfig synth = config.synth;
    if (profile) synth.profile = synth_profile_from_string(*profile);
    const SynthCorpus corpus = generate_corpus(out_dir, synth);
    std::cout << "synth profile=" << to_string(synth.profile) << " dir=" << corpus.dir.string()
              << " train=" << corpus.train.size() << " dev=" << corpus.dev.size()
              << " eval=" << corpus.eval.size() << '\n';
}

void cmd_build_models(const RunConfig& config, const std::string& manifest_path,
                      const std::string& wav_dir, const std::vector<std::string>& groups,
                      const std::string& out_dir) {
    const Manifest manifest = read_manifest(manifest_path);
    const FilterBank bank = FilterBank::design(config.sample_rate_hz, config.filterbank);
    std::filesystem::create_directories(out_dir);
    for (const std::string& text : groups) {
        const GroupSelector sel = parse_group_selector(text);
        const PmfModel model = build_class_model(manifest, wav_dir, sel, bank, config.pmf_bins);
        const std::filesystem::path path =
            std::filesystem::path(out_dir) / (sel.name + ".pmfm");
        save_pmf_model(model, path);
        std::cout << "group " << sel.name << ": " << model.file_count << " files -> "
                  << path.string() << '\n';
    }
}

void cmd_embed(const RunConfig& config, const std::string& manifest_path,
               const std::string& wav_dir, const std::string& model1_path,
               const std::string& model2_path, const std::string& out_base) {
    const Manifest manifest = read_manifest(manifest_path);
    const FilterBank bank = FilterBank::design(config.sample_rate_hz, config.filterbank);
    const PmfModel class1 = load_pmf_model(model1_path);
    const PmfModel class2 = load_pmf_model(model2_path);
    EmbeddingParams params;
    params.divergence_epsilon = config.epsilon;
    params.qc = config.qc;
    const EmbeddingSet set =
        embed_manifest(manifest, wav_dir, class1, class2, bank, config.pmf_bins, params);
    ensure_parent(out_base);
    save_embeddings(set, out_base);
    std::cout << "embedded " << set.rows.size() << " utterances, dim=" << set.layout.dim()
              << " -> " << out_base << ".f64\n";
}

void cmd_train_gender(const RunConfig& config, const std::string& train_base,
                      const std::optional<std::string>& dev_base, const std::string& out_path,
                      const std::optional<std::string>& log_path) {
    const Dataset train = gender_dataset(load_embeddings(train_base));
    std::ofstream log;
    if (log_path) {
        log.open(*log_path);
        if (!log) fail(Errc::io_error, "cannot write " + *log_path);
    }
    const TrainedModel model =
        config.gender_classifier == ModelKind::logistic_regression
            ? train_logreg(train, config.gender_logreg, log_path ? &log : nullptr)
            : train_gbdt(train, config.gender_gbdt, log_path ? &log : nullptr);
    ensure_parent(out_path);
    save_model(model, out_path);
    std::cout << "gender model " << model_kind_to_string(model.kind) << " trained on "
              << train.size() << " rows -> " << out_path << '\n';
    if (dev_base) {
        const Dataset dev = gender_dataset(load_embeddings(*dev_base));
        std::cout << "held-out accuracy = " << fmt(held_out_accuracy(model, dev)) << '\n';
    }
}

void cmd_train_cm(const RunConfig& config, const std::string& train_base,
                  const std::optional<std::string>& dev_base, const std::string& out_path,
                  const std::optional<std::string>& variant,
                  const std::optional<std::string>& filter_gender,
                  const std::optional<std::string>& log_path) {
    EmbeddingSet train_set = load_embeddings(train_base);
    if (filter_gender) {
        if (*filter_gender != "m" && *filter_gender != "f")
            fail(Errc::config_error, "--filter-gender must be m or f");
        EmbeddingSet filtered;
        filtered.layout = train_set.layout;
        for (Embedding& row : train_set.rows)
            if (row.gender == (*filter_gender)[0]) filtered.rows.push_back(std::move(row));
        train_set = std::move(filtered);
    }
    Dataset train = cm_dataset(train_set);
    const std::size_t before = train.size();
    if (config.smote) train = smote_oversample(train, config.smote_k, config.smote_seed);

    const MlpVariant v = variant ? mlp_variant_from_string(*variant) : config.cm_variant;
    const GroupedMlpSpec spec = cm_spec_from_config(config, v);

    std::ofstream log;
    if (log_path) {
        log.open(*log_path);
        if (!log) fail(Errc::io_error, "cannot write " + *log_path);
    }
    std::optional<Dataset> dev;
    if (dev_base) dev = cm_dataset(load_embeddings(*dev_base));
    const TrainedModel model = train_grouped_mlp(train, spec, log_path ? &log : nullptr,
                                                 dev ? &*dev : nullptr);
    ensure_parent(out_path);
    save_model(model, out_path);
    std::cout << "cm model variant=" << mlp_variant_to_string(v) << " rows=" << before;
    if (config.smote) std::cout << " oversampled=" << train.size();
    std::cout << " -> " << out_path << '\n';
}

void cmd_score(const RunConfig& config, const std::string& emb_base,
               const std::optional<std::string>& model_path,
               const std::optional<std::string>& male_path,
               const std::optional<std::string>& female_path,
               const std::optional<std::string>& gender_model_path,
               const std::string& out_path) {
    const EmbeddingSet set = load_embeddings(emb_base);
    TrialScoreSet scores;
    if (config.gender_mode == GenderMode::gender_independent) {
        if (!model_path)
            fail(Errc::config_error, "gender_independent scoring needs --model");
        scores = score_embeddings(load_model(*model_path), set);
    } else {
        if (!male_path || !female_path)
            fail(Errc::config_error,
                 "gender-routed scoring needs --model-male and --model-female");
        const TrainedModel male_model = load_model(*male_path);
        const TrainedModel female_model = load_model(*female_path);
        std::vector<char> genders;
        if (config.gender_mode == GenderMode::oracle_labels) {
            for (const Embedding& row : set.rows) genders.push_back(row.gender);
        } else {
            if (!gender_model_path)
                fail(Errc::config_error,
                     "gender_dependent scoring needs --gender-model (from train-gender)");
            genders = predict_genders(load_model(*gender_model_path), set);
        }
        scores = score_embeddings_routed(male_model, female_model, set, genders);
    }
    ensure_parent(out_path);
    write_score_file(scores, out_path);
    std::cout << "scored " << scores.entries.size() << " trials -> " << out_path << '\n';
}

void cmd_eval(const RunConfig& config, const std::string& cm_path, const std::string& asv_path,
              const std::optional<std::string>& csv_path) {
    const TrialScoreSet cm = read_score_file(cm_path);
    const TrialScoreSet asv = read_score_file(asv_path);
    const EvalReport report = evaluate_tandem(cm, asv, config);
    write_report_text(report, std::cout);
    if (csv_path) {
        ensure_parent(*csv_path);
        write_report_csv(report, *csv_path);
    }
}

void cmd_fuse(const RunConfig& config, const std::string& eval_a, const std::string& eval_b,
              const std::optional<std::string>& dev_a, const std::optional<std::string>& dev_b,
              const std::optional<double> alpha, const std::optional<std::string>& method,
              const std::optional<std::string>& tune_on, const std::string& out_path,
              const std::optional<std::string>& sweep_csv) {
    FusionConfig fusion = config.fusion;
    if (method) {
        if (*method == "weighted_average")
            fusion.method = FusionMethod::weighted_average;
        else if (*method == "classifier")
            fusion.method = FusionMethod::classifier;
        else
            fail(Errc::config_error, "--method must be weighted_average or classifier");
    }
    const std::string tune = tune_on ? *tune_on : config.fusion_tune_on;
    if (tune != "dev" && tune != "eval")
        fail(Errc::config_error, "--tune-on must be dev or eval");

    const TrialScoreSet ea = map_to_unit(read_score_file(eval_a), fusion.range_a);
    const TrialScoreSet eb = map_to_unit(read_score_file(eval_b), fusion.range_b);
    std::optional<TrialScoreSet> da, db;
    if (dev_a && dev_b) {
        da = map_to_unit(read_score_file(*dev_a), fusion.range_a);
        db = map_to_unit(read_score_file(*dev_b), fusion.range_b);
    } else if (dev_a || dev_b) {
        fail(Errc::config_error, "--dev-a and --dev-b must be given together");
    }
    if (tune == "dev" && !da && !alpha)
        fail(Errc::config_error, "tuning on dev needs --dev-a and --dev-b");

    if (fusion.method == FusionMethod::weighted_average) {
        double chosen;
        if (alpha) {
            chosen = *alpha;
        } else {
            const AlphaSweepResult tuned = tune == "dev" ? sweep_alpha(*da, *db, fusion.grid_step)
                                                         : sweep_alpha(ea, eb, fusion.grid_step);
            chosen = tuned.best_alpha;
            std::cout << "alpha=" << fmt(tuned.best_alpha)
                      << " tune_eer=" << fmt(tuned.best_eer) << " tuned_on=" << tune << '\n';
            if (sweep_csv) {
                const AlphaSweepResult eval_sweep = sweep_alpha(ea, eb, fusion.grid_step);
                std::optional<AlphaSweepResult> dev_sweep;
                if (da) dev_sweep = tune == "dev" ? tuned : sweep_alpha(*da, *db, fusion.grid_step);
                ensure_parent(*sweep_csv);
                std::ofstream os(*sweep_csv);
                if (!os) fail(Errc::io_error, "cannot write " + *sweep_csv);
                os << "alpha,dev_eer,eval_eer\n";
                for (std::size_t i = 0; i < eval_sweep.rows.size(); ++i)
                    os << fmt(eval_sweep.rows[i].alpha) << ','
                       << (dev_sweep ? fmt(dev_sweep->rows[i].eer) : "nan") << ','
                       << fmt(eval_sweep.rows[i].eer) << '\n';
            }
        }
        const TrialScoreSet fused = fuse_weighted(ea, eb, chosen);
        ensure_parent(out_path);
        write_score_file(fused, out_path);
        std::cout << "fused " << fused.entries.size() << " trials at alpha=" << fmt(chosen)
                  << " eer=" << fmt(eer_cm(fused).value) << " -> " << out_path << '\n';
        return;
    }

    // classifier fusion with a small declared hyperparameter grid
    const TrialScoreSet& ta = tune == "dev" && da ? *da : ea;
    const TrialScoreSet& tb = tune == "dev" && db ? *db : eb;
    const Dataset tune_ds = pairs_as_dataset(ta, tb);
    const Dataset eval_ds = pairs_as_dataset(ea, eb);

    std::vector<FusionConfig> candidates;
    if (fusion.classifier_kind == ModelKind::logistic_regression) {
        for (double l2 : {0.0, 0.01, 0.1}) {
            FusionConfig c = fusion;
            c.logreg.l2 = l2;
            candidates.push_back(c);
        }
    } else {
        for (const auto [trees, depth] : {std::pair{50, 2}, std::pair{200, 3}}) {
            FusionConfig c = fusion;
            c.gbdt.n_trees = trees;
            c.gbdt.max_depth = depth;
            candidates.push_back(c);
        }
    }
    std::size_t best = 0;
    double best_eer = 2.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double e = eer_cm(fuse_classifier(tune_ds, tune_ds, candidates[i])).value;
        if (e < best_eer) {
            best_eer = e;
            best = i;
        }
    }
    const TrialScoreSet fused = fuse_classifier(tune_ds, eval_ds, candidates[best]);
    ensure_parent(out_path);
    write_score_file(fused, out_path);
    std::cout << "classifier fusion kind="
              << model_kind_to_string(fusion.classifier_kind) << " candidate=" << best
              << " tune_eer=" << fmt(best_eer) << " eval_eer=" << fmt(eer_cm(fused).value)
              << " -> " << out_path << '\n';
}

void cmd_pca_export(const std::string& emb_base, int dims, const std::string& out_path) {
    const EmbeddingSet set = load_embeddings(emb_base);
    std::vector<std::vector<double>> data;
    data.reserve(set.rows.size());
    for (const Embedding& row : set.rows) data.push_back(row.values);
    const PcaResult pca = pca_fit(data, dims);

    ensure_parent(out_path);
    std::ofstream os(out_path);
    if (!os) fail(Errc::io_error, "cannot write " + out_path);
    os << "source_id,label,gender";
    for (int d = 1; d <= dims; ++d) os << ",pc" << d;
    os << '\n';
    for (const Embedding& row : set.rows) {
        os << row.source_id << ',' << row.label << ',' << row.gender;
        for (double v : pca_project(pca, row.values)) os << ',' << fmt(v);
        os << '\n';
    }
    std::cout << "pca eigenvalues:";
    for (double ev : pca.eigenvalues) std::cout << ' ' << fmt(ev);
    std::cout << (pca.rank_deficient ? " (rank deficient)" : "") << '\n'
              << "projected " << set.rows.size() << " rows -> " << out_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-domain PMF embedding toolkit for spoofing-robust speaker verification"};
    app.require_subcommand(1);

    GlobalOpts global;
    app.add_option("--config", global.config_path, "run configuration file");
    app.add_option("--seed", global.seed, "master seed overriding every stage seed");
    app.add_option("--threads", global.threads, "worker thread budget");
    app.add_option("--gender-mode", global.gender_mode,
                   "gender_dependent | gender_independent | oracle_labels");

    try {
        auto* config_cmd = app.add_subcommand("config", "print the effective configuration");
        config_cmd->add_flag("--dump", "print all keys with their current values");
        config_cmd->callback([&] { make_config(global).dump(std::cout); });

        auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
        auto synth_out = std::make_shared<std::string>();
        auto synth_profile = std::make_shared<std::optional<std::string>>();
        synth->add_option("--out", *synth_out, "output directory")->required();
        synth->add_option("--profile", *synth_profile, "well_separated | overlapping");
        synth->callback([&, synth_out, synth_profile] {
            cmd_synth(make_config(global), *synth_out, *synth_profile);
        });

        auto* build = app.add_subcommand("build-models", "pool class-conditional PMF models");
        auto b_manifest = std::make_shared<std::string>();
        auto b_wav = std::make_shared<std::string>();
        auto b_groups = std::make_shared<std::vector<std::string>>();
        auto b_out = std::make_shared<std::string>();
        build->add_option("--manifest", *b_manifest, "manifest file")->required();
        build->add_option("--wav-dir", *b_wav, "wav directory")->required();
        build->add_option("--group", *b_groups, "name=key:value,... (repeatable)")->required();
        build->add_option("--out-dir", *b_out, "model output directory")->required();
        build->callback([&, b_manifest, b_wav, b_groups, b_out] {
            cmd_build_models(make_config(global), *b_manifest, *b_wav, *b_groups, *b_out);
        });

        auto* embed = app.add_subcommand("embed", "extract difference-of-distances embeddings");
        auto e_manifest = std::make_shared<std::string>();
        auto e_wav = std::make_shared<std::string>();
        auto e_m1 = std::make_shared<std::string>();
        auto e_m2 = std::make_shared<std::string>();
        auto e_out = std::make_shared<std::string>();
        embed->add_option("--manifest", *e_manifest, "manifest file")->required();
        embed->add_option("--wav-dir", *e_wav, "wav directory")->required();
        embed->add_option("--model1", *e_m1, "class-1 PMF model (bona fide / male)")->required();
        embed->add_option("--model2", *e_m2, "class-2 PMF model (spoof / female)")->required();
        embed->add_option("--out", *e_out, "output base path (.f64/.jsonl)")->required();
        embed->callback([&, e_manifest, e_wav, e_m1, e_m2, e_out] {
            cmd_embed(make_config(global), *e_manifest, *e_wav, *e_m1, *e_m2, *e_out);
        });

        auto* tg = app.add_subcommand("train-gender", "train the gender recognizer");
        auto tg_train = std::make_shared<std::string>();
        auto tg_dev = std::make_shared<std::optional<std::string>>();
        auto tg_out = std::make_shared<std::string>();
        auto tg_log = std::make_shared<std::optional<std::string>>();
        tg->add_option("--train", *tg_train, "training embeddings base path")->required();
        tg->add_option("--dev", *tg_dev, "held-out embeddings base path");
        tg->add_option("--out", *tg_out, "model output path")->required();
        tg->add_option("--log", *tg_log, "training-loss log path");
        tg->callback([&, tg_train, tg_dev, tg_out, tg_log] {
            cmd_train_gender(make_config(global), *tg_train, *tg_dev, *tg_out, *tg_log);
        });

        auto* tc = app.add_subcommand("train-cm", "train the countermeasure network");
        auto tc_train = std::make_shared<std::string>();
        auto tc_dev = std::make_shared<std::optional<std::string>>();
        auto tc_out = std::make_shared<std::string>();
        auto tc_variant = std::make_shared<std::optional<std::string>>();
        auto tc_gender = std::make_shared<std::optional<std::string>>();
        auto tc_log = std::make_shared<std::optional<std::string>>();
        tc->add_option("--train", *tc_train, "training embeddings base path")->required();
        tc->add_option("--dev", *tc_dev, "dev embeddings for the epoch log");
        tc->add_option("--out", *tc_out, "model output path")->required();
        tc->add_option("--variant", *tc_variant, "male | female | gender_independent");
        tc->add_option("--filter-gender", *tc_gender, "train on one gender only (m | f)");
        tc->add_option("--log", *tc_log, "training-loss log path");
        tc->callback([&, tc_train, tc_dev, tc_out, tc_variant, tc_gender, tc_log] {
            cmd_train_cm(make_config(global), *tc_train, *tc_dev, *tc_out, *tc_variant,
                         *tc_gender, *tc_log);
        });

        auto* sc = app.add_subcommand("score", "score embeddings with trained models");
        auto sc_emb = std::make_shared<std::string>();
        auto sc_model = std::make_shared<std::optional<std::string>>();
        auto sc_male = std::make_shared<std::optional<std::string>>();
        auto sc_female = std::make_shared<std::optional<std::string>>();
        auto sc_gmodel = std::make_shared<std::optional<std::string>>();
        auto sc_out = std::make_shared<std::string>();
        sc->add_option("--embeddings", *sc_emb, "embeddings base path")->required();
        sc->add_option("--model", *sc_model, "single model (gender_independent mode)");
        sc->add_option("--model-male", *sc_male, "male-branch model");
        sc->add_option("--model-female", *sc_female, "female-branch model");
        sc->add_option("--gender-model", *sc_gmodel, "gender recognizer for routing");
        sc->add_option("--out", *sc_out, "score file output path")->required();
        sc->callback([&, sc_emb, sc_model, sc_male, sc_female, sc_gmodel, sc_out] {
            cmd_score(make_config(global), *sc_emb, *sc_model, *sc_male, *sc_female, *sc_gmodel,
                      *sc_out);
        });

        auto* ev = app.add_subcommand("eval", "tandem evaluation of CM + ASV score files");
        auto ev_cm = std::make_shared<std::string>();
        auto ev_asv = std::make_shared<std::string>();
        auto ev_csv = std::make_shared<std::optional<std::string>>();
        ev->add_option("--cm-scores", *ev_cm, "countermeasure score file")->required();
        ev->add_option("--asv-scores", *ev_asv, "verification score file")->required();
        ev->add_option("--out-csv", *ev_csv, "metric CSV output path");
        ev->callback([&, ev_cm, ev_asv, ev_csv] {
            cmd_eval(make_config(global), *ev_cm, *ev_asv, *ev_csv);
        });

        auto* fu = app.add_subcommand("fuse", "fuse two countermeasure score streams");
        auto fu_ea = std::make_shared<std::string>();
        auto fu_eb = std::make_shared<std::string>();
        auto fu_da = std::make_shared<std::optional<std::string>>();
        auto fu_db = std::make_shared<std::optional<std::string>>();
        auto fu_alpha = std::make_shared<std::optional<double>>();
        auto fu_method = std::make_shared<std::optional<std::string>>();
        auto fu_tune = std::make_shared<std::optional<std::string>>();
        auto fu_out = std::make_shared<std::string>();
        auto fu_csv = std::make_shared<std::optional<std::string>>();
        fu->add_option("--eval-a", *fu_ea, "stream A eval score file")->required();
        fu->add_option("--eval-b", *fu_eb, "stream B eval score file")->required();
        fu->add_option("--dev-a", *fu_da, "stream A dev score file");
        fu->add_option("--dev-b", *fu_db, "stream B dev score file");
        fu->add_option("--alpha", *fu_alpha, "fixed weight (skips the sweep)");
        fu->add_option("--method", *fu_method, "weighted_average | classifier");
        fu->add_option("--tune-on", *fu_tune, "dev | eval");
        fu->add_option("--out", *fu_out, "fused score file output path")->required();
        fu->add_option("--sweep-csv", *fu_csv, "alpha sweep CSV output path");
        fu->callback([&, fu_ea, fu_eb, fu_da, fu_db, fu_alpha, fu_method, fu_tune, fu_out,
                      fu_csv] {
            cmd_fuse(make_config(global), *fu_ea, *fu_eb, *fu_da, *fu_db, *fu_alpha, *fu_method,
                     *fu_tune, *fu_out, *fu_csv);
        });

        auto* pca = app.add_subcommand("pca-export", "project embeddings for plotting");
        auto pca_emb = std::make_shared<std::string>();
        auto pca_dims = std::make_shared<int>(2);
        auto pca_out = std::make_shared<std::string>();
        pca->add_option("--embeddings", *pca_emb, "embeddings base path")->required();
        pca->add_option("--dims", *pca_dims, "projection dimensions");
        pca->add_option("--out", *pca_out, "CSV output path")->required();
        pca->callback([&, pca_emb, pca_dims, pca_out] {
            cmd_pca_export(*pca_emb, *pca_dims, *pca_out);
        });

        for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const SasvError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
