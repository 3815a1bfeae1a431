#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <vector>

#include "sasv/config.hpp"

namespace sasv {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int parse_int(const std::string& v) {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
}

std::uint64_t parse_u64(const std::string& v) {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
}

double parse_double(const std::string& v) {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument(v);
}

std::string format_double(double v) {
    for (int precision = 15; precision <= 17; ++precision) {
        std::ostringstream os;
        os.precision(precision);
        os << v;
        if (std::stod(os.str()) == v) return os.str();
    }
    return {};
}

struct Binding {
    std::string key;
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
};

std::vector<Binding> make_bindings(RunConfig& c) {
    std::vector<Binding> b;
    auto add_int = [&b](const char* key, int& ref) {
        b.push_back({key, [&ref] { return std::to_string(ref); },
                     [&ref](const std::string& v) { ref = parse_int(v); }});
    };
    auto add_u64 = [&b](const char* key, std::uint64_t& ref) {
        b.push_back({key, [&ref] { return std::to_string(ref); },
                     [&ref](const std::string& v) { ref = parse_u64(v); }});
    };
    auto add_double = [&b](const char* key, double& ref) {
        b.push_back({key, [&ref] { return format_double(ref); },
                     [&ref](const std::string& v) { ref = parse_double(v); }});
    };
    auto add_bool = [&b](const char* key, bool& ref) {
        b.push_back({key, [&ref] { return ref ? std::string("true") : std::string("false"); },
                     [&ref](const std::string& v) { ref = parse_bool(v); }});
    };
    auto add_string = [&b](const char* key, std::string& ref) {
        b.push_back({key, [&ref] { return ref; }, [&ref](const std::string& v) { ref = v; }});
    };

    add_int("run.threads", c.threads);
    add_string("run.workdir", c.workdir);

    add_int("filterbank.sample_rate_hz", c.sample_rate_hz);
    add_double("filterbank.min_cf_hz", c.filterbank.min_cf_hz);
    add_double("filterbank.max_cf_hz", c.filterbank.max_cf_hz);
    add_int("filterbank.pairs", c.filterbank.n_pairs);
    add_int("filterbank.order", c.filterbank.order);
    add_int("filterbank.inverse_fir_taps", c.filterbank.inverse_fir_taps);

    add_int("pmf.bins", c.pmf_bins);
    add_double("pmf.epsilon", c.epsilon);

    add_int("similarity.qc_half_width", c.qc.half_width);
    add_double("similarity.qc_sigma", c.qc.sigma);
    add_double("similarity.qc_normalization_power", c.qc.normalization_power);

    b.push_back({"gender.classifier",
                 [&c] { return std::string(model_kind_to_string(c.gender_classifier)); },
                 [&c](const std::string& v) { c.gender_classifier = model_kind_from_string(v); }});
    add_double("gender.logreg_l2", c.gender_logreg.l2);
    add_int("gender.logreg_epochs", c.gender_logreg.epochs);
    add_double("gender.logreg_lr", c.gender_logreg.lr);
    add_u64("gender.logreg_seed", c.gender_logreg.seed);
    add_int("gender.gbdt_trees", c.gender_gbdt.n_trees);
    add_int("gender.gbdt_depth", c.gender_gbdt.max_depth);
    add_double("gender.gbdt_lr", c.gender_gbdt.lr);
    add_double("gender.gbdt_l2", c.gender_gbdt.l2);
    add_int("gender.gbdt_bins", c.gender_gbdt.max_bins);
    add_u64("gender.gbdt_seed", c.gender_gbdt.seed);

    b.push_back({"cm.variant", [&c] { return std::string(mlp_variant_to_string(c.cm_variant)); },
                 [&c](const std::string& v) { c.cm_variant = mlp_variant_from_string(v); }});
    add_int("cm.epochs", c.cm_epochs);
    add_int("cm.batch_size", c.cm_batch_size);
    add_double("cm.lr", c.cm_lr);
    add_double("cm.dropout", c.cm_dropout);
    add_u64("cm.seed", c.cm_seed);
    add_double("cm.ocs_alpha", c.ocs.alpha_scale);
    add_double("cm.ocs_m_target", c.ocs.m_target);
    add_double("cm.ocs_m_other", c.ocs.m_other);
    add_bool("cm.smote", c.smote);
    add_int("cm.smote_k", c.smote_k);
    add_u64("cm.smote_seed", c.smote_seed);

    add_double("costs.c_miss", c.costs.c_miss);
    add_double("costs.c_fa", c.costs.c_fa);
    add_double("costs.c_fa_spoof", c.costs.c_fa_spoof);
    add_double("costs.pi_tar", c.costs.pi_tar);
    add_double("costs.pi_non", c.costs.pi_non);
    add_double("costs.pi_spoof", c.costs.pi_spoof);

    add_double("dcf.c_miss", c.asv_dcf.c_miss);
    add_double("dcf.c_fa", c.asv_dcf.c_fa);
    b.push_back({"dcf.pi_tar", [&c] { return format_double(c.asv_dcf.pi_tar); },
                 [&c](const std::string& v) {
                     c.asv_dcf.pi_tar = parse_double(v);
                     c.asv_dcf.pi_non = 1.0 - c.asv_dcf.pi_tar;
                     c.asv_dcf.pi_spoof = 0.0;
                 }});

    add_int("bootstrap.m", c.bootstrap.m);
    add_double("bootstrap.alpha", c.bootstrap.alpha_percent);
    add_u64("bootstrap.seed", c.bootstrap.seed);
    add_bool("bootstrap.stratified", c.bootstrap.stratified);

    b.push_back({"synth.profile", [&c] { return std::string(to_string(c.synth.profile)); },
                 [&c](const std::string& v) { c.synth.profile = synth_profile_from_string(v); }});
    add_int("synth.sample_rate_hz", c.synth.sample_rate_hz);
    add_double("synth.duration_s", c.synth.duration_s);
    add_int("synth.attacks", c.synth.attacks);
    add_int("synth.train_target", c.synth.train.target);
    add_int("synth.train_nontarget", c.synth.train.nontarget);
    add_int("synth.train_spoof", c.synth.train.spoof);
    add_int("synth.dev_target", c.synth.dev.target);
    add_int("synth.dev_nontarget", c.synth.dev.nontarget);
    add_int("synth.dev_spoof", c.synth.dev.spoof);
    add_int("synth.eval_target", c.synth.eval.target);
    add_int("synth.eval_nontarget", c.synth.eval.nontarget);
    add_int("synth.eval_spoof", c.synth.eval.spoof);
    add_u64("synth.seed", c.synth.seed);

    b.push_back({"eval.gender_mode", [&c] { return std::string(to_string(c.gender_mode)); },
                 [&c](const std::string& v) { c.gender_mode = gender_mode_from_string(v); }});

    b.push_back({"fusion.method",
                 [&c] {
                     return std::string(c.fusion.method == FusionMethod::weighted_average
                                            ? "weighted_average"
                                            : "classifier");
                 },
                 [&c](const std::string& v) {
                     if (v == "weighted_average")
                         c.fusion.method = FusionMethod::weighted_average;
                     else if (v == "classifier")
                         c.fusion.method = FusionMethod::classifier;
                     else
                         throw std::invalid_argument(v);
                 }});
    add_double("fusion.alpha", c.fusion.alpha);
    add_double("fusion.grid_step", c.fusion.grid_step);
    b.push_back({"fusion.classifier",
                 [&c] { return std::string(model_kind_to_string(c.fusion.classifier_kind)); },
                 [&c](const std::string& v) { c.fusion.classifier_kind = model_kind_from_string(v); }});
    auto add_range = [&b](const char* key, ScoreRange& ref) {
        b.push_back({key,
                     [&ref] {
                         return std::string(ref == ScoreRange::unit ? "unit" : "symmetric");
                     },
                     [&ref](const std::string& v) {
                         if (v == "unit")
                             ref = ScoreRange::unit;
                         else if (v == "symmetric")
                             ref = ScoreRange::symmetric;
                         else
                             throw std::invalid_argument(v);
                     }});
    };
    add_range("fusion.range_a", c.fusion.range_a);
    add_range("fusion.range_b", c.fusion.range_b);
    add_string("fusion.tune_on", c.fusion_tune_on);
    add_double("fusion.logreg_l2", c.fusion.logreg.l2);
    add_int("fusion.logreg_epochs", c.fusion.logreg.epochs);
    add_double("fusion.logreg_lr", c.fusion.logreg.lr);
    add_u64("fusion.logreg_seed", c.fusion.logreg.seed);
    add_int("fusion.gbdt_trees", c.fusion.gbdt.n_trees);
    add_int("fusion.gbdt_depth", c.fusion.gbdt.max_depth);
    add_u64("fusion.gbdt_seed", c.fusion.gbdt.seed);
    return b;
}

}  // namespace

std::string_view to_string(GenderMode m) {
    switch (m) {
        case GenderMode::gender_dependent: return "gender_dependent";
        case GenderMode::gender_independent: return "gender_independent";
        case GenderMode::oracle_labels: return "oracle_labels";
    }
    return "";
}

GenderMode gender_mode_from_string(std::string_view s) {
    if (s == "gender_dependent") return GenderMode::gender_dependent;
    if (s == "gender_independent") return GenderMode::gender_independent;
    if (s == "oracle_labels") return GenderMode::oracle_labels;
    fail(Errc::config_error, "unknown gender mode: " + std::string(s));
}

std::string_view to_string(SynthProfile p) {
    return p == SynthProfile::well_separated ? "well_separated" : "overlapping";
}

SynthProfile synth_profile_from_string(std::string_view s) {
    if (s == "well_separated") return SynthProfile::well_separated;
    if (s == "overlapping") return SynthProfile::overlapping;
    fail(Errc::config_error, "unknown synth profile: " + std::string(s));
}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
    RunConfig& self = *this;
    for (Binding& binding : make_bindings(self))
        if (binding.key == dotted_key) {
            try {
                binding.set(value);
            } catch (const SasvError&) {
                throw;
            } catch (const std::exception&) {
                fail(Errc::config_error,
                     "bad value '" + value + "' for key " + dotted_key);
            }
            return;
        }
    fail(Errc::config_error, "unknown config key: " + dotted_key);
}

void RunConfig::dump(std::ostream& os) const {
    RunConfig copy = *this;
    std::string section;
    for (const Binding& binding : make_bindings(copy)) {
        const std::string sec = binding.key.substr(0, binding.key.find('.'));
        const std::string key = binding.key.substr(binding.key.find('.') + 1);
        if (sec != section) {
            if (!section.empty()) os << '\n';
            os << '[' << sec << "]\n";
            section = sec;
        }
        os << key << " = " << binding.get() << '\n';
    }
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) fail(Errc::io_error, "cannot open config file: " + path.string());

    RunConfig config;
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                fail(Errc::config_error,
                     path.string() + ":" + std::to_string(line_no) + ": malformed section");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                fail(Errc::config_error,
                     path.string() + ":" + std::to_string(line_no) + ": empty section name");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(Errc::config_error,
                 path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            fail(Errc::config_error,
                 path.string() + ":" + std::to_string(line_no) + ": empty key");
        if (section.empty())
            fail(Errc::config_error,
                 path.string() + ":" + std::to_string(line_no) + ": key outside any section");
        config.set(section + "." + key, value);
    }
    config.validate();
    return config;
}

void RunConfig::validate() const {
    if (threads < 1) fail(Errc::config_error, "run.threads must be at least 1");
    if (sample_rate_hz < 8000) fail(Errc::config_error, "sample rate must be at least 8000");
    if (pmf_bins < 2) fail(Errc::config_error, "pmf.bins must be at least 2");
    if (!(epsilon > 0.0 && epsilon <= 1e-3))
        fail(Errc::bad_epsilon, "pmf.epsilon must lie in (0, 1e-3]");
    if (qc.half_width < 1 || !(qc.sigma > 0.0))
        fail(Errc::config_error, "quadratic-chi kernel parameters must be positive");
    costs.validate();
    asv_dcf.validate();
    if (bootstrap.m < 100) fail(Errc::config_error, "bootstrap.m must be at least 100");
    if (!(bootstrap.alpha_percent > 0.0 && bootstrap.alpha_percent < 100.0))
        fail(Errc::config_error, "bootstrap.alpha must lie in (0, 100)");
    if (synth.sample_rate_hz < 8000)
        fail(Errc::config_error, "synth.sample_rate_hz must be at least 8000");
    if (!(synth.duration_s > 0.0)) fail(Errc::config_error, "synth.duration_s must be positive");
    if (synth.attacks < 1) fail(Errc::config_error, "synth.attacks must be at least 1");
    for (const SubsetCounts* s : {&synth.train, &synth.dev, &synth.eval})
        if (s->target < 0 || s->nontarget < 0 || s->spoof < 0)
            fail(Errc::config_error, "synthetic subset counts must be non-negative");
    if (fusion_tune_on != "dev" && fusion_tune_on != "eval")
        fail(Errc::config_error, "fusion.tune_on must be dev or eval");
    if (!(fusion.alpha >= 0.0 && fusion.alpha <= 1.0))
        fail(Errc::bad_alpha, "fusion.alpha must lie in [0, 1]");
    if (!(fusion.grid_step > 0.0 && fusion.grid_step <= 0.5))
        fail(Errc::config_error, "fusion.grid_step must lie in (0, 0.5]");
}

void RunConfig::apply_master_seed(std::uint64_t seed) {
    gender_logreg.seed = mix_seed(seed, 1);
    gender_gbdt.seed = mix_seed(seed, 2);
    cm_seed = mix_seed(seed, 3);
    smote_seed = mix_seed(seed, 4);
    bootstrap.seed = mix_seed(seed, 5);
    synth.seed = mix_seed(seed, 6);
    fusion.logreg.seed = mix_seed(seed, 7);
    fusion.gbdt.seed = mix_seed(seed, 8);
}

}  // namespace sasv
