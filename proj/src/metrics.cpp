#include "sasv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace sasv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool class_in(TrialClass c, std::initializer_list<TrialClass> classes) {
    for (TrialClass x : classes)
        if (x == c) return true;
    return false;
}

std::vector<double> sorted_scores(const TrialScoreSet& set,
                                  std::initializer_list<TrialClass> classes) {
    std::vector<double> out;
    for (const auto& t : set.entries)
        if (class_in(t.cls, classes)) out.push_back(t.score);
    std::sort(out.begin(), out.end());
    return out;
}

double frac_below(const std::vector<double>& sorted, double tau) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), tau);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double frac_at_or_above(const std::vector<double>& sorted, double tau) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), tau);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

void require_scores(const std::vector<double>& v, const char* what, Errc errc) {
    if (v.empty()) fail(errc, std::string("no ") + what + " trials in score set");
}

struct BinaryRatePrep {
    std::vector<double> pos;
    std::vector<double> neg;
    std::vector<double> taus;
};

BinaryRatePrep prepare(const TrialScoreSet& set, std::initializer_list<TrialClass> positive,
                       std::initializer_list<TrialClass> negative) {
    BinaryRatePrep prep;
    prep.pos = sorted_scores(set, positive);
    prep.neg = sorted_scores(set, negative);
    require_scores(prep.pos, "positive-class", Errc::empty_class);
    require_scores(prep.neg, "negative-class", Errc::empty_class);
    std::vector<double> all;
    all.reserve(prep.pos.size() + prep.neg.size());
    all.insert(all.end(), prep.pos.begin(), prep.pos.end());
    all.insert(all.end(), prep.neg.begin(), prep.neg.end());
    prep.taus = sweep_thresholds(all);
    return prep;
}

void check_finite_scores(const TrialScoreSet& set, const std::filesystem::path& path) {
    for (const auto& t : set.entries)
        if (!std::isfinite(t.score))
            fail(Errc::io_error, "non-finite score for trial " + t.trial_id + " in " +
                                     path.string());
}

std::string format_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string_view to_string(TrialClass c) {
    switch (c) {
        case TrialClass::target: return "target";
        case TrialClass::nontarget: return "nontarget";
        case TrialClass::spoof: return "spoof";
    }
    fail(Errc::bad_argument, "unknown trial class");
}

TrialClass trial_class_from_string(std::string_view s) {
    if (s == "target") return TrialClass::target;
    if (s == "nontarget") return TrialClass::nontarget;
    if (s == "spoof") return TrialClass::spoof;
    fail(Errc::io_error, "unknown trial class: " + std::string(s));
}

std::size_t TrialScoreSet::count_of(TrialClass c) const {
    std::size_t n = 0;
    for (const auto& t : entries)
        if (t.cls == c) ++n;
    return n;
}

std::vector<double> TrialScoreSet::scores_of(std::initializer_list<TrialClass> classes) const {
    std::vector<double> out;
    for (const auto& t : entries)
        if (class_in(t.cls, classes)) out.push_back(t.score);
    return out;
}

void TandemCostModel::validate() const {
    if (!(pi_tar >= 0.0 && pi_non >= 0.0 && pi_spoof >= 0.0))
        fail(Errc::config_error, "priors must be non-negative");
    if (std::abs(pi_tar + pi_non + pi_spoof - 1.0) > 1e-12)
        fail(Errc::config_error, "priors must sum to 1");
    if (!(c_miss >= 0.0 && c_fa >= 0.0 && c_fa_spoof >= 0.0))
        fail(Errc::config_error, "costs must be non-negative");
    if (c_miss == 0.0 && c_fa == 0.0 && c_fa_spoof == 0.0)
        fail(Errc::config_error, "at least one cost must be positive");
}

double TandemCostModel::default_tandem_cost() const {
    return std::min(c_fa * pi_non + c_fa_spoof * pi_spoof, c_miss * pi_tar);
}

ErrorRates error_rates(const TrialScoreSet& scores, double tau,
                       std::initializer_list<TrialClass> positive,
                       std::initializer_list<TrialClass> negative) {
    const auto pos = sorted_scores(scores, positive);
    const auto neg = sorted_scores(scores, negative);
    require_scores(pos, "positive-class", Errc::empty_class);
    require_scores(neg, "negative-class", Errc::empty_class);
    return {frac_below(pos, tau), frac_at_or_above(neg, tau)};
}

ErrorRates error_rates(const TrialScoreSet& scores, double tau,
                       std::initializer_list<TrialClass> positive) {
    std::vector<TrialClass> neg;
    for (TrialClass c : {TrialClass::target, TrialClass::nontarget, TrialClass::spoof})
        if (!class_in(c, positive)) neg.push_back(c);
    switch (neg.size()) {
        case 1: return error_rates(scores, tau, positive, {neg[0]});
        case 2: return error_rates(scores, tau, positive, {neg[0], neg[1]});
        default: fail(Errc::bad_argument, "positive class set covers every class");
    }
}

std::vector<double> sweep_thresholds(std::span<const double> scores) {
    std::vector<double> distinct(scores.begin(), scores.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> taus;
    taus.push_back(-kInf);
    for (std::size_t i = 1; i < distinct.size(); ++i) {
        const double lo = distinct[i - 1];
        const double hi = distinct[i];
        if (std::isfinite(lo) && std::isfinite(hi))
            taus.push_back(lo + (hi - lo) / 2.0);
        else if (lo == -kInf && std::isfinite(hi))
            taus.push_back(hi - 1.0);
        else if (std::isfinite(lo) && hi == kInf)
            taus.push_back(lo + 1.0);
    }
    taus.push_back(kInf);
    return taus;
}

SweepPoint eer(const TrialScoreSet& scores, std::initializer_list<TrialClass> positive,
               std::initializer_list<TrialClass> negative) {
    const BinaryRatePrep prep = prepare(scores, positive, negative);
    SweepPoint best{kInf, 0.0};
    double best_gap = kInf;
    for (double tau : prep.taus) {
        const double pm = frac_below(prep.pos, tau);
        const double pf = frac_at_or_above(prep.neg, tau);
        const double gap = std::abs(pm - pf);
        if (gap < best_gap) {
            best_gap = gap;
            best = {(pm + pf) / 2.0, tau};
        }
    }
    return best;
}

SweepPoint eer_asv(const TrialScoreSet& scores) {
    return eer(scores, {TrialClass::target}, {TrialClass::nontarget});
}

SweepPoint eer_cm(const TrialScoreSet& scores) {
    return eer(scores, {TrialClass::target, TrialClass::nontarget}, {TrialClass::spoof});
}

double dcf(const TrialScoreSet& scores, double tau, const TandemCostModel& cost) {
    cost.validate();
    const ErrorRates r = error_rates(scores, tau, {TrialClass::target}, {TrialClass::nontarget});
    return cost.c_miss * cost.pi_tar * r.p_miss + cost.c_fa * (1.0 - cost.pi_tar) * r.p_fa;
}

SweepPoint min_dcf(const TrialScoreSet& scores, const TandemCostModel& cost) {
    cost.validate();
    const BinaryRatePrep prep =
        prepare(scores, {TrialClass::target}, {TrialClass::nontarget});
    SweepPoint best{kInf, 0.0};
    for (double tau : prep.taus) {
        const double v = cost.c_miss * cost.pi_tar * frac_below(prep.pos, tau) +
                         cost.c_fa * (1.0 - cost.pi_tar) * frac_at_or_above(prep.neg, tau);
        if (v < best.value) best = {v, tau};
    }
    return best;
}

double dcf_default(const TandemCostModel& cost) {
    return std::min(cost.c_miss * cost.pi_tar, cost.c_fa * (1.0 - cost.pi_tar));
}

AsvOperatingPoint asv_operating_point(const TrialScoreSet& asv, double tau) {
    const auto tar = sorted_scores(asv, {TrialClass::target});
    const auto non = sorted_scores(asv, {TrialClass::nontarget});
    const auto spf = sorted_scores(asv, {TrialClass::spoof});
    require_scores(tar, "target", Errc::empty_class);
    require_scores(non, "nontarget", Errc::empty_class);
    require_scores(spf, "spoof", Errc::missing_spoof_trials);
    return {tau, frac_below(tar, tau), frac_at_or_above(non, tau), frac_at_or_above(spf, tau)};
}

AsvOperatingPoint asv_eer_operating_point(const TrialScoreSet& asv) {
    return asv_operating_point(asv, eer_asv(asv).tau);
}

namespace {

struct CmRates {
    double p_miss = 0.0;
    double p_fa = 0.0;
};

CmRates cm_rates(const std::vector<double>& bona, const std::vector<double>& spoof, double tau) {
    return {frac_below(bona, tau), frac_at_or_above(spoof, tau)};
}

double tandem_cost_value(const CmRates& cm, const AsvOperatingPoint& asv,
                         const TandemCostModel& cost) {
    const double p_a = (1.0 - cm.p_miss) * asv.p_miss;
    const double p_b = (1.0 - cm.p_miss) * asv.p_fa;
    const double p_c = cm.p_fa * asv.p_fa_spoof;
    const double p_d = cm.p_miss;
    return cost.c_miss * cost.pi_tar * (p_a + p_d) + cost.c_fa * cost.pi_non * p_b +
           cost.c_fa_spoof * cost.pi_spoof * p_c;
}

struct CmPrep {
    std::vector<double> bona;
    std::vector<double> spoof;
    std::vector<double> taus;
};

CmPrep prepare_cm(const TrialScoreSet& cm) {
    CmPrep prep;
    prep.bona = sorted_scores(cm, {TrialClass::target, TrialClass::nontarget});
    prep.spoof = sorted_scores(cm, {TrialClass::spoof});
    require_scores(prep.bona, "bona fide", Errc::empty_class);
    require_scores(prep.spoof, "spoof", Errc::missing_spoof_trials);
    std::vector<double> all;
    all.reserve(prep.bona.size() + prep.spoof.size());
    all.insert(all.end(), prep.bona.begin(), prep.bona.end());
    all.insert(all.end(), prep.spoof.begin(), prep.spoof.end());
    prep.taus = sweep_thresholds(all);
    return prep;
}

}  // namespace

double tdcf_unconstrained(const TrialScoreSet& cm, const TrialScoreSet& asv, double tau_cm,
                          double tau_asv, const TandemCostModel& cost) {
    cost.validate();
    const CmPrep prep = prepare_cm(cm);
    return tandem_cost_value(cm_rates(prep.bona, prep.spoof, tau_cm),
                             asv_operating_point(asv, tau_asv), cost);
}

double tdcf_unconstrained_normalized(const TrialScoreSet& cm, const TrialScoreSet& asv,
                                     double tau_cm, double tau_asv,
                                     const TandemCostModel& cost) {
    cost.validate();
    const double denom = cost.default_tandem_cost();
    if (!(denom > 0.0)) fail(Errc::zero_default_cost, "default tandem cost is not positive");
    return tdcf_unconstrained(cm, asv, tau_cm, tau_asv, cost) / denom;
}

MinTandemPoint min_tdcf_unconstrained_normalized(const TrialScoreSet& cm,
                                                 const TrialScoreSet& asv,
                                                 const TandemCostModel& cost) {
    cost.validate();
    const double denom = cost.default_tandem_cost();
    if (!(denom > 0.0)) fail(Errc::zero_default_cost, "default tandem cost is not positive");

    const CmPrep cmp = prepare_cm(cm);
    const auto tar = sorted_scores(asv, {TrialClass::target});
    const auto non = sorted_scores(asv, {TrialClass::nontarget});
    const auto spf = sorted_scores(asv, {TrialClass::spoof});
    require_scores(tar, "target", Errc::empty_class);
    require_scores(non, "nontarget", Errc::empty_class);
    require_scores(spf, "spoof", Errc::missing_spoof_trials);
    std::vector<double> asv_all;
    asv_all.insert(asv_all.end(), tar.begin(), tar.end());
    asv_all.insert(asv_all.end(), non.begin(), non.end());
    asv_all.insert(asv_all.end(), spf.begin(), spf.end());
    const std::vector<double> asv_taus = sweep_thresholds(asv_all);

    std::vector<AsvOperatingPoint> asv_points;
    asv_points.reserve(asv_taus.size());
    for (double t : asv_taus)
        asv_points.push_back(
            {t, frac_below(tar, t), frac_at_or_above(non, t), frac_at_or_above(spf, t)});

    MinTandemPoint best{kInf, 0.0, 0.0};
    for (double tc : cmp.taus) {
        const CmRates r = cm_rates(cmp.bona, cmp.spoof, tc);
        for (const auto& ap : asv_points) {
            const double v = tandem_cost_value(r, ap, cost);
            if (v < best.value) best = {v, tc, ap.tau};
        }
    }
    best.value /= denom;
    return best;
}

ConstrainedCoefficients tdcf_constrained_coefficients(const AsvOperatingPoint& op,
                                                      const TandemCostModel& cost) {
    ConstrainedCoefficients c;
    c.c0 = cost.pi_tar * cost.c_miss * op.p_miss + cost.pi_non * cost.c_fa * op.p_fa;
    c.c1 = cost.pi_tar * cost.c_miss -
           (cost.pi_tar * cost.c_miss * op.p_miss + cost.pi_non * cost.c_fa * op.p_fa);
    c.c1_source_variant =
        cost.pi_tar * cost.c_miss -
        (cost.pi_tar * cost.c_miss * op.p_miss - cost.pi_non * cost.c_fa * op.p_fa);
    c.c2 = cost.pi_spoof * cost.c_fa_spoof * op.p_fa_spoof;
    c.c1_negative = c.c1 < 0.0;
    return c;
}

double tdcf_asv_constrained(const TrialScoreSet& cm, const AsvOperatingPoint& op, double tau_cm,
                            const TandemCostModel& cost) {
    cost.validate();
    const CmPrep prep = prepare_cm(cm);
    const CmRates r = cm_rates(prep.bona, prep.spoof, tau_cm);
    const ConstrainedCoefficients c = tdcf_constrained_coefficients(op, cost);
    return c.c0 + c.c1 * r.p_miss + c.c2 * r.p_fa;
}

double tdcf_asv_constrained_normalized(const TrialScoreSet& cm, const AsvOperatingPoint& op,
                                       double tau_cm, const TandemCostModel& cost) {
    cost.validate();
    const ConstrainedCoefficients c = tdcf_constrained_coefficients(op, cost);
    const double denom = c.c0 + std::min(c.c1, c.c2);
    if (!(denom > 0.0))
        fail(Errc::zero_default_cost, "constrained default cost is not positive");
    return tdcf_asv_constrained(cm, op, tau_cm, cost) / denom;
}

SweepPoint min_tdcf_asv_constrained_normalized(const TrialScoreSet& cm,
                                               const AsvOperatingPoint& op,
                                               const TandemCostModel& cost) {
    cost.validate();
    const ConstrainedCoefficients c = tdcf_constrained_coefficients(op, cost);
    const double denom = c.c0 + std::min(c.c1, c.c2);
    if (!(denom > 0.0))
        fail(Errc::zero_default_cost, "constrained default cost is not positive");

    const CmPrep prep = prepare_cm(cm);
    SweepPoint best{kInf, 0.0};
    for (double tau : prep.taus) {
        const CmRates r = cm_rates(prep.bona, prep.spoof, tau);
        const double v = c.c0 + c.c1 * r.p_miss + c.c2 * r.p_fa;
        if (v < best.value) best = {v, tau};
    }
    best.value /= denom;
    return best;
}

TrialScoreSet gate_tandem(const TandemScoreSet& tandem, double tau_cm) {
    TrialScoreSet out;
    out.entries.reserve(tandem.entries.size());
    for (const auto& t : tandem.entries)
        out.entries.push_back(
            {t.trial_id, t.gender, t.cls, t.s_cm >= tau_cm ? t.s_asv : -kInf});
    return out;
}

double adcf(const TrialScoreSet& scores, double tau, const TandemCostModel& cost) {
    cost.validate();
    const auto tar = sorted_scores(scores, {TrialClass::target});
    const auto non = sorted_scores(scores, {TrialClass::nontarget});
    const auto spf = sorted_scores(scores, {TrialClass::spoof});
    require_scores(tar, "target", Errc::empty_class);
    require_scores(non, "nontarget", Errc::empty_class);
    require_scores(spf, "spoof", Errc::missing_spoof_trials);
    return cost.c_miss * cost.pi_tar * frac_below(tar, tau) +
           cost.c_fa * cost.pi_non * frac_at_or_above(non, tau) +
           cost.c_fa_spoof * cost.pi_spoof * frac_at_or_above(spf, tau);
}

double adcf_normalized(const TrialScoreSet& scores, double tau, const TandemCostModel& cost) {
    const double denom = cost.default_tandem_cost();
    if (!(denom > 0.0)) fail(Errc::zero_default_cost, "default tandem cost is not positive");
    return adcf(scores, tau, cost) / denom;
}

MinTandemPoint min_adcf_normalized(const TandemScoreSet& tandem, const TandemCostModel& cost) {
    cost.validate();
    const double denom = cost.default_tandem_cost();
    if (!(denom > 0.0)) fail(Errc::zero_default_cost, "default tandem cost is not positive");
    if (tandem.entries.empty()) fail(Errc::empty_input, "empty tandem score set");

    std::vector<double> cm_scores;
    cm_scores.reserve(tandem.entries.size());
    for (const auto& t : tandem.entries) cm_scores.push_back(t.s_cm);
    const std::vector<double> cm_taus = sweep_thresholds(cm_scores);

    MinTandemPoint best{kInf, 0.0, 0.0};
    for (double tc : cm_taus) {
        std::vector<double> tar, non, spf, all;
        for (const auto& t : tandem.entries) {
            const double s = t.s_cm >= tc ? t.s_asv : -kInf;
            all.push_back(s);
            switch (t.cls) {
                case TrialClass::target: tar.push_back(s); break;
                case TrialClass::nontarget: non.push_back(s); break;
                case TrialClass::spoof: spf.push_back(s); break;
            }
        }
        require_scores(tar, "target", Errc::empty_class);
        require_scores(non, "nontarget", Errc::empty_class);
        require_scores(spf, "spoof", Errc::missing_spoof_trials);
        std::sort(tar.begin(), tar.end());
        std::sort(non.begin(), non.end());
        std::sort(spf.begin(), spf.end());
        for (double tau : sweep_thresholds(all)) {
            const double v = cost.c_miss * cost.pi_tar * frac_below(tar, tau) +
                             cost.c_fa * cost.pi_non * frac_at_or_above(non, tau) +
                             cost.c_fa_spoof * cost.pi_spoof * frac_at_or_above(spf, tau);
            if (v < best.value) best = {v, tc, tau};
        }
    }
    best.value /= denom;
    return best;
}

TandemScoreSet join_tandem(const TrialScoreSet& cm, const TrialScoreSet& asv) {
    std::map<std::string, const Trial*> by_id;
    for (const auto& t : asv.entries)
        if (!by_id.emplace(t.trial_id, &t).second)
            fail(Errc::unpaired_trials, "duplicate trial_id in verification scores: " + t.trial_id);

    TandemScoreSet out;
    out.entries.reserve(cm.entries.size());
    std::size_t matched = 0;
    std::map<std::string, bool> seen_cm;
    for (const auto& t : cm.entries) {
        if (!seen_cm.emplace(t.trial_id, true).second)
            fail(Errc::unpaired_trials, "duplicate trial_id in countermeasure scores: " + t.trial_id);
        const auto it = by_id.find(t.trial_id);
        if (it == by_id.end())
            fail(Errc::unpaired_trials, "trial " + t.trial_id + " has no verification score");
        const Trial& a = *it->second;
        if (a.cls != t.cls || a.gender != t.gender)
            fail(Errc::unpaired_trials, "trial " + t.trial_id + " labeled inconsistently");
        out.entries.push_back({t.trial_id, t.gender, t.cls, t.score, a.score});
        ++matched;
    }
    if (matched != asv.entries.size())
        fail(Errc::unpaired_trials, "verification scores contain unmatched trials");
    return out;
}

TrialScoreSet filter_gender(const TrialScoreSet& scores, char gender) {
    TrialScoreSet out;
    for (const auto& t : scores.entries)
        if (t.gender == gender) out.entries.push_back(t);
    return out;
}

TandemScoreSet filter_gender(const TandemScoreSet& scores, char gender) {
    TandemScoreSet out;
    for (const auto& t : scores.entries)
        if (t.gender == gender) out.entries.push_back(t);
    return out;
}

namespace {

template <class SetT>
std::vector<std::vector<std::size_t>> make_strata(const SetT& set, bool stratified) {
    std::vector<std::vector<std::size_t>> strata;
    if (stratified) {
        for (TrialClass c : {TrialClass::target, TrialClass::nontarget, TrialClass::spoof}) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < set.entries.size(); ++i)
                if (set.entries[i].cls == c) idx.push_back(i);
            if (!idx.empty()) strata.push_back(std::move(idx));
        }
    } else {
        std::vector<std::size_t> idx(set.entries.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        strata.push_back(std::move(idx));
    }
    return strata;
}

}  // namespace

template <class SetT>
MetricEstimate bootstrap_ci(const SetT& set, const std::function<double(const SetT&)>& statistic,
                            int m, double alpha_percent, std::uint64_t seed, bool stratified) {
    if (m < 100) fail(Errc::bad_argument, "bootstrap needs at least 100 iterations");
    if (!(alpha_percent > 0.0 && alpha_percent < 100.0))
        fail(Errc::bad_alpha, "alpha must lie in (0, 100)");
    const int k = static_cast<int>(std::floor(static_cast<double>(m) * alpha_percent / 200.0));
    if (k < 1) fail(Errc::bad_alpha, "alpha too small for the iteration count");
    if (set.entries.empty()) fail(Errc::empty_input, "empty score set");

    MetricEstimate est;
    est.value = statistic(set);
    est.n_bootstrap = m;
    est.alpha_percent = alpha_percent;

    const auto strata = make_strata(set, stratified);
    std::vector<double> stats(static_cast<std::size_t>(m));
    SetT resample;
    for (int it = 0; it < m; ++it) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(it)));
        resample.entries.clear();
        for (const auto& stratum : strata)
            for (std::size_t draw = 0; draw < stratum.size(); ++draw)
                resample.entries.push_back(
                    set.entries[stratum[rng() % stratum.size()]]);
        try {
            stats[static_cast<std::size_t>(it)] = statistic(resample);
        } catch (const SasvError& e) {
            if (!stratified)
                fail(Errc::statistic_undefined_on_resample,
                     std::string("statistic failed on resample: ") + e.what());
            throw;
        }
    }
    std::sort(stats.begin(), stats.end());
    est.ci_low = stats[static_cast<std::size_t>(k - 1)];
    est.ci_high = stats[static_cast<std::size_t>(m - k)];
    return est;
}

template MetricEstimate bootstrap_ci<TrialScoreSet>(
    const TrialScoreSet&, const std::function<double(const TrialScoreSet&)>&, int, double,
    std::uint64_t, bool);
template MetricEstimate bootstrap_ci<TandemScoreSet>(
    const TandemScoreSet&, const std::function<double(const TandemScoreSet&)>&, int, double,
    std::uint64_t, bool);

namespace {

struct ScoreLine {
    std::string trial_id;
    char gender;
    TrialClass cls;
    std::vector<double> values;
};

ScoreLine parse_score_line(const std::string& line, std::size_t line_no,
                           const std::filesystem::path& path, std::size_t n_values) {
    std::istringstream in(line);
    std::string id, gender, cls;
    if (!(in >> id >> gender >> cls))
        fail(Errc::io_error,
             "malformed score line " + std::to_string(line_no) + " in " + path.string());
    if (gender.size() != 1 || (gender[0] != 'm' && gender[0] != 'f' && gender[0] != '-'))
        fail(Errc::io_error, "bad gender field at line " + std::to_string(line_no) + " in " +
                                 path.string());
    ScoreLine out{id, gender[0], trial_class_from_string(cls), {}};
    for (std::size_t i = 0; i < n_values; ++i) {
        double v;
        if (!(in >> v) || !std::isfinite(v))
            fail(Errc::io_error, "bad score at line " + std::to_string(line_no) + " in " +
                                     path.string());
        out.values.push_back(v);
    }
    std::string extra;
    if (in >> extra)
        fail(Errc::io_error, "trailing fields at line " + std::to_string(line_no) + " in " +
                                 path.string());
    return out;
}

bool skip_line(const std::string& line) {
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) return c == '#';
    return true;
}

}  // namespace

TrialScoreSet read_score_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open: " + path.string());
    TrialScoreSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        const ScoreLine s = parse_score_line(line, line_no, path, 1);
        set.entries.push_back({s.trial_id, s.gender, s.cls, s.values[0]});
    }
    if (set.entries.empty()) fail(Errc::io_error, "no trials in " + path.string());
    check_finite_scores(set, path);
    return set;
}

void write_score_file(const TrialScoreSet& scores, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::io_error, "cannot open for writing: " + path.string());
    for (const auto& t : scores.entries)
        out << t.trial_id << ' ' << t.gender << ' ' << to_string(t.cls) << ' '
            << format_score(t.score) << '\n';
    if (!out) fail(Errc::io_error, "write failed: " + path.string());
}

TandemScoreSet read_tandem_score_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_error, "cannot open: " + path.string());
    TandemScoreSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        const ScoreLine s = parse_score_line(line, line_no, path, 2);
        set.entries.push_back({s.trial_id, s.gender, s.cls, s.values[0], s.values[1]});
    }
    if (set.entries.empty()) fail(Errc::io_error, "no trials in " + path.string());
    return set;
}

void write_tandem_score_file(const TandemScoreSet& scores, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::io_error, "cannot open for writing: " + path.string());
    for (const auto& t : scores.entries)
        out << t.trial_id << ' ' << t.gender << ' ' << to_string(t.cls) << ' '
            << format_score(t.s_cm) << ' ' << format_score(t.s_asv) << '\n';
    if (!out) fail(Errc::io_error, "write failed: " + path.string());
}

}  // namespace sasv
