#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sasv/common.hpp"

namespace sasv {

enum class TrialClass { target, nontarget, spoof };

std::string_view to_string(TrialClass c);
TrialClass trial_class_from_string(std::string_view s);

struct Trial {
    std::string trial_id;
    char gender = '-';  // 'm', 'f', or '-'
    TrialClass cls = TrialClass::target;
    double score = 0.0;
};

struct TrialScoreSet {
    std::vector<Trial> entries;

    std::size_t count_of(TrialClass c) const;
    std::vector<double> scores_of(std::initializer_list<TrialClass> classes) const;
};

/// Per-trial paired countermeasure and verification scores.
struct TandemTrial {
    std::string trial_id;
    char gender = '-';
    TrialClass cls = TrialClass::target;
    double s_cm = 0.0;
    double s_asv = 0.0;
};

struct TandemScoreSet {
    std::vector<TandemTrial> entries;
};

/// Priors and costs of the tandem detection cost. Defaults follow the
/// ASVspoof2019 LA evaluation protocol.
struct TandemCostModel {
    double c_miss = 1.0;
    double c_fa = 10.0;
    double c_fa_spoof = 10.0;
    double pi_tar = 0.9405;
    double pi_non = 0.0095;
    double pi_spoof = 0.05;

    void validate() const;

    /// Cost of the better of the two trivial systems (accept-all vs
    /// reject-all); the normalizer of the unconstrained tandem cost and of
    /// the gated-score cost.
    double default_tandem_cost() const;
};

struct MetricEstimate {
    double value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_bootstrap = 0;
    double alpha_percent = 0.0;
};

struct ErrorRates {
    double p_miss = 0.0;
    double p_fa = 0.0;
};

/// Accept rule is score >= tau throughout; ties accept.
/// p_miss = fraction of positive-class scores below tau, p_fa = fraction of
/// negative-class scores at or above tau.
ErrorRates error_rates(const TrialScoreSet& scores, double tau,
                       std::initializer_list<TrialClass> positive,
                       std::initializer_list<TrialClass> negative);

/// Same, with the negative classes defaulting to the complement of the
/// positive set.
ErrorRates error_rates(const TrialScoreSet& scores, double tau,
                       std::initializer_list<TrialClass> positive);

/// Candidate thresholds for a sweep: midpoints between consecutive distinct
/// scores plus -inf/+inf sentinels. Infinite scores get a finite separator
/// instead of a midpoint.
std::vector<double> sweep_thresholds(std::span<const double> scores);

struct SweepPoint {
    double value = 0.0;
    double tau = 0.0;
};

/// Threshold where miss and false-alarm rates cross, searched over the
/// midpoint sweep; ties broken toward the smaller threshold. Returns
/// (p_miss + p_fa)/2 at that threshold.
SweepPoint eer(const TrialScoreSet& scores, std::initializer_list<TrialClass> positive,
               std::initializer_list<TrialClass> negative);

/// Verification-style EER: target vs nontarget.
SweepPoint eer_asv(const TrialScoreSet& scores);
/// Countermeasure EER: bona fide (target+nontarget) vs spoof.
SweepPoint eer_cm(const TrialScoreSet& scores);

/// Spoofing-free weighted cost: c_miss*pi_tar*p_miss + c_fa*(1-pi_tar)*p_fa,
/// target vs nontarget.
double dcf(const TrialScoreSet& scores, double tau, const TandemCostModel& cost);
SweepPoint min_dcf(const TrialScoreSet& scores, const TandemCostModel& cost);
/// Cost of the better trivial system under the same weighting.
double dcf_default(const TandemCostModel& cost);

/// Independent error rates of the verification system at one threshold,
/// computed per class over the whole set.
struct AsvOperatingPoint {
    double tau = 0.0;
    double p_miss = 0.0;      // targets below tau
    double p_fa = 0.0;        // nontargets at or above tau
    double p_fa_spoof = 0.0;  // spoof trials at or above tau
};

AsvOperatingPoint asv_operating_point(const TrialScoreSet& asv, double tau);
/// Operating point with the threshold fixed where target/nontarget rates
/// cross.
AsvOperatingPoint asv_eer_operating_point(const TrialScoreSet& asv);

/// Tandem cost with both thresholds free: combines the four tandem event
/// probabilities (bona fide passing both, bona fide passing CM but faking
/// past ASV, spoof passing both, bona fide blocked by CM).
double tdcf_unconstrained(const TrialScoreSet& cm, const TrialScoreSet& asv, double tau_cm,
                          double tau_asv, const TandemCostModel& cost);
double tdcf_unconstrained_normalized(const TrialScoreSet& cm, const TrialScoreSet& asv,
                                     double tau_cm, double tau_asv,
                                     const TandemCostModel& cost);

struct MinTandemPoint {
    double value = 0.0;
    double tau_cm = 0.0;
    double tau_asv = 0.0;
};

MinTandemPoint min_tdcf_unconstrained_normalized(const TrialScoreSet& cm,
                                                 const TrialScoreSet& asv,
                                                 const TandemCostModel& cost);

/// Linear-in-CM-rates form of the tandem cost with the ASV operating point
/// frozen: C0 + C1*p_miss_cm + C2*p_fa_cm.
///
/// c1 is derived so the linear form equals the two-threshold cost exactly.
/// c1_source_variant is the published variant with the opposite sign on the
/// false-alarm term; it is carried for discrepancy reporting only.
struct ConstrainedCoefficients {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c1_source_variant = 0.0;
    bool c1_negative = false;
};

ConstrainedCoefficients tdcf_constrained_coefficients(const AsvOperatingPoint& op,
                                                      const TandemCostModel& cost);

double tdcf_asv_constrained(const TrialScoreSet& cm, const AsvOperatingPoint& op, double tau_cm,
                            const TandemCostModel& cost);
/// Normalized by the better trivial CM under the frozen ASV: c0 + min(c1, c2).
double tdcf_asv_constrained_normalized(const TrialScoreSet& cm, const AsvOperatingPoint& op,
                                       double tau_cm, const TandemCostModel& cost);
SweepPoint min_tdcf_asv_constrained_normalized(const TrialScoreSet& cm,
                                               const AsvOperatingPoint& op,
                                               const TandemCostModel& cost);

/// Gating: keep s_asv when s_cm >= tau_cm, else -inf.
TrialScoreSet gate_tandem(const TandemScoreSet& tandem, double tau_cm);

/// Spoofing-aware single-threshold cost on (possibly gated) scores:
/// c_miss*pi_tar*p_miss + c_fa*pi_non*p_fa_non + c_fa_spoof*pi_spoof*p_fa_spoof.
double adcf(const TrialScoreSet& scores, double tau, const TandemCostModel& cost);
double adcf_normalized(const TrialScoreSet& scores, double tau, const TandemCostModel& cost);

MinTandemPoint min_adcf_normalized(const TandemScoreSet& tandem, const TandemCostModel& cost);

/// Joins two score sets on trial_id; class labels and genders must agree.
TandemScoreSet join_tandem(const TrialScoreSet& cm, const TrialScoreSet& asv);

TrialScoreSet filter_gender(const TrialScoreSet& scores, char gender);
TandemScoreSet filter_gender(const TandemScoreSet& scores, char gender);

/// Percentile bootstrap: point value on the full set, CI from m class-wise
/// resamples, [alpha/2, 100-alpha/2] percentiles as order statistics
/// floor(m*alpha/200) in from each end. Deterministic in seed.
template <class SetT>
MetricEstimate bootstrap_ci(const SetT& set, const std::function<double(const SetT&)>& statistic,
                            int m, double alpha_percent, std::uint64_t seed,
                            bool stratified = true);

extern template MetricEstimate bootstrap_ci<TrialScoreSet>(
    const TrialScoreSet&, const std::function<double(const TrialScoreSet&)>&, int, double,
    std::uint64_t, bool);
extern template MetricEstimate bootstrap_ci<TandemScoreSet>(
    const TandemScoreSet&, const std::function<double(const TandemScoreSet&)>&, int, double,
    std::uint64_t, bool);

/// Text score files, one trial per line:
///   trial_id gender(m/f/-) class(target/nontarget/spoof) score
/// Tandem files carry two scores: s_cm then s_asv.
TrialScoreSet read_score_file(const std::filesystem::path& path);
void write_score_file(const TrialScoreSet& scores, const std::filesystem::path& path);
TandemScoreSet read_tandem_score_file(const std::filesystem::path& path);
void write_tandem_score_file(const TandemScoreSet& scores, const std::filesystem::path& path);

}  // namespace sasv
