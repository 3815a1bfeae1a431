#include "sasv/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sasv {

namespace {

void check_pair(std::span<const double> p, std::span<const double> q) {
    if (p.empty() || q.empty()) fail(Errc::empty_input, "empty PMF passed to measure");
    if (p.size() != q.size())
        fail(Errc::bin_count_mismatch, "PMF lengths differ: " + std::to_string(p.size()) +
                                           " vs " + std::to_string(q.size()));
    KahanSum sp, sq;
    for (std::size_t i = 0; i < p.size(); ++i) {
        sp.add(p[i]);
        sq.add(q[i]);
    }
    if (std::abs(sp.value() - 1.0) > 1e-6 || std::abs(sq.value() - 1.0) > 1e-6)
        fail(Errc::not_normalized, "PMF does not sum to 1 within 1e-6");
}

// Bins with p[i] == q[i] contribute exactly zero to every log-ratio measure,
// which makes smoothed-from-zero bins free to skip.
double kl_divergence(std::span<const double> p, std::span<const double> q) {
    KahanSum sum;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == q[i] || p[i] == 0.0) continue;
        if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
        sum.add(p[i] * std::log(p[i] / q[i]));
    }
    return sum.value();
}

// (p-q)*(log p - log q): both factors negate exactly under argument swap, so
// the per-bin product, and with it the whole sum, is bit-symmetric.
double symmetric_kl(std::span<const double> p, std::span<const double> q) {
    KahanSum sum;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == q[i]) continue;
        if (p[i] == 0.0 || q[i] == 0.0) return std::numeric_limits<double>::infinity();
        sum.add((p[i] - q[i]) * (std::log(p[i]) - std::log(q[i])));
    }
    return sum.value();
}

double jensen_shannon(std::span<const double> p, std::span<const double> q) {
    KahanSum sum;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == q[i]) continue;
        const double m = 0.5 * (p[i] + q[i]);
        // One accumulator call per bin keeps the summation order, and with it
        // the result, identical under argument swap.
        double term = 0.0;
        if (p[i] > 0.0) term += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) term += 0.5 * q[i] * std::log(q[i] / m);
        sum.add(term);
    }
    return sum.value();
}

// Half-sum-of-squares form of 1 - sum(sqrt(p q)). Equal for normalized
// inputs, but identical bins contribute exactly zero here, so d(p, p) == 0
// instead of the square root of the normalization residue.
double hellinger(std::span<const double> p, std::span<const double> q) {
    KahanSum sum;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == q[i]) continue;
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        sum.add(d * d);
    }
    return std::sqrt(std::clamp(0.5 * sum.value(), 0.0, 1.0));
}

double intersection(std::span<const double> p, std::span<const double> q) {
    KahanSum sum;
    for (std::size_t i = 0; i < p.size(); ++i) sum.add(std::min(p[i], q[i]));
    return sum.value();
}

double normalized_cross_correlation(std::span<const double> p, std::span<const double> q) {
    const double n = static_cast<double>(p.size());
    KahanSum sp, sq;
    for (std::size_t i = 0; i < p.size(); ++i) {
        sp.add(p[i]);
        sq.add(q[i]);
    }
    const double mp = sp.value() / n;
    const double mq = sq.value() / n;
    KahanSum cov, vp, vq;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double dp = p[i] - mp;
        const double dq = q[i] - mq;
        cov.add(dp * dq);
        vp.add(dp * dp);
        vq.add(dq * dq);
    }
    // 1e-30 sits far above rounding noise of a constant vector and far below
    // the variance of any histogram with at least one differing count.
    constexpr double kDegenerate = 1e-30;
    const bool p_flat = vp.value() <= kDegenerate;
    const bool q_flat = vq.value() <= kDegenerate;
    if (p_flat && q_flat) return 1.0;
    if (p_flat || q_flat) return 0.0;
    return cov.value() / (std::sqrt(vp.value()) * std::sqrt(vq.value()));
}

double modified_kolmogorov_smirnov(std::span<const double> p, std::span<const double> q) {
    KahanSum cdf_diff;
    double best = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        cdf_diff.add(p[i] - q[i]);
        best = std::max(best, std::abs(cdf_diff.value()));
    }
    return best;
}

double quadratic_chi(std::span<const double> p, std::span<const double> q,
                     const QuadraticChiParams& qc) {
    if (qc.half_width < 0 || !(qc.sigma > 0.0))
        fail(Errc::bad_argument, "quadratic-chi window parameters must be positive");
    const std::size_t n = p.size();
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(qc.half_width), n - 1);

    std::vector<double> g(w + 1);
    for (std::size_t k = 0; k <= w; ++k)
        g[k] = std::exp(-static_cast<double>(k) * static_cast<double>(k) /
                        (2.0 * qc.sigma * qc.sigma));

    // Z = (p + q) convolved with the taper; the normalizer at each bin.
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = p[i] + q[i];
    std::vector<double> z(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = s[i];
        if (v == 0.0) continue;
        z[i] += v * g[0];
        const std::size_t lo = i < w ? i : w;
        for (std::size_t k = 1; k <= lo; ++k) z[i - k] += v * g[k];
        const std::size_t hi = std::min(w, n - 1 - i);
        for (std::size_t k = 1; k <= hi; ++k) z[i + k] += v * g[k];
    }

    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (p[i] != q[i] && z[i] > 0.0)
            d[i] = (p[i] - q[i]) / std::pow(z[i], qc.normalization_power);

    KahanSum total;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] == 0.0) continue;
        double conv = d[i] * g[0];
        const std::size_t lo = i < w ? i : w;
        for (std::size_t k = 1; k <= lo; ++k) conv += d[i - k] * g[k];
        const std::size_t hi = std::min(w, n - 1 - i);
        for (std::size_t k = 1; k <= hi; ++k) conv += d[i + k] * g[k];
        total.add(d[i] * conv);
    }
    return std::sqrt(std::max(0.0, total.value()));
}

}  // namespace

std::string_view measure_name(Measure m) {
    switch (m) {
        case Measure::quadratic_chi: return "quadratic_chi";
        case Measure::normalized_cross_correlation: return "normalized_cross_correlation";
        case Measure::hellinger: return "hellinger";
        case Measure::intersection: return "intersection";
        case Measure::kullback_leibler: return "kullback_leibler";
        case Measure::symmetric_kullback_leibler: return "symmetric_kullback_leibler";
        case Measure::jensen_shannon: return "jensen_shannon";
        case Measure::modified_kolmogorov_smirnov: return "modified_kolmogorov_smirnov";
    }
    fail(Errc::bad_argument, "unknown measure ordinal");
}

Measure measure_from_name(std::string_view name) {
    for (int i = 0; i < kMeasureCount; ++i) {
        const auto m = static_cast<Measure>(i);
        if (measure_name(m) == name) return m;
    }
    fail(Errc::bad_argument, "unknown measure name: " + std::string(name));
}

namespace {

double dispatch(Measure m, std::span<const double> p, std::span<const double> q,
                const QuadraticChiParams& qc) {
    switch (m) {
        case Measure::quadratic_chi: return quadratic_chi(p, q, qc);
        case Measure::normalized_cross_correlation: return normalized_cross_correlation(p, q);
        case Measure::hellinger: return hellinger(p, q);
        case Measure::intersection: return intersection(p, q);
        case Measure::kullback_leibler: return kl_divergence(p, q);
        case Measure::symmetric_kullback_leibler: return symmetric_kl(p, q);
        case Measure::jensen_shannon: return jensen_shannon(p, q);
        case Measure::modified_kolmogorov_smirnov: return modified_kolmogorov_smirnov(p, q);
    }
    fail(Errc::bad_argument, "unknown measure ordinal");
}

}  // namespace

double measure(Measure m, std::span<const double> p, std::span<const double> q,
               const QuadraticChiParams& qc) {
    check_pair(p, q);
    return dispatch(m, p, q, qc);
}

std::array<double, kMeasureCount> measure_all(std::span<const double> p,
                                              std::span<const double> q,
                                              const QuadraticChiParams& qc) {
    check_pair(p, q);
    std::array<double, kMeasureCount> out;
    for (int i = 0; i < kMeasureCount; ++i)
        out[static_cast<std::size_t>(i)] = dispatch(static_cast<Measure>(i), p, q, qc);
    return out;
}

}  // namespace sasv
