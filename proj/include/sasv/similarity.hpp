#pragma once

#include <array>
#include <span>
#include <string_view>

#include "sasv/common.hpp"

namespace sasv {

/// Histogram comparison measures, in the fixed ordinal order used by the
/// embedding layout. Some are distances (small = similar), others are
/// similarities (large = similar); the embedding consumes them as-is.
enum class Measure : int {
    quadratic_chi = 0,
    normalized_cross_correlation = 1,
    hellinger = 2,
    intersection = 3,
    kullback_leibler = 4,
    symmetric_kullback_leibler = 5,
    jensen_shannon = 6,
    modified_kolmogorov_smirnov = 7,
};

inline constexpr int kMeasureCount = 8;

std::string_view measure_name(Measure m);
Measure measure_from_name(std::string_view name);

/// Quadratic-chi similarity kernel: Gaussian taper over bin distance,
/// truncated at half_width bins, with the usual fractional normalization
/// exponent.
struct QuadraticChiParams {
    int half_width = 64;
    double sigma = 32.0;
    double normalization_power = 0.9;
};

/// Computes one measure between two PMFs of equal length. Conventions:
///  - Kullback-Leibler uses natural log with 0*log(0) := 0; a zero q bin
///    against a nonzero p bin yields +infinity, so smooth first when needed.
///  - Normalized cross-correlation is the Pearson correlation across bins;
///    two constant inputs give 1, exactly one constant input gives 0.
///  - Hellinger is clamped into [0, 1] against rounding.
double measure(Measure m, std::span<const double> p, std::span<const double> q,
               const QuadraticChiParams& qc = {});

/// All eight measures for one pair, in ordinal order.
std::array<double, kMeasureCount> measure_all(std::span<const double> p,
                                              std::span<const double> q,
                                              const QuadraticChiParams& qc = {});

}  // namespace sasv
