#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace mrtnet {

inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) return std::nan("");
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, 0.5);
}

inline double iqr(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
}

inline double mean(std::span<const double> values) {
    double total = 0;
    for (double v : values) total += v;
    return values.empty() ? std::nan("") : total / static_cast<double>(values.size());
}

inline double sample_sd(std::span<const double> values) {
    if (values.size() < 2) return std::nan("");
    const double m = mean(values);
    double ss = 0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

/// Standard error of the sample mean.
inline double standard_error(std::span<const double> values) {
    return sample_sd(values) / std::sqrt(static_cast<double>(values.size()));
}

} // namespace mrtnet
