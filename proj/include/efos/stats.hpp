#pragma once

#include <span>
#include <vector>

namespace efos::stats {

/// Hyndman-Fan type 7 percentile (linear interpolation between order
/// statistics) of an ascending-sorted, non-empty sample. q in [0, 1].
double percentile_sorted(std::span<const double> sorted, double q);

/// Same as percentile_sorted on an unsorted copy.
double percentile(std::vector<double> values, double q);

double mean(std::span<const double> values);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace efos::stats
