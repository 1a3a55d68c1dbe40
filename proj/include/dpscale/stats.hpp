#pragma once

#include <span>

namespace dpscale {

/// Median; the mean of the two middle values for even counts. Empty input
/// throws Error(Domain).
double median(std::span<const double> values);

double mean_of(std::span<const double> values);

/// Population standard deviation around the given mean.
double stddev_of(std::span<const double> values, double mean);

/// Linearly interpolated percentile, q in [0, 100].
double percentile(std::span<const double> values, double q);

}  // namespace dpscale
