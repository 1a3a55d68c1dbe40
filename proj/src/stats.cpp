#include "dpscale/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dpscale/error.hpp"

namespace dpscale {
namespace {

std::vector<double> sorted_copy(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::Domain, "statistic of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

double median(std::span<const double> values) {
    const auto v = sorted_copy(values);
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::Domain, "mean of an empty sample");
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

double stddev_of(std::span<const double> values, double mean) {
    if (values.empty()) throw Error(ErrorCode::Domain, "deviation of an empty sample");
    double total = 0.0;
    for (double v : values) total += (v - mean) * (v - mean);
    return std::sqrt(total / static_cast<double>(values.size()));
}

double percentile(std::span<const double> values, double q) {
    if (!(q >= 0.0 && q <= 100.0)) throw Error(ErrorCode::Domain, "percentile outside [0, 100]");
    const auto v = sorted_copy(values);
    const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace dpscale
