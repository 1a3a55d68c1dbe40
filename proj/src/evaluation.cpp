#include "dpscale/evaluation.hpp"

#include <cmath>

#include "dpscale/error.hpp"

namespace dpscale {

double scale_ratio(double s_est, double s_gt) {
    if (!(s_gt > 0.0) || !std::isfinite(s_gt)) {
        throw Error(ErrorCode::Domain, "ground-truth scale must be positive");
    }
    return s_est / s_gt;
}

double average_error(std::span<const double> ratios) {
    if (ratios.empty()) throw Error(ErrorCode::Domain, "average error of an empty list");
    double total = 0.0;
    for (double r : ratios) total += std::abs(1.0 - r);
    return total / static_cast<double>(ratios.size());
}

double round3(double value) {
    return std::round(value * 1000.0) / 1000.0;
}

ScaleReport summarize(std::vector<ScaleEntry> entries) {
    ScaleReport report;
    std::vector<double> ratios;
    for (auto& e : entries) {
        if (e.s_est > 0.0 && std::isfinite(e.s_est)) {
            e.ratio = scale_ratio(e.s_est, e.s_gt);
            ratios.push_back(e.ratio);
        } else {
            e.ratio = 0.0;
        }
    }
    report.entries = std::move(entries);
    report.count = static_cast<int>(ratios.size());
    if (!ratios.empty()) report.average_error = average_error(ratios);
    return report;
}

}  // namespace dpscale
