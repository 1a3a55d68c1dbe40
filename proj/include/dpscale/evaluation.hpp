#pragma once

#include <span>
#include <string>
#include <vector>

namespace dpscale {

/// r_s = s_est / s_gt. Throws Error(Domain) for s_gt <= 0.
double scale_ratio(double s_est, double s_gt);

/// e_s = mean |1 - r_s|. Throws Error(Domain) for an empty list.
double average_error(std::span<const double> ratios);

/// Rounds to three decimals, the precision used in printed tables.
double round3(double value);

struct ScaleEntry {
    std::string scene;
    std::string lens;
    std::string aperture;
    std::string stage;  // "initial" or "optim"
    double s_est = 0.0;
    double s_gt = 0.0;
    double ratio = 0.0;
};

struct ScaleReport {
    std::vector<ScaleEntry> entries;
    double average_error = 0.0;
    int count = 0;
};

/// Fills ratios and the aggregate for every entry with a positive estimate;
/// entries whose estimate is not positive are kept with ratio 0 and left
/// out of the aggregate.
ScaleReport summarize(std::vector<ScaleEntry> entries);

}  // namespace dpscale
