#include "dpscale/blur_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "dpscale/error.hpp"
#include "dpscale/stats.hpp"

namespace dpscale {
namespace {

bool is_constant(const Image& patch) {
    const auto px = patch.pixels();
    if (px.empty()) return true;
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    return !(*hi - *lo > 1e-12 * std::max(1.0, std::abs(*hi)));
}

double frobenius_window(const Image& a, const Image& b, int offset, int size) {
    double total = 0.0;
    for (int y = 0; y < size; ++y) {
        const double* ra = a.row(y + offset).data() + offset;
        const double* rb = b.row(y + offset).data() + offset;
        for (int x = 0; x < size; ++x) {
            const double d = ra[x] - rb[x];
            total += d * d;
        }
    }
    return std::sqrt(total);
}

double texture_score(const Image& channel, int x0, int y0, int m) {
    double total = 0.0;
    int count = 0;
    for (int y = y0 + 1; y < y0 + m - 1; ++y) {
        for (int x = x0 + 1; x < x0 + m - 1; ++x) {
            const double gx = 0.5 * (channel(x + 1, y) - channel(x - 1, y));
            const double gy = 0.5 * (channel(x, y + 1) - channel(x, y - 1));
            total += std::sqrt(gx * gx + gy * gy);
            ++count;
        }
    }
    return count > 0 ? total / count : 0.0;
}

}  // namespace

std::vector<double> blur_candidates(double r_max, double step) {
    if (!(r_max >= 0.0) || !(step > 0.0) || !std::isfinite(r_max) || !std::isfinite(step)) {
        throw Error(ErrorCode::Domain, "blur search range needs r_max >= 0 and step > 0");
    }
    const int n = static_cast<int>(std::floor(r_max / step + 1e-9));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(2 * n + 1));
    for (int i = -n; i <= n; ++i) out.push_back(i * step);
    return out;
}

double default_max_radius(int patch_size) {
    return std::min(15.0, patch_size / 4.0);
}

BlurEstimator::BlurEstimator(std::vector<double> candidates) : candidates_(std::move(candidates)) {
    if (candidates_.empty()) throw Error(ErrorCode::Domain, "blur candidate list is empty");
    if (!std::is_sorted(candidates_.begin(), candidates_.end())) {
        throw Error(ErrorCode::Domain, "blur candidates must be sorted");
    }
    right_kernels_.reserve(candidates_.size());
    left_kernels_.reserve(candidates_.size());
    for (double r : candidates_) {
        right_kernels_.push_back(right_psf(r));
        left_kernels_.push_back(flip_h(right_kernels_.back()));
        max_side_ = std::max(max_side_, right_kernels_.back().side());
    }
}

std::vector<double> BlurEstimator::loss_curve(const Image& left, const Image& right) const {
    if (left.width() != right.width() || left.height() != right.height()) {
        throw Error(ErrorCode::Dimension, "left and right patches differ in size");
    }
    if (max_side_ > std::min(left.width(), left.height())) {
        throw Error(ErrorCode::Dimension, "largest candidate kernel does not fit the patch");
    }
    if (is_constant(left) || is_constant(right)) {
        throw Error(ErrorCode::DegeneratePatch, "constant patch carries no blur information");
    }
    // Every candidate is scored on the window valid for the largest kernel.
    const int common = std::min(left.width(), left.height()) - max_side_ + 1;
    const RowPrefixSums left_sums(left);
    const RowPrefixSums right_sums(right);
    std::vector<double> losses(candidates_.size());
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
        const Image a = convolve(left_sums, right_kernels_[i]);
        const Image b = convolve(right_sums, left_kernels_[i]);
        const int offset = (max_side_ - right_kernels_[i].side()) / 2;
        losses[i] = frobenius_window(a, b, offset, common);
    }
    return losses;
}

BlurEstimate BlurEstimator::estimate(const Image& left, const Image& right) const {
    const std::vector<double> losses = loss_curve(left, right);
    std::size_t best = 0;
    for (std::size_t i = 1; i < losses.size(); ++i) {
        const double ri = std::abs(candidates_[i]);
        const double rb = std::abs(candidates_[best]);
        if (losses[i] < losses[best] || (losses[i] == losses[best] && ri < rb)) best = i;
    }
    BlurEstimate out;
    out.radius_px = candidates_[best];
    out.loss = losses[best];
    const double typical = median(losses);
    out.relative_loss = typical > 0.0 ? losses[best] / typical : 1.0;
    return out;
}

BlurEstimate estimate_patch_blur(const Image& left, const Image& right,
                                 std::span<const double> candidates) {
    return BlurEstimator(std::vector<double>(candidates.begin(), candidates.end()))
        .estimate(left, right);
}

int PatchGrid::valid_count() const {
    return static_cast<int>(std::count_if(patches.begin(), patches.end(),
                                          [](const PatchRecord& p) { return p.valid; }));
}

PatchGrid build_patch_grid(const DpView& view, int patch_size, int stride,
                           const PatchGridOptions& options) {
    validate_view(view);
    if (patch_size < 8 || stride < 1) {
        throw Error(ErrorCode::Domain, "patch size must be >= 8 and stride >= 1");
    }
    const int width = view.left.width();
    const int height = view.left.height();
    if (patch_size > std::min(width, height)) {
        throw Error(ErrorCode::Dimension, "patch size " + std::to_string(patch_size) +
                                              " exceeds the image of view " + view.view_id);
    }
    const Image& texture_channel = view.left.estimation_channel();

    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.stride = stride;
    std::vector<double> depths;
    std::vector<double> inverse;
    for (int y0 = 0; y0 + patch_size <= height; y0 += stride) {
        for (int x0 = 0; x0 + patch_size <= width; x0 += stride) {
            PatchRecord rec;
            rec.id = static_cast<int>(grid.patches.size());
            rec.x = x0;
            rec.y = y0;
            rec.texture = texture_score(texture_channel, x0, y0, patch_size);

            depths.clear();
            for (int y = y0; y < y0 + patch_size; ++y) {
                for (int x = x0; x < x0 + patch_size; ++x) {
                    const double z = view.depth(x, y);
                    if (std::isfinite(z) && z > 0.0) depths.push_back(z);
                }
            }
            rec.finite_fraction =
                static_cast<double>(depths.size()) / (static_cast<double>(patch_size) * patch_size);
            if (!depths.empty()) {
                inverse.resize(depths.size());
                std::transform(depths.begin(), depths.end(), inverse.begin(),
                               [](double z) { return 1.0 / z; });
                rec.depth_median = median(depths);
                const double mean = mean_of(inverse);
                rec.inverse_depth_spread = stddev_of(inverse, mean) / mean;
            } else {
                rec.inverse_depth_spread = std::numeric_limits<double>::infinity();
            }
            rec.valid = rec.finite_fraction >= options.min_finite_fraction &&
                        rec.inverse_depth_spread < options.max_inverse_depth_spread &&
                        rec.texture >= options.texture_floor;
            grid.patches.push_back(rec);
        }
    }

    if (options.texture_percentile > 0.0 && !grid.patches.empty()) {
        std::vector<double> scores;
        scores.reserve(grid.patches.size());
        for (const auto& p : grid.patches) scores.push_back(p.texture);
        const double cutoff = percentile(scores, options.texture_percentile);
        for (auto& p : grid.patches) {
            if (p.texture < cutoff) p.valid = false;
        }
    }
    return grid;
}

std::vector<int> select_top_patches(const PatchGrid& grid, std::span<const BlurEstimate> estimates,
                                    double t_c) {
    if (!(t_c > 0.0) || t_c > 100.0) {
        throw Error(ErrorCode::Domain, "T_c must lie in (0, 100]");
    }
    std::map<int, bool> valid;
    for (const auto& p : grid.patches) valid[p.id] = p.valid;

    std::vector<const BlurEstimate*> ranked;
    for (const auto& e : estimates) {
        auto it = valid.find(e.patch_id);
        if (it != valid.end() && it->second) ranked.push_back(&e);
    }
    if (ranked.size() < 2) {
        throw Error(ErrorCode::InsufficientPatches,
                    "only " + std::to_string(ranked.size()) + " valid patch estimate(s)");
    }
    std::sort(ranked.begin(), ranked.end(), [](const BlurEstimate* a, const BlurEstimate* b) {
        if (a->relative_loss != b->relative_loss) return a->relative_loss < b->relative_loss;
        if (a->loss != b->loss) return a->loss < b->loss;
        return a->patch_id < b->patch_id;
    });
    const auto wanted = static_cast<std::size_t>(std::ceil(t_c / 100.0 * ranked.size() - 1e-9));
    const std::size_t count = std::min(ranked.size(), std::max<std::size_t>(2, wanted));
    std::vector<int> ids;
    ids.reserve(count);
    for (std::size_t i = 0; i < count; ++i) ids.push_back(ranked[i]->patch_id);
    return ids;
}

}  // namespace dpscale
