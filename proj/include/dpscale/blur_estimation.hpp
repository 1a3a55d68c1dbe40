#pragma once

#include <span>
#include <vector>

#include "dpscale/image.hpp"
#include "dpscale/psf.hpp"
#include "dpscale/view.hpp"

namespace dpscale {

/// Per-patch blur estimate produced by the cross-view grid search.
struct BlurEstimate {
    double radius_px = 0.0;
    /// Frobenius residual at the minimizer.
    double loss = 0.0;
    /// Residual at the minimizer divided by the median residual over all
    /// candidates. Near 0 for a sharp minimum, near 1 for a flat curve.
    double relative_loss = 1.0;
    int patch_id = -1;
    int view_id = -1;

    bool operator==(const BlurEstimate&) const = default;
};

/// Signed radii -r_max .. r_max at the given step, sorted ascending.
std::vector<double> blur_candidates(double r_max, double step);

/// min(15, m / 4).
double default_max_radius(int patch_size);

/// Grid search over precomputed candidate kernels. Construct once per
/// candidate list and reuse across patches; estimate() is const and
/// thread-safe.
class BlurEstimator {
public:
    explicit BlurEstimator(std::vector<double> candidates);

    /// Candidate r minimizing ||G_l * H_r(r) - G_r * flip(H_r(r))||_F on the
    /// region valid for every candidate. Ties go to the smaller |r|.
    /// Throws Error(DegeneratePatch) for constant patches and
    /// Error(Dimension) for mismatched or too-small patches.
    BlurEstimate estimate(const Image& left, const Image& right) const;

    /// Loss for every candidate, in candidate order.
    std::vector<double> loss_curve(const Image& left, const Image& right) const;

    const std::vector<double>& candidates() const noexcept { return candidates_; }

private:
    std::vector<double> candidates_;
    std::vector<PsfKernel> right_kernels_;
    std::vector<PsfKernel> left_kernels_;
    int max_side_ = 1;
};

BlurEstimate estimate_patch_blur(const Image& left, const Image& right,
                                 std::span<const double> candidates);

struct PatchRecord {
    int id = 0;
    int x = 0;  // top-left corner in the image
    int y = 0;
    double texture = 0.0;              // mean gradient magnitude of the left view
    double depth_median = 0.0;         // median of valid depth pixels
    double finite_fraction = 0.0;      // share of valid depth pixels
    double inverse_depth_spread = 0.0; // std / mean of 1/z over valid pixels
    bool valid = false;
};

struct PatchGridOptions {
    double min_finite_fraction = 0.9;
    double max_inverse_depth_spread = 0.05;
    /// Absolute floor on the texture score (intensity units per pixel).
    double texture_floor = 1e-3;
    /// Patches below this percentile of the view's texture scores are
    /// rejected. 0 disables the relative test.
    double texture_percentile = 0.0;
};

struct PatchGrid {
    int patch_size = 0;
    int stride = 0;
    std::vector<PatchRecord> patches;

    int valid_count() const;
};

/// Tiles the view with m x m patches at the given stride and flags the
/// patches whose depth is well defined and homogeneous and whose texture is
/// sufficient. A grid without valid patches is returned as-is.
PatchGrid build_patch_grid(const DpView& view, int patch_size, int stride,
                           const PatchGridOptions& options = {});

/// Top t_c percent of the valid patches ranked by ascending relative loss
/// (then raw loss, then id). At least two are returned.
/// Throws Error(InsufficientPatches) when fewer than two valid patches have
/// estimates.
std::vector<int> select_top_patches(const PatchGrid& grid, std::span<const BlurEstimate> estimates,
                                    double t_c);

}  // namespace dpscale
