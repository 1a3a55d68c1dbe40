#pragma once

#include <vector>

#include "dpscale/image.hpp"

namespace dpscale {

class RowPrefixSums;

/// Binary disk mask on a side x side grid. Cell (x, y) is set iff
/// (x - cx)^2 + (y - cy)^2 <= r^2, coordinates relative to the grid center.
/// Throws Error(Dimension) if side is even or the disk does not fit.
Image disk(double cx, double cy, double r, int side);

/// Discrete nonnegative 2-D PSF with odd square support.
///
/// Kernels built by right_psf() (and their flips) also carry a compact row
/// description: within each row the weight is a linear ramp over the disk
/// chord. convolve() uses it to run in O(rows) per output pixel instead of
/// O(area). Kernels built from arbitrary weights fall back to dense
/// convolution.
class PsfKernel {
public:
    /// Arbitrary weights. Throws Error(Dimension) for non-square or even
    /// grids and Error(Domain) for negative or all-zero weights.
    static PsfKernel from_weights(Image weights, double radius_px = 0.0);

    double radius_px() const noexcept { return radius_px_; }
    int side() const noexcept { return weights_.width(); }
    int half_side() const noexcept { return weights_.width() / 2; }
    const Image& weights() const noexcept { return weights_; }
    double operator()(int x, int y) const { return weights_(x, y); }

    double sum() const;

    bool has_ramp_rows() const noexcept { return !chord_half_widths_.empty(); }

    friend PsfKernel right_psf(double r);
    friend PsfKernel flip_h(const PsfKernel& k);
    friend Image convolve(const RowPrefixSums& source, const PsfKernel& k);

    bool operator==(const PsfKernel& other) const {
        return radius_px_ == other.radius_px_ && weights_ == other.weights_;
    }

private:
    PsfKernel() = default;

    double radius_px_ = 0.0;
    Image weights_;
    // Ramp description: per row, half chord width (-1 for an empty row),
    // slope direction (+1 / -1 / 0) and the normalization factor.
    std::vector<int> chord_half_widths_;
    int ramp_direction_ = 0;
    double ramp_scale_ = 0.0;
};

/// Side of the right_psf(r) grid: 2 ceil(|r|) + 1, or 1 for |r| < 0.5 where
/// the disk is a single cell.
int psf_side(double r);

/// Right sub-aperture PSF for signed pixel radius r:
///   H = sum_{k=0}^{floor(|2r|)} C(0,0;r) (.) C(k sign(r), 0; r),
/// on a psf_side(r) grid and scaled to unit sum.
/// |r| < 0.5 yields the delta kernel.
PsfKernel right_psf(double r);

/// Horizontal mirror; the radius is negated. flip_h(right_psf(r)) equals
/// right_psf(-r) exactly.
PsfKernel flip_h(const PsfKernel& k);

/// Per-row prefix sums of an image, reusable across many kernels. The
/// image must outlive this object.
class RowPrefixSums {
public:
    explicit RowPrefixSums(const Image& image);

    const Image& image() const noexcept { return *image_; }

private:
    friend Image convolve(const RowPrefixSums& source, const PsfKernel& k);

    const Image* image_;
    // Row-major, (width + 1) entries per row: sums of I(u) and u * I(u).
    std::vector<double> sum0_;
    std::vector<double> sum1_;
};

/// 2-D convolution restricted to the valid region: the output has size
/// (W - side + 1) x (H - side + 1). Throws Error(Dimension) when the kernel
/// is larger than the image.
Image convolve(const Image& image, const PsfKernel& k);
Image convolve(const RowPrefixSums& source, const PsfKernel& k);

/// Dense reference implementation, ignores the ramp description.
Image convolve_dense(const Image& image, const PsfKernel& k);

/// X / ||X||_{1,1}. Throws Error(DegeneratePatch) for a zero or
/// non-finite norm.
Image normalize_l1(const Image& patch);

double l1_norm(const Image& image);
/// Element-wise L1 distance. Sizes must match.
double l1_distance(const Image& a, const Image& b);

}  // namespace dpscale
