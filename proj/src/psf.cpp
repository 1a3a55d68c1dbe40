#include "dpscale/psf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpscale/error.hpp"

namespace dpscale {
namespace {

// Absorbs round-off in radii recomputed through the thin-lens model, so a
// radius of exactly 1 and one of 1 - 1e-15 rasterize alike.
constexpr double kRasterSlack = 1e-9;

bool in_disk(double x, double y, double cx, double cy, double r2) {
    const double dx = x - cx;
    const double dy = y - cy;
    return dx * dx + dy * dy <= r2 + kRasterSlack;
}

void require_kernel_fits(const Image& image, const PsfKernel& k) {
    if (k.side() > image.width() || k.side() > image.height()) {
        throw Error(ErrorCode::Dimension,
                    "kernel side " + std::to_string(k.side()) + " exceeds image " +
                        std::to_string(image.width()) + "x" + std::to_string(image.height()));
    }
}

}  // namespace

Image disk(double cx, double cy, double r, int side) {
    if (side <= 0 || side % 2 == 0) {
        throw Error(ErrorCode::Dimension, "disk grid side must be odd and positive");
    }
    if (!std::isfinite(r) || !std::isfinite(cx) || !std::isfinite(cy)) {
        throw Error(ErrorCode::Domain, "disk parameters must be finite");
    }
    const int half = side / 2;
    const double reach = std::max(std::abs(cx), std::abs(cy)) + std::floor(std::abs(r));
    if (reach > half) {
        throw Error(ErrorCode::Dimension, "disk of radius " + std::to_string(r) +
                                              " does not fit a grid of side " + std::to_string(side));
    }
    const double r2 = r * r;
    Image mask(side, side);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            if (in_disk(x - half, y - half, cx, cy, r2)) mask(x, y) = 1.0;
        }
    }
    return mask;
}

PsfKernel PsfKernel::from_weights(Image weights, double radius_px) {
    if (weights.width() != weights.height() || weights.width() % 2 == 0) {
        throw Error(ErrorCode::Dimension, "kernel grid must be square with odd side");
    }
    double total = 0.0;
    for (double w : weights.pixels()) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw Error(ErrorCode::Domain, "kernel weights must be nonnegative and finite");
        }
        total += w;
    }
    if (total <= 0.0) throw Error(ErrorCode::Domain, "kernel weights sum to zero");
    PsfKernel k;
    k.radius_px_ = radius_px;
    k.weights_ = std::move(weights);
    return k;
}

double PsfKernel::sum() const {
    double total = 0.0;
    for (double w : weights_.pixels()) total += w;
    return total;
}

int psf_side(double r) {
    const double abs_r = std::abs(r);
    return abs_r + kRasterSlack < 0.5 ? 1 : 2 * static_cast<int>(std::ceil(abs_r - kRasterSlack)) + 1;
}

PsfKernel right_psf(double r) {
    if (!std::isfinite(r)) throw Error(ErrorCode::Domain, "PSF radius must be finite");
    const double abs_r = std::abs(r);
    const double r2 = r * r;
    const int side = psf_side(r);
    const int half = side / 2;
    const int shifts = static_cast<int>(std::floor(2.0 * abs_r + kRasterSlack));
    const int direction = r > 0.0 ? 1 : (r < 0.0 ? -1 : 0);

    // Sum over k of the centered disk times the disk shifted by k along x.
    Image counts(side, side);
    double total = 0.0;
    for (int y = -half; y <= half; ++y) {
        for (int x = -half; x <= half; ++x) {
            if (!in_disk(x, y, 0.0, 0.0, r2)) continue;
            int hits = 0;
            for (int k = 0; k <= shifts; ++k) {
                if (in_disk(x, y, static_cast<double>(k * direction), 0.0, r2)) ++hits;
            }
            counts(x + half, y + half) = hits;
            total += hits;
        }
    }

    PsfKernel kernel;
    kernel.radius_px_ = r;
    kernel.ramp_direction_ = direction;
    kernel.ramp_scale_ = 1.0 / total;
    kernel.chord_half_widths_.assign(static_cast<std::size_t>(side), -1);
    for (int y = -half; y <= half; ++y) {
        int& chord = kernel.chord_half_widths_[static_cast<std::size_t>(y + half)];
        for (int x = 0; x <= half; ++x) {
            if (in_disk(x, y, 0.0, 0.0, r2)) chord = x;
        }
    }
    counts *= kernel.ramp_scale_;
    kernel.weights_ = std::move(counts);
    return kernel;
}

PsfKernel flip_h(const PsfKernel& k) {
    PsfKernel out = k;
    out.weights_ = k.weights_.mirrored();
    out.radius_px_ = -k.radius_px_;
    out.ramp_direction_ = -k.ramp_direction_;
    return out;
}

RowPrefixSums::RowPrefixSums(const Image& image) : image_(&image) {
    const std::size_t stride = static_cast<std::size_t>(image.width()) + 1;
    sum0_.assign(stride * static_cast<std::size_t>(image.height()), 0.0);
    sum1_.assign(sum0_.size(), 0.0);
    for (int y = 0; y < image.height(); ++y) {
        const auto row = image.row(y);
        double* s0 = sum0_.data() + static_cast<std::size_t>(y) * stride;
        double* s1 = sum1_.data() + static_cast<std::size_t>(y) * stride;
        for (int u = 0; u < image.width(); ++u) {
            s0[u + 1] = s0[u] + row[static_cast<std::size_t>(u)];
            s1[u + 1] = s1[u] + u * row[static_cast<std::size_t>(u)];
        }
    }
}

Image convolve_dense(const Image& image, const PsfKernel& k) {
    require_kernel_fits(image, k);
    const int side = k.side();
    const int out_w = image.width() - side + 1;
    const int out_h = image.height() - side + 1;
    Image out(out_w, out_h);
    for (int ky = 0; ky < side; ++ky) {
        for (int kx = 0; kx < side; ++kx) {
            const double w = k(kx, ky);
            if (w == 0.0) continue;
            for (int oy = 0; oy < out_h; ++oy) {
                const double* in = image.row(oy + side - 1 - ky).data() + (side - 1 - kx);
                double* o = out.row(oy).data();
                for (int ox = 0; ox < out_w; ++ox) o[ox] += w * in[ox];
            }
        }
    }
    return out;
}

Image convolve(const RowPrefixSums& source, const PsfKernel& k) {
    const Image& image = source.image();
    if (!k.has_ramp_rows() || k.side() == 1) return convolve_dense(image, k);
    require_kernel_fits(image, k);

    const int side = k.side();
    const int half = k.half_side();
    const int out_w = image.width() - side + 1;
    const int out_h = image.height() - side + 1;
    const std::size_t stride = static_cast<std::size_t>(image.width()) + 1;
    const double d = k.ramp_direction_;
    Image out(out_w, out_h);
    // Row offset i contributes sum_u (d (cx - u) + a + 1) I(cy - i, u) over
    // the chord u in [cx - a, cx + a].
    for (int oy = 0; oy < out_h; ++oy) {
        double* o = out.row(oy).data();
        for (int i = -half; i <= half; ++i) {
            const int a = k.chord_half_widths_[static_cast<std::size_t>(i + half)];
            if (a < 0) continue;
            const std::size_t base = static_cast<std::size_t>(oy + half - i) * stride;
            const double* s0 = source.sum0_.data() + base;
            const double* s1 = source.sum1_.data() + base;
            for (int ox = 0; ox < out_w; ++ox) {
                const int cx = ox + half;
                const double w0 = s0[cx + a + 1] - s0[cx - a];
                const double w1 = s1[cx + a + 1] - s1[cx - a];
                o[ox] += (d * cx + a + 1) * w0 - d * w1;
            }
        }
    }
    out *= k.ramp_scale_;
    return out;
}

Image convolve(const Image& image, const PsfKernel& k) {
    if (!k.has_ramp_rows()) return convolve_dense(image, k);
    return convolve(RowPrefixSums(image), k);
}

double l1_norm(const Image& image) {
    double total = 0.0;
    for (double v : image.pixels()) total += std::abs(v);
    return total;
}

Image normalize_l1(const Image& patch) {
    const double norm = l1_norm(patch);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(ErrorCode::DegeneratePatch, "patch has zero or non-finite L1 norm");
    }
    Image out = patch;
    out *= 1.0 / norm;
    return out;
}

double l1_distance(const Image& a, const Image& b) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw Error(ErrorCode::Dimension, "L1 distance of differently sized images");
    }
    double total = 0.0;
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) total += std::abs(pa[i] - pb[i]);
    return total;
}

}  // namespace dpscale
