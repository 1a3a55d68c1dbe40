#include "dpscale/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dpscale/error.hpp"
#include "dpscale/parallel.hpp"

namespace dpscale {

CandidateSet candidate_scales(double s_star, double t_s, int count) {
    if (!(s_star > 0.0) || !std::isfinite(s_star)) {
        throw Error(ErrorCode::Domain, "initial scale must be positive");
    }
    if (!(t_s > 0.0) || !std::isfinite(t_s)) throw Error(ErrorCode::Domain, "T_s must be positive");
    if (count < 2) throw Error(ErrorCode::Domain, "the candidate set needs at least two values");

    CandidateSet set;
    set.center = s_star;
    set.half_width = t_s;
    const double lo = s_star * (1.0 - t_s);
    const double hi = s_star * (1.0 + t_s);
    int dropped = 0;
    for (int i = 0; i < count; ++i) {
        const double v = i == count - 1 ? hi : lo + (hi - lo) * i / (count - 1);
        if (v > 0.0) {
            set.values.push_back(v);
        } else {
            ++dropped;
        }
    }
    if (dropped > 0) {
        set.warnings.push_back(std::to_string(dropped) + " non-positive scale candidate(s) dropped");
    }
    if (set.values.empty()) throw Error(ErrorCode::Candidate, "no positive scale candidates remain");
    set.count = static_cast<int>(set.values.size());
    return set;
}

std::optional<double> blur_radius_at_scale(double s, double z_prime, double g_prime_star,
                                           const CameraMeta& meta) {
    if (!(s > 0.0) || !(z_prime > 0.0) || !(g_prime_star > 0.0)) {
        throw Error(ErrorCode::Domain, "scale, depth and focus distance must be positive");
    }
    const double focus = s * g_prime_star;
    if (!(focus > meta.focal_length())) return std::nullopt;
    const BlurSize b = thin_lens_blur(s * z_prime, focus, meta.focal_length(), meta.aperture_diameter());
    return blur_to_pixel_radius(b, meta.sensor_pitch());
}

struct CrossViewObjective::PrefixedPatch {
    int view = 0;
    int patch = 0;
    std::vector<RowPrefixSums> left;
    std::vector<RowPrefixSums> right;
};

CrossViewObjective::CrossViewObjective(std::vector<RefinementView> views) : views_(std::move(views)) {
    for (std::size_t v = 0; v < views_.size(); ++v) {
        if (!(views_[v].g_prime_star > 0.0)) {
            throw Error(ErrorCode::Domain, "scaled focus distances must be positive");
        }
        for (std::size_t p = 0; p < views_[v].patches.size(); ++p) {
            const RefinementPatch& patch = views_[v].patches[p];
            if (patch.left.size() != patch.right.size() || patch.left.empty()) {
                throw Error(ErrorCode::Dimension, "refinement patch needs matching left/right channels");
            }
            auto entry = std::make_unique<PrefixedPatch>();
            entry->view = static_cast<int>(v);
            entry->patch = static_cast<int>(p);
            for (std::size_t c = 0; c < patch.left.size(); ++c) {
                entry->left.emplace_back(patch.left[c]);
                entry->right.emplace_back(patch.right[c]);
            }
            prefixed_.push_back(std::move(entry));
        }
    }
    if (prefixed_.empty()) throw Error(ErrorCode::Loss, "no patches to refine over");
}

CrossViewObjective::~CrossViewObjective() = default;
CrossViewObjective::CrossViewObjective(CrossViewObjective&&) noexcept = default;
CrossViewObjective& CrossViewObjective::operator=(CrossViewObjective&&) noexcept = default;

LossBreakdown CrossViewObjective::evaluate(double s, bool keep_contributions) const {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    LossBreakdown out;

    std::vector<PsfKernel> kernels;
    kernels.reserve(prefixed_.size());
    for (const auto& entry : prefixed_) {
        const RefinementView& view = views_[static_cast<std::size_t>(entry->view)];
        const RefinementPatch& patch = view.patches[static_cast<std::size_t>(entry->patch)];
        const auto r = blur_radius_at_scale(s, patch.z_prime, view.g_prime_star, view.meta);
        if (!r) {
            out.total = kInf;
            return out;
        }
        const Image& px = patch.left.front();
        const int side = psf_side(*r);
        if (side > std::min(px.width(), px.height())) {
            out.total = kInf;
            return out;
        }
        kernels.push_back(right_psf(*r));
    }

    int usable = 0;
    for (std::size_t i = 0; i < prefixed_.size(); ++i) {
        const auto& entry = *prefixed_[i];
        const RefinementView& view = views_[static_cast<std::size_t>(entry.view)];
        const RefinementPatch& patch = view.patches[static_cast<std::size_t>(entry.patch)];
        const PsfKernel& right = kernels[i];
        const PsfKernel left = flip_h(right);
        for (std::size_t c = 0; c < entry.left.size(); ++c) {
            try {
                const Image a = normalize_l1(convolve(entry.left[c], right));
                const Image b = normalize_l1(convolve(entry.right[c], left));
                const double loss = l1_distance(a, b);
                out.total += loss;
                ++usable;
                if (keep_contributions) {
                    out.contributions.push_back({view.view_index, patch.patch_id, static_cast<int>(c), loss});
                }
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegeneratePatch) throw;
                ++out.degenerate;
            }
        }
    }
    if (usable == 0) throw Error(ErrorCode::Loss, "every refinement contribution is degenerate");
    return out;
}

double cross_view_loss(double s, const std::vector<RefinementView>& views) {
    return CrossViewObjective(views).evaluate(s).total;
}

RefinementRecord refine_scale(double s_star, const CrossViewObjective& objective, double t_s,
                              int count, int threads) {
    RefinementRecord record;
    record.s_star = s_star;
    record.candidates = candidate_scales(s_star, t_s, count);
    const auto& values = record.candidates.values;
    record.losses.assign(values.size(), 0.0);
    parallel_for(values.size(), threads,
                 [&](std::size_t i) { record.losses[i] = objective.evaluate(values[i]).total; });

    const auto ranking = candidate_ranking(record);
    record.best_index = ranking.front();
    record.s_optim = values[record.best_index];
    if (std::isinf(record.losses[record.best_index])) {
        throw Error(ErrorCode::Candidate, "every scale candidate is invalid for the selected patches");
    }
    LossBreakdown best = objective.evaluate(record.s_optim, true);
    record.degenerate = best.degenerate;
    record.contributions = std::move(best.contributions);
    return record;
}

std::vector<std::size_t> candidate_ranking(const RefinementRecord& record) {
    std::vector<std::size_t> order(record.losses.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& values = record.candidates.values;
    const double center = record.s_star;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (record.losses[a] != record.losses[b]) return record.losses[a] < record.losses[b];
        const double da = std::abs(values[a] - center);
        const double db = std::abs(values[b] - center);
        if (da != db) return da < db;
        return a < b;
    });
    return order;
}

}  // namespace dpscale
