#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpscale/image.hpp"
#include "dpscale/optics.hpp"
#include "dpscale/psf.hpp"

namespace dpscale {

struct CandidateSet {
    std::vector<double> values;
    double center = 0.0;
    double half_width = 0.0;  // T_s as a fraction
    int count = 0;
    std::vector<std::string> warnings;
};

/// `count` values uniformly spaced on [s*(1 - t_s), s*(1 + t_s)], endpoints
/// included. Non-positive values (possible only for t_s >= 1) are dropped
/// with a warning. Throws Error(Domain) for s_star <= 0, t_s <= 0 or
/// count < 2, and Error(Candidate) if nothing remains.
CandidateSet candidate_scales(double s_star, double t_s, int count);

/// Signed pixel radius predicted for a patch at depth z' when the scene
/// scale is s and the view is focused at s g'*. Empty when s g'* <= f.
std::optional<double> blur_radius_at_scale(double s, double z_prime, double g_prime_star,
                                           const CameraMeta& meta);

/// One selected patch: all channels of both sub-aperture images.
struct RefinementPatch {
    int patch_id = 0;
    double z_prime = 0.0;
    std::vector<Image> left;
    std::vector<Image> right;
};

/// A selected view with its frozen scaled focus distance.
struct RefinementView {
    int view_index = 0;
    double g_prime_star = 0.0;
    CameraMeta meta;
    std::vector<RefinementPatch> patches;
};

struct LossContribution {
    int view_index = 0;
    int patch_id = 0;
    int channel = 0;
    double loss = 0.0;
};

struct LossBreakdown {
    /// +infinity when the candidate is invalid for some patch.
    double total = 0.0;
    int degenerate = 0;
    std::vector<LossContribution> contributions;
};

/// Sum over views, patches and channels of
///   || eta(G_l * H(s)) - eta(G_r * flip(H(s))) ||_{1,1}
/// with H the right PSF at the radius predicted for scale s. Per-row prefix
/// sums of every patch are built once at construction.
class CrossViewObjective {
public:
    explicit CrossViewObjective(std::vector<RefinementView> views);
    ~CrossViewObjective();
    CrossViewObjective(CrossViewObjective&&) noexcept;
    CrossViewObjective& operator=(CrossViewObjective&&) noexcept;

    /// A candidate is invalid (+infinity) when s g'* <= f for a view or a
    /// predicted kernel is larger than its patch. Degenerate patches are
    /// skipped and counted. Throws Error(Loss) if every contribution is
    /// degenerate.
    LossBreakdown evaluate(double s, bool keep_contributions = false) const;

    const std::vector<RefinementView>& views() const noexcept { return views_; }

private:
    struct PrefixedPatch;
    std::vector<RefinementView> views_;
    std::vector<std::unique_ptr<PrefixedPatch>> prefixed_;
};

double cross_view_loss(double s, const std::vector<RefinementView>& views);

struct RefinementRecord {
    CandidateSet candidates;
    std::vector<double> losses;
    std::size_t best_index = 0;
    double s_optim = 0.0;
    double s_star = 0.0;
    int degenerate = 0;  // at the optimum
    std::vector<LossContribution> contributions;  // at the optimum
};

/// Exhaustive search of the candidate set; the lowest loss wins, ties go to
/// the candidate nearest s_star.
RefinementRecord refine_scale(double s_star, const CrossViewObjective& objective, double t_s,
                              int count, int threads = 1);

/// Candidate indices ordered by (loss, distance to s_star, index).
std::vector<std::size_t> candidate_ranking(const RefinementRecord& record);

}  // namespace dpscale
