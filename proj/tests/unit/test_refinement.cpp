#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "dpscale/error.hpp"
#include "dpscale/refinement.hpp"
#include "dpscale/synthetic.hpp"

using namespace dpscale;

namespace {

constexpr int kPatch = 48;

// One view whose patches are rendered at metric depths around focus g, with
// a frozen g' = g / s_true.
RefinementView make_view(int index, const CameraMeta& meta, double g, double s_true,
                         const std::vector<double>& depths, std::uint64_t seed, int channels = 3) {
    RefinementView view{index, g / s_true, meta, {}};
    int id = 0;
    for (double z : depths) {
        const double r = blur_to_pixel_radius(thin_lens_blur(z, g, meta.focal_length(), meta.aperture_diameter()),
                                              meta.sensor_pitch());
        const int margin = psf_side(r) / 2;
        TextureSpec tex;
        tex.seed = seed * 100 + static_cast<std::uint64_t>(id);
        const MultiImage t = procedural_texture(kPatch + 2 * margin, kPatch + 2 * margin, channels, tex);
        RefinementPatch patch{id++, z / s_true, {}, {}};
        for (const Image& c : t.channels) {
            const DpPair pair = render_dp_patch(c, z, g, meta);
            patch.left.push_back(pair.left);
            patch.right.push_back(pair.right);
        }
        view.patches.push_back(std::move(patch));
    }
    return view;
}

// Metric depths whose radii sit on half-pixel multiples, so the rendered
// kernels are reproduced exactly at the true scale.
std::vector<double> depths_for(const CameraMeta& meta, double g, std::initializer_list<double> radii) {
    std::vector<double> out;
    for (double r : radii) {
        out.push_back(depth_from_blur(pixel_radius_to_blur(r, meta.sensor_pitch()), g, meta.focal_length(),
                                      meta.aperture_diameter()));
    }
    return out;
}

std::vector<RefinementView> scene(double s_true) {
    const CameraMeta a(0.05, 1.8, 21.44e-6);
    const CameraMeta b(0.085, 1.8, 21.44e-6);
    return {make_view(0, a, 1.8, s_true, depths_for(a, 1.8, {-6.0, 2.5, 7.0}), 1),
            make_view(1, b, 2.6, s_true, depths_for(b, 2.6, {-4.0, 5.5, 9.0}), 2)};
}

}  // namespace

TEST_CASE("candidate scales") {
    const CandidateSet set = candidate_scales(1.0, 0.8, 100);
    REQUIRE(set.values.size() == 100);
    CHECK(set.values.front() == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(set.values.back() == doctest::Approx(1.8).epsilon(1e-15));
    CHECK(set.values[1] - set.values[0] == doctest::Approx(0.016162).epsilon(1e-4));
    const CandidateSet ends = candidate_scales(1.0, 0.8, 2);
    REQUIRE(ends.values.size() == 2);
    CHECK(ends.values[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(ends.values[1] == doctest::Approx(1.8).epsilon(1e-15));
    const CandidateSet small = candidate_scales(0.1, 0.8, 100);
    CHECK(small.values.front() == doctest::Approx(0.02));
    CHECK(small.values.back() == doctest::Approx(0.18));

    const CandidateSet clipped = candidate_scales(1.0, 1.5, 11);
    CHECK(clipped.values.size() < 11);
    CHECK_FALSE(clipped.warnings.empty());
    for (double v : clipped.values) CHECK(v > 0.0);

    CHECK_THROWS_AS(candidate_scales(0.0, 0.8, 100), Error);
    CHECK_THROWS_AS(candidate_scales(1.0, 0.0, 100), Error);
    CHECK_THROWS_AS(candidate_scales(1.0, 0.8, 1), Error);
}

TEST_CASE("blur radius at scale") {
    const CameraMeta meta(0.05, 1.8, 5e-6);
    for (double s : {0.5, 1.0, 3.0}) CHECK(*blur_radius_at_scale(s, 1.2, 1.2, meta) == 0.0);
    double previous = std::numeric_limits<double>::infinity();
    for (double s = 1.0; s < 200.0; s *= 1.5) {
        const double r = std::abs(*blur_radius_at_scale(s, 2.0, 1.0, meta));
        CHECK(r < previous);
        previous = r;
    }
    CHECK(previous < 0.5);
    CHECK_FALSE(blur_radius_at_scale(0.04, 2.0, 1.0, meta).has_value());
    CHECK_THROWS_AS(blur_radius_at_scale(-1.0, 2.0, 1.0, meta), Error);
}

TEST_CASE("radius at the true scale matches the rendered radius") {
    const CameraMeta meta(0.05, 1.8, 21.44e-6);
    const double s = 1.7;
    const double g = 2.2;
    for (double z : {1.1, 1.9, 3.4}) {
        const double rendered = blur_to_pixel_radius(thin_lens_blur(z, g, 0.05, meta.aperture_diameter()), 21.44e-6);
        CHECK(*blur_radius_at_scale(s, z / s, g / s, meta) == doctest::Approx(rendered).epsilon(1e-12));
    }
}

TEST_CASE("all-in-focus patches give a constant loss and the tie-break returns s*") {
    const CameraMeta meta(0.05, 1.8, 21.44e-6);
    const double g = 2.0;
    std::vector<RefinementView> views{make_view(0, meta, g, 1.0, {g, g, g}, 4)};
    const CrossViewObjective objective(views);
    const double at_one = objective.evaluate(1.0).total;
    for (double s : {0.4, 0.9, 1.3, 1.75}) CHECK(objective.evaluate(s).total == at_one);
    const RefinementRecord rec = refine_scale(1.0, objective, 0.8, 100, 1);
    CHECK(std::abs(rec.s_optim - 1.0) <= 0.5 * (rec.candidates.values[1] - rec.candidates.values[0]) + 1e-12);
}

TEST_CASE("refinement recovers the true scale") {
    const double s_true = 1.4;
    const CrossViewObjective objective(scene(s_true));
    CHECK(objective.evaluate(s_true).total == doctest::Approx(0.0).epsilon(1e-12));

    for (double start : {s_true, 1.3 * s_true, 0.8 * s_true}) {
        const RefinementRecord rec = refine_scale(start, objective, 0.8, 100, 1);
        const double step = rec.candidates.values[1] - rec.candidates.values[0];
        CHECK(std::abs(rec.s_optim - s_true) <= step);
        // The true scale minimizes the loss over every candidate.
        for (double loss : rec.losses) CHECK(objective.evaluate(s_true).total <= loss + 1e-12);
    }
}

TEST_CASE("invalid candidates get infinite loss") {
    const CrossViewObjective objective(scene(1.0));
    // s g' <= f for the first view.
    CHECK(std::isinf(objective.evaluate(0.02).total));
    // Kernels larger than the patch.
    CHECK(std::isinf(objective.evaluate(0.08).total));
    const RefinementRecord rec = refine_scale(1.0, objective, 0.99, 100, 1);
    CHECK(std::isinf(rec.losses.front()));
    CHECK(std::isfinite(rec.losses[rec.best_index]));
}

TEST_CASE("per-patch and per-channel gains leave the ranking unchanged") {
    auto views = scene(0.9);
    const CrossViewObjective plain(views);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> gain(0.5, 2.0);
    for (auto& v : views) {
        for (auto& p : v.patches) {
            for (auto& c : p.left) c *= gain(rng);
            for (auto& c : p.right) c *= gain(rng);
        }
    }
    const CrossViewObjective gained(views);
    const RefinementRecord a = refine_scale(1.1, plain, 0.8, 100, 1);
    const RefinementRecord b = refine_scale(1.1, gained, 0.8, 100, 1);
    CHECK(candidate_ranking(a) == candidate_ranking(b));
    CHECK(a.s_optim == b.s_optim);
}

TEST_CASE("refinement is independent of the thread count") {
    const CrossViewObjective objective(scene(2.1));
    const RefinementRecord one = refine_scale(2.3, objective, 0.8, 100, 1);
    const RefinementRecord four = refine_scale(2.3, objective, 0.8, 100, 4);
    CHECK(one.losses == four.losses);
    CHECK(one.s_optim == four.s_optim);
}

TEST_CASE("contributions and degenerate patches") {
    auto views = scene(1.0);
    const CrossViewObjective objective(views);
    const LossBreakdown full = objective.evaluate(1.05, true);
    CHECK(full.contributions.size() == 2 * 3 * 3);
    double sum = 0.0;
    for (const auto& c : full.contributions) sum += c.loss;
    CHECK(sum == doctest::Approx(full.total).epsilon(1e-12));

    for (auto& c : views[0].patches[0].left) c = Image(c.width(), c.height(), 0.0);
    const LossBreakdown skipped = CrossViewObjective(views).evaluate(1.05);
    CHECK(skipped.degenerate == 3);

    for (auto& v : views) {
        for (auto& p : v.patches) {
            for (auto& c : p.left) c = Image(c.width(), c.height(), 0.0);
        }
    }
    CHECK_THROWS_AS(CrossViewObjective(views).evaluate(1.05), Error);
    CHECK_THROWS_AS(CrossViewObjective({}), Error);
}

TEST_CASE("cross-view loss matches the objective") {
    const auto views = scene(1.2);
    CHECK(cross_view_loss(1.3, views) == CrossViewObjective(views).evaluate(1.3).total);
}
