#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "dpscale/error.hpp"
#include "dpscale/scale_solver.hpp"

using namespace dpscale;

namespace {

struct TrueView {
    CameraMeta meta;
    double g;  // metric focus distance
};

// Noiseless samples: metric depths z, reconstruction depths z / s.
std::vector<PatchSample> forward(const std::vector<TrueView>& views, double s, const std::vector<double>& depths) {
    std::vector<PatchSample> out;
    for (std::size_t v = 0; v < views.size(); ++v) {
        for (std::size_t j = 0; j < depths.size(); ++j) {
            const auto& tv = views[v];
            const double z = depths[j] * tv.g;
            const BlurSize b = thin_lens_blur(z, tv.g, tv.meta.focal_length(), tv.meta.aperture_diameter());
            out.push_back(make_patch_sample(static_cast<int>(v), static_cast<int>(j), z / s, b, tv.meta));
        }
    }
    return out;
}

std::vector<CameraMeta> metas_of(const std::vector<TrueView>& views) {
    std::vector<CameraMeta> m;
    for (const auto& v : views) m.push_back(v.meta);
    return m;
}

PerViewEstimate per_view(int index, double s, double span = 10.0, double residual = 0.0) {
    PerViewEstimate e;
    e.view_index = index;
    e.blur_span_px = span;
    ScaleSolution sol;
    sol.s = s;
    sol.s_bar = 1.0 / s;
    sol.negative_scale = s <= 0.0;
    sol.l1_residual = residual;
    e.solution = sol;
    return e;
}

}  // namespace

TEST_CASE("gamma") {
    CHECK(gamma(0.5, BlurSize{-2.3742e-4}, 0.027778) == doctest::Approx(0.013770).epsilon(1e-4));
    CHECK(gamma(4.0 / 3.0, BlurSize{3.5613e-4}, 0.027778) == doctest::Approx(0.037512).epsilon(1e-4));
    CHECK(gamma(7.3, BlurSize{-0.027778}, 0.027778) == 0.0);
}

TEST_CASE("two-patch system is solved exactly") {
    const double l = 0.027778;
    const double s = 3.0;
    std::vector<PatchSample> samples;
    int id = 0;
    for (double z : {1.5, 4.0}) {
        const BlurSize b = thin_lens_blur(z, 2.0, 0.05, l);
        PatchSample p{0, id++, z / s, b, gamma(z / s, b, l)};
        samples.push_back(p);
    }
    // The system uses the aperture of the meta; match the hand value.
    const CameraMeta hand(0.05, 0.05 / l, 5.36e-6);
    const std::vector<CameraMeta> metas{hand};
    const LinearSystem sys = assemble_system(samples, metas);
    CHECK(sys.a.rows() == 2);
    CHECK(sys.a.cols() == 2);
    const ScaleSolution sol = solve_l1_irls(sys);
    CHECK(sol.g_bar[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.s_bar == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(sol.s == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(sol.g[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sol.g_prime[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("assembled rows have zero residual at the truth") {
    const std::vector<TrueView> views{{CameraMeta(0.035, 1.4, 5e-6), 1.7}, {CameraMeta(0.085, 1.8, 5e-6), 2.6}};
    const double s = 0.8;
    const auto samples = forward(views, s, {0.6, 0.9, 1.4, 2.2});
    const auto metas = metas_of(views);
    const LinearSystem sys = assemble_system(samples, metas);
    Eigen::VectorXd x(3);
    x << 1.0 / views[0].g, 1.0 / views[1].g, 1.0 / s;
    const Eigen::VectorXd r = sys.a * x - sys.rhs;
    CHECK(r.cwiseAbs().maxCoeff() < 1e-15);
    CHECK(sys.row_map.size() == 8);
    CHECK(sys.view_indices == std::vector<int>{0, 1});
}

TEST_CASE("rank deficiency is detected") {
    const std::vector<TrueView> views{{CameraMeta(0.05, 1.8, 5e-6), 2.0}, {CameraMeta(0.05, 1.8, 5e-6), 2.0}};
    // Every patch of each view at one depth: gamma columns collinear with l.
    const auto samples = forward(views, 1.5, {1.3, 1.3});
    const auto metas = metas_of(views);
    CHECK_THROWS_AS(assemble_system(samples, metas), Error);
    try {
        assemble_system(samples, metas);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RankDeficient);
    }
    CHECK_THROWS_AS(assemble_system(std::span(samples).first(1), metas), Error);
}

TEST_CASE("IRLS on a consistent system equals the direct solve") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<TrueView> views;
        for (int v = 0; v < 4; ++v) views.push_back({CameraMeta(0.035 + 0.05 * u(rng), 1.4 + 2.0 * u(rng), 5e-6), 1.0 + 3.0 * u(rng)});
        const double s = 0.3 + 2.7 * u(rng);
        const auto samples = forward(views, s, {0.5, 0.8, 1.3, 2.0, 3.0});
        const auto metas = metas_of(views);
        const LinearSystem sys = assemble_system(samples, metas);
        const ScaleSolution l1 = solve_l1_irls(sys);
        const ScaleSolution l2 = solve_least_squares(sys);
        CHECK(std::abs(l1.s / l2.s - 1.0) < 1e-9);
        CHECK(std::abs(l1.s / s - 1.0) < 1e-9);
        for (std::size_t v = 0; v < views.size(); ++v) CHECK(std::abs(l1.g[v] / views[v].g - 1.0) < 1e-9);
    }
}

TEST_CASE("IRLS objective does not increase") {
    const std::vector<TrueView> views{{CameraMeta(0.05, 1.8, 5e-6), 2.0}, {CameraMeta(0.085, 1.8, 5e-6), 1.4}};
    auto samples = forward(views, 1.2, {0.5, 0.7, 0.9, 1.2, 1.6, 2.5});
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 2e-5);
    for (auto& p : samples) {
        p.b.meters += noise(rng);
        p.gamma = gamma(p.z_prime, p.b, views[static_cast<std::size_t>(p.view_index)].meta.aperture_diameter());
    }
    samples[3].b.meters *= 5.0;
    samples[3].gamma = gamma(samples[3].z_prime, samples[3].b, views[0].meta.aperture_diameter());
    const auto metas = metas_of(views);
    const ScaleSolution sol = solve_l1_irls(assemble_system(samples, metas));
    REQUIRE(sol.objective_history.size() >= 2);
    for (std::size_t i = 1; i < sol.objective_history.size(); ++i) {
        CHECK(sol.objective_history[i] <= sol.objective_history[i - 1] * (1.0 + 1e-9) + 1e-12);
    }
}

TEST_CASE("per-view solve") {
    const TrueView tv{CameraMeta(0.05, 1.8, 5e-6), 2.2};
    const auto samples = forward({tv}, 0.7, {0.6, 0.9, 1.5, 2.4});
    const ScaleSolution sol = solve_per_view(samples, tv.meta);
    CHECK(std::abs(sol.s / 0.7 - 1.0) < 1e-9);
    CHECK_FALSE(sol.negative_scale);

    // Equal blur sizes: the scale is unobservable.
    auto flat = samples;
    for (auto& p : flat) {
        p.b = flat.front().b;
        p.gamma = gamma(p.z_prime, p.b, tv.meta.aperture_diameter());
    }
    try {
        solve_per_view(flat, tv.meta);
        FAIL("expected a rank deficiency");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RankDeficient);
    }

    // Blur signs flipped: blur now falls with depth and the fit turns negative.
    auto inverted = samples;
    for (auto& p : inverted) {
        p.b.meters = -p.b.meters;
        p.gamma = gamma(p.z_prime, p.b, tv.meta.aperture_diameter());
    }
    CHECK(solve_per_view(inverted, tv.meta).negative_scale);
    CHECK_THROWS_AS(solve_per_view(std::span(samples).first(1), tv.meta), Error);
}

TEST_CASE("view selection") {
    SUBCASE("low blur span is excluded") {
        const std::vector<PerViewEstimate> v{per_view(0, 1.0, 0.5), per_view(1, 1.0), per_view(2, 1.0)};
        const ViewSelection sel = select_views(v, 2.0, 5);
        CHECK(sel.selected == std::vector<int>{1, 2});
        REQUIRE(sel.excluded.size() == 1);
        CHECK(sel.excluded[0].view_index == 0);
        CHECK_FALSE(sel.excluded[0].reasons.empty());
    }
    SUBCASE("views nearest the median are kept") {
        const double scales[] = {0.9, 0.95, 1.0, 1.0, 1.05, 3.0, -2.0};
        std::vector<PerViewEstimate> v;
        for (int i = 0; i < 7; ++i) v.push_back(per_view(i, scales[i], 10.0, 0.1 * i));
        const ViewSelection sel = select_views(v, 2.0, 3);
        REQUIRE(sel.selected.size() == 3);
        CHECK(sel.median_scale == doctest::Approx(1.0));
        CHECK(std::find(sel.selected.begin(), sel.selected.end(), 2) != sel.selected.end());
        CHECK(std::find(sel.selected.begin(), sel.selected.end(), 3) != sel.selected.end());
        const bool third = std::find(sel.selected.begin(), sel.selected.end(), 1) != sel.selected.end() ||
                           std::find(sel.selected.begin(), sel.selected.end(), 4) != sel.selected.end();
        CHECK(third);
        CHECK(std::find(sel.selected.begin(), sel.selected.end(), 6) == sel.selected.end());
        const bool negative_excluded = std::any_of(sel.excluded.begin(), sel.excluded.end(),
                                                   [](const ViewExclusion& e) { return e.view_index == 6; });
        CHECK(negative_excluded);
    }
    SUBCASE("identical views") {
        std::vector<PerViewEstimate> v;
        for (int i = 0; i < 8; ++i) v.push_back(per_view(i, 1.25));
        const ViewSelection sel = select_views(v, 2.0, 5);
        CHECK(sel.selected.size() == 5);
    }
    SUBCASE("nothing survives") {
        const std::vector<PerViewEstimate> v{per_view(0, 1.0, 0.1), per_view(1, -1.0)};
        CHECK(classify_views(v, 2.0, 5).selected.empty());
        try {
            select_views(v, 2.0, 5);
            FAIL("expected a pipeline failure");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::PipelineFailure);
        }
    }
}

TEST_CASE("joint initial estimate") {
    const std::vector<TrueView> views{{CameraMeta(0.035, 1.4, 5e-6), 1.3},
                                      {CameraMeta(0.05, 1.8, 5e-6), 2.1},
                                      {CameraMeta(0.085, 1.8, 5e-6), 2.9},
                                      {CameraMeta(0.05, 1.8, 5e-6), 1.6},
                                      {CameraMeta(0.035, 1.4, 5e-6), 2.4}};
    const double s = 2.3;
    const auto samples = forward(views, s, {0.7, 1.0, 1.6});
    const auto metas = metas_of(views);
    const ScaleSolution sol = initial_estimate(samples, metas);
    CHECK(std::abs(sol.s / s - 1.0) < 1e-6);

    SUBCASE("one-pixel blur quantization keeps the scale within 5%") {
        auto noisy = samples;
        for (auto& p : noisy) {
            const double pitch = metas[static_cast<std::size_t>(p.view_index)].sensor_pitch();
            const double r = std::round(blur_to_pixel_radius(p.b, pitch));
            p.b = pixel_radius_to_blur(r, pitch);
            p.gamma = gamma(p.z_prime, p.b, metas[static_cast<std::size_t>(p.view_index)].aperture_diameter());
        }
        CHECK(std::abs(initial_estimate(noisy, metas).s / s - 1.0) < 0.05);
    }
    SUBCASE("single view reduces to the per-view solve") {
        const auto first = std::vector<PatchSample>(samples.begin(), samples.begin() + 2);
        const double joint = initial_estimate(first, metas).s;
        CHECK(joint == doctest::Approx(solve_per_view(first, metas[0]).s).epsilon(1e-12));
    }
    SUBCASE("scaling reconstruction depths scales s inversely") {
        auto scaled = samples;
        for (auto& p : scaled) {
            p.z_prime *= 4.0;
            p.gamma = gamma(p.z_prime, p.b, metas[static_cast<std::size_t>(p.view_index)].aperture_diameter());
        }
        const ScaleSolution other = initial_estimate(scaled, metas);
        CHECK(other.s == doctest::Approx(sol.s / 4.0).epsilon(1e-9));
        for (std::size_t v = 0; v < views.size(); ++v) CHECK(other.g[v] == doctest::Approx(sol.g[v]).epsilon(1e-9));
    }
    SUBCASE("negative scale aborts") {
        auto inverted = samples;
        for (auto& p : inverted) {
            p.b.meters = -p.b.meters;
            p.gamma = gamma(p.z_prime, p.b, metas[static_cast<std::size_t>(p.view_index)].aperture_diameter());
        }
        try {
            initial_estimate(inverted, metas);
            FAIL("expected a negative scale");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NegativeScale);
        }
    }
}
