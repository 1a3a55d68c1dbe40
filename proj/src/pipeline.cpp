#include "dpscale/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dpscale/parallel.hpp"

namespace dpscale {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

StageFailure failure_from(const std::string& stage, const Error& e) {
    return {stage, e.code(), e.what()};
}

}  // namespace

double RunConfig::effective_r_max() const {
    return r_max > 0.0 ? r_max : default_max_radius(patch_size);
}

void RunConfig::validate() const {
    const auto fail = [](const std::string& what) { throw Error(ErrorCode::Domain, "config: " + what); };
    if (patch_size < 8) fail("patch_size must be >= 8");
    if (stride < 1) fail("stride must be >= 1");
    if (r_max < 0.0) fail("r_max must be >= 0");
    if (!(blur_step > 0.0)) fail("blur_step must be positive");
    if (2 * static_cast<int>(std::ceil(effective_r_max())) + 1 > patch_size) {
        fail("r_max too large for the patch size");
    }
    if (t_p < 0.0) fail("t_p must be >= 0");
    if (n_v < 1) fail("n_v must be >= 1");
    if (!(t_c > 0.0 && t_c <= 100.0)) fail("t_c must lie in (0, 100]");
    if (!(t_s > 0.0)) fail("t_s must be positive");
    if (candidate_count < 2) fail("candidate_count must be >= 2");
    if (!(irls_eps > 0.0) || irls_tol < 0.0 || irls_max_iter < 0) fail("invalid IRLS settings");
    if (!(grid.min_finite_fraction >= 0.0 && grid.min_finite_fraction <= 1.0)) {
        fail("min_finite_fraction must lie in [0, 1]");
    }
    if (!(grid.texture_percentile >= 0.0 && grid.texture_percentile < 100.0)) {
        fail("texture_percentile must lie in [0, 100)");
    }
    if (!(image_gamma > 0.0)) fail("image_gamma must be positive");
}

std::vector<double> blur_search_candidates(const RunConfig& config) {
    return blur_candidates(config.effective_r_max(), config.blur_step);
}

ViewObservations observe_view(const DpView& view, int view_index, const RunConfig& config,
                              const BlurEstimator& estimator) {
    ViewObservations obs;
    obs.view_index = view_index;
    obs.grid = build_patch_grid(view, config.patch_size, config.stride, config.grid);

    std::vector<const PatchRecord*> valid;
    for (const auto& p : obs.grid.patches) {
        if (p.valid) valid.push_back(&p);
    }
    if (valid.empty()) {
        obs.failures.emplace_back("no valid patches");
        return obs;
    }

    const Image& left = view.left.estimation_channel();
    const Image& right = view.right.estimation_channel();
    const int m = config.patch_size;
    std::vector<std::optional<BlurEstimate>> slots(valid.size());
    parallel_for(valid.size(), config.threads, [&](std::size_t i) {
        const PatchRecord& p = *valid[i];
        try {
            BlurEstimate e = estimator.estimate(left.crop(p.x, p.y, m, m), right.crop(p.x, p.y, m, m));
            e.patch_id = p.id;
            e.view_id = view_index;
            slots[i] = e;
        } catch (const Error& err) {
            if (err.code() != ErrorCode::DegeneratePatch) throw;
        }
    });
    for (auto& s : slots) {
        if (s) obs.estimates.push_back(*s);
    }
    // Patches the estimator rejected as degenerate are no longer valid.
    for (auto& p : obs.grid.patches) {
        if (!p.valid) continue;
        const bool estimated = std::any_of(obs.estimates.begin(), obs.estimates.end(),
                                           [&](const BlurEstimate& e) { return e.patch_id == p.id; });
        if (!estimated) p.valid = false;
    }

    try {
        obs.selected = select_top_patches(obs.grid, obs.estimates, config.t_c);
        std::sort(obs.selected.begin(), obs.selected.end());
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientPatches) throw;
        obs.failures.emplace_back(std::string("insufficient patches: ") + e.what());
    }
    return obs;
}

std::vector<PatchSample> samples_for(const DpView& view, const ViewObservations& obs) {
    std::vector<PatchSample> samples;
    for (int id : obs.selected) {
        const auto est = std::find_if(obs.estimates.begin(), obs.estimates.end(),
                                      [id](const BlurEstimate& e) { return e.patch_id == id; });
        const PatchRecord& rec = obs.grid.patches.at(static_cast<std::size_t>(id));
        const BlurSize b = pixel_radius_to_blur(est->radius_px, view.meta.sensor_pitch());
        samples.push_back(make_patch_sample(obs.view_index, id, rec.depth_median, b, view.meta));
    }
    return samples;
}

PipelineResult run_from_observations(const std::vector<DpView>& views,
                                     std::vector<ViewObservations> observations,
                                     const RunConfig& config) {
    PipelineResult result;
    result.observations = std::move(observations);
    std::vector<CameraMeta> metas;
    for (const auto& v : views) metas.push_back(v.meta);

    // Per-view solves.
    auto t0 = Clock::now();
    for (const auto& obs : result.observations) {
        PerViewEstimate est;
        est.view_index = obs.view_index;
        est.failures = obs.failures;
        if (obs.failures.empty()) {
            const DpView& view = views.at(static_cast<std::size_t>(obs.view_index));
            std::vector<double> radii;
            for (int id : obs.selected) {
                for (const auto& e : obs.estimates) {
                    if (e.patch_id == id) radii.push_back(e.radius_px);
                }
            }
            const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
            // Span of the signed blur diameter in pixels.
            est.blur_span_px = 2.0 * (*hi - *lo);
            try {
                est.solution = solve_per_view(samples_for(view, obs), view.meta, config.irls());
            } catch (const Error& e) {
                est.failures.push_back(std::string(to_string(e.code())) + ": " + e.what());
            }
        }
        result.per_view.push_back(std::move(est));
    }
    result.timings_ms["per_view_solve"] = elapsed_ms(t0);

    result.selection = classify_views(result.per_view, config.t_p, config.n_v);
    if (result.selection.selected.empty()) {
        // Report a rank deficiency when it is what sank every view.
        const bool all_rank = !result.per_view.empty() &&
                              std::all_of(result.per_view.begin(), result.per_view.end(), [](const auto& v) {
                                  return std::any_of(v.failures.begin(), v.failures.end(), [](const auto& f) {
                                      return f.rfind("rank_deficient", 0) == 0;
                                  });
                              });
        try {
            if (all_rank) {
                throw Error(ErrorCode::RankDeficient,
                            "every view has a rank-deficient scale system (no depth or blur variation)");
            }
            select_views(result.per_view, config.t_p, config.n_v);
        } catch (const Error& e) {
            result.failure = failure_from("view_selection", e);
        }
        return result;
    }

    // Joint initial estimate over the selected views.
    t0 = Clock::now();
    std::vector<PatchSample> joint;
    for (int v : result.selection.selected) {
        const auto& obs = *std::find_if(result.observations.begin(), result.observations.end(),
                                        [v](const ViewObservations& o) { return o.view_index == v; });
        const auto s = samples_for(views.at(static_cast<std::size_t>(v)), obs);
        joint.insert(joint.end(), s.begin(), s.end());
    }
    try {
        result.initial = initial_estimate(joint, metas, config.irls());
    } catch (const Error& e) {
        result.failure = failure_from("initial_estimate", e);
        return result;
    }
    result.timings_ms["initial_estimate"] = elapsed_ms(t0);

    // Refinement on the same views and patches.
    t0 = Clock::now();
    try {
        std::vector<RefinementView> rviews;
        const int m = config.patch_size;
        for (int v : result.selection.selected) {
            const DpView& view = views.at(static_cast<std::size_t>(v));
            const auto& obs = *std::find_if(result.observations.begin(), result.observations.end(),
                                            [v](const ViewObservations& o) { return o.view_index == v; });
            const int col = result.initial->column_of(v);
            RefinementView rv{v, result.initial->g_prime[static_cast<std::size_t>(col)], view.meta, {}};
            for (int id : obs.selected) {
                const PatchRecord& rec = obs.grid.patches.at(static_cast<std::size_t>(id));
                RefinementPatch patch;
                patch.patch_id = id;
                patch.z_prime = rec.depth_median;
                for (const auto& c : view.left.channels) patch.left.push_back(c.crop(rec.x, rec.y, m, m));
                for (const auto& c : view.right.channels) patch.right.push_back(c.crop(rec.x, rec.y, m, m));
                rv.patches.push_back(std::move(patch));
            }
            rviews.push_back(std::move(rv));
        }
        const CrossViewObjective objective(std::move(rviews));
        result.refinement =
            refine_scale(result.initial->s, objective, config.t_s, config.candidate_count, config.threads);
    } catch (const Error& e) {
        result.failure = failure_from("refinement", e);
    }
    result.timings_ms["refinement"] = elapsed_ms(t0);
    return result;
}

PipelineResult run_pipeline(const std::vector<DpView>& views, const RunConfig& config) {
    config.validate();
    const auto t0 = Clock::now();
    std::vector<ViewObservations> observations;
    std::optional<StageFailure> failure;
    try {
        if (views.empty()) throw Error(ErrorCode::PipelineFailure, "no views");
        const BlurEstimator estimator(blur_search_candidates(config));
        for (std::size_t v = 0; v < views.size(); ++v) {
            observations.push_back(observe_view(views[v], static_cast<int>(v), config, estimator));
        }
    } catch (const Error& e) {
        failure = failure_from("blur_estimation", e);
    }
    const double blur_ms = elapsed_ms(t0);
    if (failure) {
        PipelineResult result;
        result.observations = std::move(observations);
        result.failure = failure;
        result.timings_ms["blur_estimation"] = blur_ms;
        return result;
    }
    PipelineResult result = run_from_observations(views, std::move(observations), config);
    result.timings_ms["blur_estimation"] = blur_ms;
    return result;
}

}  // namespace dpscale
