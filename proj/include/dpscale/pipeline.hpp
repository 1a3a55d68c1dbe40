#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpscale/blur_estimation.hpp"
#include "dpscale/error.hpp"
#include "dpscale/refinement.hpp"
#include "dpscale/scale_solver.hpp"
#include "dpscale/view.hpp"

namespace dpscale {

/// Every tunable of a run. Serialized next to each report.
struct RunConfig {
    int patch_size = 64;
    int stride = 64;
    /// Largest blur radius searched; 0 selects min(15, patch_size / 4).
    double r_max = 0.0;
    double blur_step = 0.5;
    double t_p = 2.0;
    int n_v = 5;
    double t_c = 50.0;
    double t_s = 0.8;
    int candidate_count = 100;
    double irls_eps = 1e-8;
    double irls_tol = 1e-10;
    int irls_max_iter = 100;
    PatchGridOptions grid;
    double image_gamma = 1.0;
    int threads = 0;
    std::uint64_t seed = 0;

    double effective_r_max() const;
    IrlsOptions irls() const { return {irls_max_iter, irls_eps, irls_tol}; }
    /// Throws Error(Domain) for out-of-range values.
    void validate() const;
};

/// Blur-estimation output for one view.
struct ViewObservations {
    int view_index = 0;
    PatchGrid grid;
    /// One estimate per valid patch, in patch-id order.
    std::vector<BlurEstimate> estimates;
    std::vector<int> selected;
    std::vector<std::string> failures;
};

struct StageFailure {
    std::string stage;
    ErrorCode code = ErrorCode::PipelineFailure;
    std::string message;
};

struct PipelineResult {
    std::vector<ViewObservations> observations;
    std::vector<PerViewEstimate> per_view;
    ViewSelection selection;
    std::optional<ScaleSolution> initial;
    std::optional<RefinementRecord> refinement;
    std::optional<StageFailure> failure;
    std::map<std::string, double> timings_ms;

    bool ok() const { return !failure.has_value(); }
};

/// Grid, blur search and patch ranking for one view.
ViewObservations observe_view(const DpView& view, int view_index, const RunConfig& config,
                              const BlurEstimator& estimator);

/// Patch samples of the selected patches of one view.
std::vector<PatchSample> samples_for(const DpView& view, const ViewObservations& obs);

/// Runs every stage after blur estimation on precomputed observations.
/// Failures are recorded in the result, never thrown.
PipelineResult run_from_observations(const std::vector<DpView>& views,
                                     std::vector<ViewObservations> observations,
                                     const RunConfig& config);

/// Full run: blur estimation, per-view solves, view selection, joint
/// initial estimate and scale refinement.
PipelineResult run_pipeline(const std::vector<DpView>& views, const RunConfig& config);

/// Candidate radii used by the blur search under this configuration.
std::vector<double> blur_search_candidates(const RunConfig& config);

}  // namespace dpscale
