#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dpscale/optics.hpp"

namespace dpscale {

/// One patch observation: reconstruction-unit depth and the measured blur.
struct PatchSample {
    int view_index = 0;
    int patch_id = 0;
    double z_prime = 0.0;
    BlurSize b;
    double gamma = 0.0;  // z' (b + l)
};

/// gamma = z' (b + l). Inputs must share length units.
double gamma(double z_prime, BlurSize b, double aperture_diameter);

/// Builds a sample with gamma filled in from the view's aperture.
PatchSample make_patch_sample(int view_index, int patch_id, double z_prime, BlurSize b,
                              const CameraMeta& meta);

/// Block-sparse system A x = rhs over x = [gbar_1 .. gbar_n, sbar].
/// Row k (view i, patch j) holds gamma_ij in view i's column and -l_i in the
/// last column; rhs_k = b_ij z'_ij / f_i.
struct LinearSystem {
    struct Row {
        int view_index;
        int patch_id;
    };

    Eigen::SparseMatrix<double> a;
    Eigen::VectorXd rhs;
    std::vector<Row> row_map;
    /// Column i holds the inverse focus distance of view_indices[i].
    std::vector<int> view_indices;

    int unknowns() const { return static_cast<int>(view_indices.size()) + 1; }
};

/// `metas` is indexed by PatchSample::view_index. Throws
/// Error(InsufficientPatches) for fewer than two samples and
/// Error(RankDeficient) when rank(A) < n + 1, naming the views whose rows
/// are all identical.
LinearSystem assemble_system(std::span<const PatchSample> samples, std::span<const CameraMeta> metas);

struct IrlsOptions {
    int max_iter = 100;
    double eps = 1e-8;
    double tol = 1e-10;
};

struct ScaleSolution {
    double s = 0.0;
    double s_bar = 0.0;
    std::vector<int> view_indices;
    std::vector<double> g_bar;    // 1 / g_i, per column
    std::vector<double> g;        // metric focus distances g_i
    std::vector<double> g_prime;  // g_i / s, reconstruction units
    Eigen::VectorXd residuals;
    double l1_residual = 0.0;
    int iterations = 0;
    /// L1 objective after the initial least-squares solve and each
    /// reweighting step.
    std::vector<double> objective_history;
    /// Set when sbar <= 0 or the scale is not finite.
    bool negative_scale = false;

    /// Index of a view in view_indices, or -1.
    int column_of(int view_index) const;
};

/// Approximately minimizes ||A x - rhs||_1 by iteratively reweighted least
/// squares with weights 1 / max(|residual|, eps), starting from the
/// least-squares solution. Throws Error(Solver) if a weighted system is
/// singular or yields a non-finite solution.
ScaleSolution solve_l1_irls(const LinearSystem& system, const IrlsOptions& options = {});

/// Plain unweighted least squares on the same system.
ScaleSolution solve_least_squares(const LinearSystem& system);

/// Two-unknown solve for one view. Throws Error(InsufficientPatches) for
/// fewer than two samples and Error(RankDeficient) when the blur sizes do
/// not vary (the scale is then unobservable) or the depths do not.
ScaleSolution solve_per_view(std::span<const PatchSample> view_samples, const CameraMeta& meta,
                             const IrlsOptions& options = {});

/// Per-view outcome fed to view selection.
struct PerViewEstimate {
    int view_index = 0;
    /// max - min of the selected patches' signed blur sizes, in pixels.
    double blur_span_px = 0.0;
    std::optional<ScaleSolution> solution;
    /// Non-empty when the per-view stage already failed for this view.
    std::vector<std::string> failures;
};

struct ViewExclusion {
    int view_index = 0;
    std::vector<std::string> reasons;
};

struct ViewSelection {
    std::vector<int> selected;
    std::vector<ViewExclusion> excluded;
    /// Median of the per-view scales that survived the exclusions.
    double median_scale = 0.0;
};

/// Drops views whose blur span is <= t_p pixels, views with a failed or
/// negative per-view scale, then keeps the n_v views whose scale is nearest
/// the median of the survivors (ties: lower per-view L1 residual, then
/// lower index). Never throws for an empty result.
ViewSelection classify_views(std::span<const PerViewEstimate> views, double t_p, int n_v);

/// classify_views, throwing Error(PipelineFailure) with the per-view
/// exclusion reasons when no view survives.
ViewSelection select_views(std::span<const PerViewEstimate> views, double t_p, int n_v);

/// Joint IRLS solve over every sample of the selected views. Throws
/// Error(NegativeScale) if the scale or any selected view's inverse focus
/// distance is not positive.
ScaleSolution initial_estimate(std::span<const PatchSample> selected_samples,
                               std::span<const CameraMeta> metas, const IrlsOptions& options = {});

}  // namespace dpscale
