#include "dpscale/scale_solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "dpscale/error.hpp"
#include "dpscale/stats.hpp"

namespace dpscale {
namespace {

constexpr double kRankThreshold = 1e-10;

Eigen::VectorXd solve_weighted(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs,
                               const Eigen::VectorXd& sqrt_w) {
    const Eigen::MatrixXd aw = sqrt_w.asDiagonal() * a;
    const Eigen::VectorXd bw = sqrt_w.cwiseProduct(rhs);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aw);
    qr.setThreshold(kRankThreshold);
    if (qr.rank() < a.cols()) {
        throw Error(ErrorCode::Solver, "weighted normal equations are singular");
    }
    Eigen::VectorXd x = qr.solve(bw);
    if (!x.allFinite()) throw Error(ErrorCode::Solver, "solver produced a non-finite solution");
    return x;
}

ScaleSolution unpack(const LinearSystem& system, const Eigen::MatrixXd& a, const Eigen::VectorXd& x) {
    ScaleSolution out;
    const auto n = system.view_indices.size();
    out.view_indices = system.view_indices;
    out.s_bar = x[static_cast<Eigen::Index>(n)];
    out.s = 1.0 / out.s_bar;
    out.negative_scale = !(out.s_bar > 0.0) || !std::isfinite(out.s);
    out.g_bar.resize(n);
    out.g.resize(n);
    out.g_prime.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.g_bar[i] = x[static_cast<Eigen::Index>(i)];
        out.g[i] = 1.0 / out.g_bar[i];
        out.g_prime[i] = out.g[i] / out.s;
    }
    out.residuals = a * x - system.rhs;
    out.l1_residual = out.residuals.lpNorm<1>();
    return out;
}

bool all_equal(std::span<const double> values, double tolerance) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *hi - *lo <= tolerance;
}

}  // namespace

double gamma(double z_prime, BlurSize b, double aperture_diameter) {
    const double g = z_prime * (b.meters + aperture_diameter);
    if (!std::isfinite(g)) throw Error(ErrorCode::Domain, "gamma is not finite");
    return g;
}

PatchSample make_patch_sample(int view_index, int patch_id, double z_prime, BlurSize b,
                              const CameraMeta& meta) {
    DepthSample depth(z_prime);
    return PatchSample{view_index, patch_id, depth.z_prime(), b,
                       gamma(depth.z_prime(), b, meta.aperture_diameter())};
}

int ScaleSolution::column_of(int view_index) const {
    const auto it = std::find(view_indices.begin(), view_indices.end(), view_index);
    return it == view_indices.end() ? -1 : static_cast<int>(it - view_indices.begin());
}

LinearSystem assemble_system(std::span<const PatchSample> samples, std::span<const CameraMeta> metas) {
    if (samples.size() < 2) {
        throw Error(ErrorCode::InsufficientPatches, "the scale system needs at least two samples");
    }
    std::set<int> views;
    for (const auto& s : samples) {
        if (s.view_index < 0 || static_cast<std::size_t>(s.view_index) >= metas.size()) {
            throw Error(ErrorCode::Domain, "sample references view " + std::to_string(s.view_index) +
                                               " without camera metadata");
        }
        views.insert(s.view_index);
    }

    LinearSystem sys;
    sys.view_indices.assign(views.begin(), views.end());
    std::map<int, int> column;
    for (std::size_t i = 0; i < sys.view_indices.size(); ++i) {
        column[sys.view_indices[i]] = static_cast<int>(i);
    }
    const int rows = static_cast<int>(samples.size());
    const int last = static_cast<int>(sys.view_indices.size());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(samples.size() * 2);
    sys.rhs.resize(rows);
    sys.row_map.reserve(samples.size());
    for (int k = 0; k < rows; ++k) {
        const PatchSample& s = samples[static_cast<std::size_t>(k)];
        const CameraMeta& meta = metas[static_cast<std::size_t>(s.view_index)];
        triplets.emplace_back(k, column[s.view_index], s.gamma);
        triplets.emplace_back(k, last, -meta.aperture_diameter());
        sys.rhs[k] = s.b.meters * s.z_prime / meta.focal_length();
        sys.row_map.push_back({s.view_index, s.patch_id});
    }
    sys.a.resize(rows, last + 1);
    sys.a.setFromTriplets(triplets.begin(), triplets.end());

    const Eigen::MatrixXd dense(sys.a);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dense);
    qr.setThreshold(kRankThreshold);
    if (qr.rank() < sys.unknowns()) {
        std::ostringstream msg;
        msg << "rank(A) = " << qr.rank() << " < " << sys.unknowns() << "; views with identical rows:";
        for (int v : sys.view_indices) {
            std::vector<double> gammas;
            for (const auto& s : samples) {
                if (s.view_index == v) gammas.push_back(s.gamma);
            }
            const double scale = std::abs(*std::max_element(gammas.begin(), gammas.end(),
                                                            [](double a, double b) {
                                                                return std::abs(a) < std::abs(b);
                                                            }));
            if (all_equal(gammas, 1e-12 * std::max(scale, 1e-300))) msg << ' ' << v;
        }
        throw Error(ErrorCode::RankDeficient, msg.str());
    }
    return sys;
}

ScaleSolution solve_least_squares(const LinearSystem& system) {
    const Eigen::MatrixXd a(system.a);
    const Eigen::VectorXd x = solve_weighted(a, system.rhs, Eigen::VectorXd::Ones(a.rows()));
    ScaleSolution out = unpack(system, a, x);
    out.objective_history.push_back(out.l1_residual);
    return out;
}

ScaleSolution solve_l1_irls(const LinearSystem& system, const IrlsOptions& options) {
    if (options.max_iter < 0 || !(options.eps > 0.0) || !(options.tol >= 0.0)) {
        throw Error(ErrorCode::Domain, "invalid IRLS options");
    }
    const Eigen::MatrixXd a(system.a);
    Eigen::VectorXd x = solve_weighted(a, system.rhs, Eigen::VectorXd::Ones(a.rows()));
    std::vector<double> history{(a * x - system.rhs).lpNorm<1>()};
    int iterations = 0;
    while (iterations < options.max_iter) {
        const Eigen::VectorXd r = a * x - system.rhs;
        const Eigen::VectorXd sqrt_w =
            r.cwiseAbs().cwiseMax(options.eps).cwiseInverse().cwiseSqrt();
        const Eigen::VectorXd next = solve_weighted(a, system.rhs, sqrt_w);
        ++iterations;
        const double change = (next - x).norm() / std::max(x.norm(), 1e-300);
        x = next;
        history.push_back((a * x - system.rhs).lpNorm<1>());
        if (change < options.tol) break;
    }
    ScaleSolution out = unpack(system, a, x);
    out.iterations = iterations;
    out.objective_history = std::move(history);
    return out;
}

ScaleSolution solve_per_view(std::span<const PatchSample> view_samples, const CameraMeta& meta,
                             const IrlsOptions& options) {
    if (view_samples.size() < 2) {
        throw Error(ErrorCode::InsufficientPatches, "a per-view solve needs at least two patches");
    }
    const int view = view_samples.front().view_index;
    std::vector<double> blur;
    for (const auto& s : view_samples) {
        if (s.view_index != view) throw Error(ErrorCode::Domain, "samples span several views");
        blur.push_back(s.b.meters);
    }
    if (all_equal(blur, 1e-9 * meta.aperture_diameter())) {
        throw Error(ErrorCode::RankDeficient,
                    "view " + std::to_string(view) + ": blur sizes do not vary, scale is unobservable");
    }
    // Re-index to a single-view system so metas need only one entry.
    std::vector<PatchSample> local(view_samples.begin(), view_samples.end());
    for (auto& s : local) s.view_index = 0;
    const CameraMeta metas[] = {meta};
    LinearSystem sys;
    try {
        sys = assemble_system(local, metas);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficient) throw;
        throw Error(ErrorCode::RankDeficient, "view " + std::to_string(view) + ": " + e.what());
    }
    ScaleSolution out = solve_l1_irls(sys, options);
    out.view_indices = {view};
    return out;
}

ViewSelection classify_views(std::span<const PerViewEstimate> views, double t_p, int n_v) {
    if (n_v < 1) throw Error(ErrorCode::Domain, "N_v must be at least 1");
    ViewSelection out;
    std::vector<const PerViewEstimate*> survivors;
    for (const auto& v : views) {
        std::vector<std::string> reasons = v.failures;
        if (!(v.blur_span_px > t_p)) {
            std::ostringstream msg;
            msg << "blur span " << v.blur_span_px << " px <= T_p " << t_p << " px";
            reasons.push_back(msg.str());
        }
        if (v.solution) {
            if (v.solution->negative_scale) reasons.emplace_back("negative per-view scale");
        } else if (v.failures.empty()) {
            reasons.emplace_back("no per-view solution");
        }
        if (reasons.empty()) {
            survivors.push_back(&v);
        } else {
            out.excluded.push_back({v.view_index, std::move(reasons)});
        }
    }
    if (survivors.empty()) return out;

    std::vector<double> scales;
    for (const auto* v : survivors) scales.push_back(v->solution->s);
    out.median_scale = median(scales);
    const double m = out.median_scale;
    std::stable_sort(survivors.begin(), survivors.end(),
                     [m](const PerViewEstimate* a, const PerViewEstimate* b) {
                         const double da = std::abs(a->solution->s - m);
                         const double db = std::abs(b->solution->s - m);
                         if (da != db) return da < db;
                         if (a->solution->l1_residual != b->solution->l1_residual) {
                             return a->solution->l1_residual < b->solution->l1_residual;
                         }
                         return a->view_index < b->view_index;
                     });
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        if (i < static_cast<std::size_t>(n_v)) {
            out.selected.push_back(survivors[i]->view_index);
        } else {
            out.excluded.push_back({survivors[i]->view_index, {"not among the N_v views nearest the median scale"}});
        }
    }
    std::sort(out.selected.begin(), out.selected.end());
    std::sort(out.excluded.begin(), out.excluded.end(),
              [](const ViewExclusion& a, const ViewExclusion& b) { return a.view_index < b.view_index; });
    return out;
}

ViewSelection select_views(std::span<const PerViewEstimate> views, double t_p, int n_v) {
    ViewSelection out = classify_views(views, t_p, n_v);
    if (out.selected.empty()) {
        std::ostringstream msg;
        msg << "no view survived selection:";
        for (const auto& e : out.excluded) {
            msg << " [view " << e.view_index << ":";
            for (const auto& r : e.reasons) msg << ' ' << r << ';';
            msg << ']';
        }
        throw Error(ErrorCode::PipelineFailure, msg.str());
    }
    return out;
}

ScaleSolution initial_estimate(std::span<const PatchSample> selected_samples,
                               std::span<const CameraMeta> metas, const IrlsOptions& options) {
    const LinearSystem sys = assemble_system(selected_samples, metas);
    ScaleSolution out = solve_l1_irls(sys, options);
    if (out.negative_scale) {
        throw Error(ErrorCode::NegativeScale, "joint solve produced a non-positive scale");
    }
    for (std::size_t i = 0; i < out.g_bar.size(); ++i) {
        if (!(out.g_bar[i] > 0.0)) {
            throw Error(ErrorCode::NegativeScale, "joint solve produced a non-positive focus distance for view " +
                                                      std::to_string(out.view_indices[i]));
        }
    }
    return out;
}

}  // namespace dpscale
