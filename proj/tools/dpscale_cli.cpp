// dpscale: metric scale recovery from dual-pixel views.
//
//   dpscale estimate --manifest M.json --output report.json [config flags]
//   dpscale synth    --out DIR (--scene scene.json | --seed N ...)
//   dpscale blur     --manifest M.json [--view ID ...] --output blur.json
//   dpscale eval     --report R.json [--report ...] [--ground-truth truth.json | --s-gt S]
//
// Exit status: 0 on success, 1 for invalid input, 2 when the pipeline fails.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dpscale/evaluation.hpp"
#include "dpscale/io/dataset.hpp"
#include "dpscale/io/json_io.hpp"
#include "dpscale/parallel.hpp"
#include "dpscale/pipeline.hpp"
#include "dpscale/synthetic.hpp"

namespace {

using dpscale::io::Json;

// Every RunConfig field as an optional flag; only flags that were given
// override the manifest's parameters.
struct ConfigFlags {
    std::optional<int> patch_size, stride, n_v, candidate_count, irls_max_iter, threads;
    std::optional<double> r_max, blur_step, t_p, t_c, t_s, irls_eps, irls_tol, image_gamma;
    std::optional<double> min_finite_fraction, max_inverse_depth_spread, texture_floor, texture_percentile;
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App& app) {
        app.add_option("--patch-size", patch_size, "patch side m in pixels");
        app.add_option("--stride", stride, "patch grid stride in pixels");
        app.add_option("--r-max", r_max, "largest blur radius searched (0: min(15, m/4))");
        app.add_option("--blur-step", blur_step, "blur radius grid step in pixels");
        app.add_option("--t-p", t_p, "minimum blur span of a view in pixels");
        app.add_option("--n-v", n_v, "number of views kept");
        app.add_option("--t-c", t_c, "percentage of patches kept per view");
        app.add_option("--t-s", t_s, "refinement half-width as a fraction of s*");
        app.add_option("--candidate-count", candidate_count, "refinement candidates");
        app.add_option("--irls-eps", irls_eps, "IRLS residual floor");
        app.add_option("--irls-tol", irls_tol, "IRLS relative convergence tolerance");
        app.add_option("--irls-max-iter", irls_max_iter, "IRLS iteration cap");
        app.add_option("--min-finite-fraction", min_finite_fraction, "valid depth share for a patch");
        app.add_option("--max-inverse-depth-spread", max_inverse_depth_spread, "depth homogeneity bound");
        app.add_option("--texture-floor", texture_floor, "minimum texture score");
        app.add_option("--texture-percentile", texture_percentile, "texture percentile cut (0: off)");
        app.add_option("--image-gamma", image_gamma, "exponent applied to decoded intensities");
        app.add_option("--threads", threads, "worker threads (0: all cores)");
        app.add_option("--seed", seed, "run seed, recorded in the report");
    }

    Json overrides() const {
        Json j = Json::object();
        const auto put = [&j](const char* key, const auto& v) {
            if (v) j[key] = *v;
        };
        put("patch_size", patch_size);
        put("stride", stride);
        put("r_max", r_max);
        put("blur_step", blur_step);
        put("t_p", t_p);
        put("n_v", n_v);
        put("t_c", t_c);
        put("t_s", t_s);
        put("candidate_count", candidate_count);
        put("irls_eps", irls_eps);
        put("irls_tol", irls_tol);
        put("irls_max_iter", irls_max_iter);
        put("min_finite_fraction", min_finite_fraction);
        put("max_inverse_depth_spread", max_inverse_depth_spread);
        put("texture_floor", texture_floor);
        put("texture_percentile", texture_percentile);
        put("image_gamma", image_gamma);
        put("threads", threads);
        put("seed", seed);
        return j;
    }
};

dpscale::RunConfig resolve_config(const dpscale::io::Manifest& manifest, const ConfigFlags& flags) {
    dpscale::RunConfig config;
    dpscale::io::apply_config(config, manifest.parameters);
    dpscale::io::apply_config(config, flags.overrides());
    config.threads = dpscale::resolve_threads(config.threads);
    config.validate();
    return config;
}

void emit(const std::string& path, const Json& json) {
    if (path.empty() || path == "-") {
        std::cout << dpscale::io::dump_json(json);
    } else {
        dpscale::io::write_json(path, json);
    }
}

int run_estimate(const std::string& manifest_path, const std::string& output, const std::string& blur_path,
                 const ConfigFlags& flags) {
    const auto manifest = dpscale::io::load_manifest(manifest_path);
    const auto config = resolve_config(manifest, flags);
    const auto views = dpscale::io::load_views(manifest, config.image_gamma);
    dpscale::PipelineResult result;
    if (blur_path.empty()) {
        result = dpscale::run_pipeline(views, config);
    } else {
        auto observations = dpscale::io::observations_from_json(dpscale::io::read_json(blur_path));
        result = dpscale::run_from_observations(views, std::move(observations), config);
    }
    emit(output, dpscale::io::make_report(result, views, config, manifest.ground_truth_scale));
    if (!result.ok()) {
        std::cerr << "estimate failed at " << result.failure->stage << " ("
                  << dpscale::to_string(result.failure->code) << "): " << result.failure->message << '\n';
        return 2;
    }
    std::cerr << "s_initial = " << result.initial->s << "  s_optim = " << result.refinement->s_optim << '\n';
    return 0;
}

int run_blur(const std::string& manifest_path, const std::vector<std::string>& view_ids, const std::string& output,
             const ConfigFlags& flags) {
    const auto manifest = dpscale::io::load_manifest(manifest_path);
    const auto config = resolve_config(manifest, flags);
    const auto views = dpscale::io::load_views(manifest, config.image_gamma);
    const dpscale::BlurEstimator estimator(dpscale::blur_search_candidates(config));
    std::vector<dpscale::ViewObservations> observations;
    for (std::size_t v = 0; v < views.size(); ++v) {
        const bool wanted = view_ids.empty() ||
                            std::find(view_ids.begin(), view_ids.end(), views[v].view_id) != view_ids.end();
        if (wanted) observations.push_back(dpscale::observe_view(views[v], static_cast<int>(v), config, estimator));
    }
    if (observations.size() < std::max<std::size_t>(1, view_ids.size())) {
        throw dpscale::Error(dpscale::ErrorCode::Manifest, "unknown view id requested");
    }
    emit(output, dpscale::io::observations_to_json(observations, views, config));
    return 0;
}

struct SynthFlags {
    std::string scene_path;
    std::string out;
    dpscale::RandomSceneOptions random;
};

int run_synth(const SynthFlags& flags) {
    const dpscale::SceneSpec spec = flags.scene_path.empty()
                                        ? dpscale::random_scene(flags.random)
                                        : dpscale::io::scene_from_json(dpscale::io::read_json(flags.scene_path));
    const auto data = dpscale::render_dataset(spec);
    dpscale::io::write_dataset(flags.out, spec, data);
    std::cerr << "wrote " << data.views.size() << " views to " << flags.out << " (scale " << spec.scale << ")\n";
    return 0;
}

int run_eval(const std::vector<std::string>& reports, const std::string& truth_path, std::optional<double> s_gt,
             const std::string& output) {
    if (!truth_path.empty()) s_gt = dpscale::io::truth_from_json(dpscale::io::read_json(truth_path)).scale;
    std::vector<dpscale::ScaleEntry> entries;
    for (const auto& path : reports) {
        const Json report = dpscale::io::read_json(path);
        double gt = 0.0;
        if (s_gt) {
            gt = *s_gt;
        } else if (report.contains("evaluation")) {
            gt = report["evaluation"]["s_gt"].get<double>();
        } else {
            throw dpscale::Error(dpscale::ErrorCode::Domain, path + ": no ground truth scale given or recorded");
        }
        std::string scene;
        std::string aperture;
        for (const auto& v : report.value("views", Json::array())) {
            if (scene.empty()) scene = v.value("scene", std::string{});
            if (aperture.empty()) aperture = v.value("aperture_group", std::string{});
        }
        for (const char* stage : {"initial", "optim"}) {
            const Json s = report.value(std::string("s_") + stage, Json());
            entries.push_back({scene, path, aperture, stage, s.is_number() ? s.get<double>() : 0.0, gt, 0.0});
        }
    }
    Json out = Json::object();
    for (const char* stage : {"initial", "optim"}) {
        std::vector<dpscale::ScaleEntry> subset;
        for (const auto& e : entries) {
            if (e.stage == stage) subset.push_back(e);
        }
        const auto summary = dpscale::summarize(subset);
        Json rows = Json::array();
        for (const auto& e : summary.entries) {
            rows.push_back({{"report", e.lens}, {"scene", e.scene}, {"aperture", e.aperture}, {"s_est", e.s_est},
                            {"s_gt", e.s_gt}, {"r_s", e.ratio}, {"r_s_rounded", dpscale::round3(e.ratio)}});
        }
        out[stage] = {{"entries", std::move(rows)},
                      {"n_s", summary.count},
                      {"e_s", summary.average_error},
                      {"e_s_rounded", dpscale::round3(summary.average_error)}};
    }
    emit(output, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Metric scale recovery from dual-pixel views"};
    app.require_subcommand(1);

    ConfigFlags estimate_flags;
    std::string manifest_path;
    std::string output;
    std::string blur_path;
    auto* estimate = app.add_subcommand("estimate", "recover the scale of a dataset and write a report");
    estimate->add_option("--manifest", manifest_path, "dataset manifest")->required()->check(CLI::ExistingFile);
    estimate->add_option("--output,-o", output, "report path (default: stdout)");
    estimate->add_option("--blur-observations", blur_path, "reuse a `blur` dump instead of estimating blur")
        ->check(CLI::ExistingFile);
    estimate_flags.add_to(*estimate);

    ConfigFlags blur_flags;
    std::vector<std::string> view_ids;
    auto* blur = app.add_subcommand("blur", "dump per-patch blur estimates");
    blur->add_option("--manifest", manifest_path, "dataset manifest")->required()->check(CLI::ExistingFile);
    blur->add_option("--view", view_ids, "view id (repeatable; default: every view)");
    blur->add_option("--output,-o", output, "output path (default: stdout)");
    blur_flags.add_to(*blur);

    SynthFlags synth_flags;
    auto* synth = app.add_subcommand("synth", "render a synthetic dataset");
    synth->add_option("--out", synth_flags.out, "output directory")->required();
    synth->add_option("--scene", synth_flags.scene_path, "scene description; random scene when omitted")
        ->check(CLI::ExistingFile);
    auto& r = synth_flags.random;
    synth->add_option("--seed", r.seed, "random scene seed");
    synth->add_option("--views", r.views, "number of viewpoints");
    synth->add_option("--planes", r.planes, "planes per view");
    synth->add_option("--width", r.width, "image width");
    synth->add_option("--height", r.height, "image height");
    synth->add_option("--channels", r.channels, "1 or 3");
    synth->add_option("--min-scale", r.min_scale, "lower bound of the drawn scale");
    synth->add_option("--max-scale", r.max_scale, "upper bound of the drawn scale");
    synth->add_option("--max-radius", r.max_radius_px, "largest blur radius in pixels");
    synth->add_option("--sensor-pitch", r.sensor_pitch, "sensor pitch in meters");
    synth->add_option("--f-numbers", r.f_numbers, "render every view at each f-number");
    synth->add_flag("--single-depth", r.single_depth, "one plane per view");
    synth->add_flag("--all-in-focus", r.all_in_focus, "every plane at the focus distance");
    synth->add_option("--noise-sigma", r.noise.sigma, "additive Gaussian noise");
    synth->add_option("--gain-jitter", r.noise.gain_jitter, "per-side gain jitter");
    synth->add_option("--scene-name", r.scene, "scene tag written to the manifest");

    std::vector<std::string> reports;
    std::string truth_path;
    std::optional<double> s_gt;
    auto* eval = app.add_subcommand("eval", "scale ratios and average error of reports");
    eval->add_option("--report", reports, "estimate report (repeatable)")->required()->check(CLI::ExistingFile);
    eval->add_option("--ground-truth", truth_path, "truth.json of a synthetic dataset")->check(CLI::ExistingFile);
    eval->add_option("--s-gt", s_gt, "ground truth scale");
    eval->add_option("--output,-o", output, "output path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*estimate) return run_estimate(manifest_path, output, blur_path, estimate_flags);
        if (*blur) return run_blur(manifest_path, view_ids, output, blur_flags);
        if (*synth) return run_synth(synth_flags);
        if (*eval) return run_eval(reports, truth_path, s_gt, output);
    } catch (const dpscale::Error& e) {
        std::cerr << "error (" << dpscale::to_string(e.code()) << "): " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
