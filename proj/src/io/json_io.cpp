#include "dpscale/io/json_io.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "dpscale/evaluation.hpp"
#include "dpscale/io/image_io.hpp"
#include "dpscale/io/pfm.hpp"

namespace dpscale::io {
namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::Manifest, what); }

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_from(const Json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!j.is_number()) bad("expected a number, got " + j.dump());
    return j.get<double>();
}

double positive(const Json& entry, const char* key, const std::string& where) {
    if (!entry.contains(key)) bad(where + ": missing \"" + key + "\"");
    const Json& v = entry.at(key);
    if (!v.is_number()) bad(where + ": \"" + std::string(key) + "\" must be a number");
    const double x = v.get<double>();
    if (!(x > 0.0) || !std::isfinite(x)) bad(where + ": \"" + std::string(key) + "\" must be positive");
    return x;
}

std::string text(const Json& entry, const char* key, const std::string& where, bool required) {
    if (!entry.contains(key)) {
        if (required) bad(where + ": missing \"" + key + "\"");
        return {};
    }
    const Json& v = entry.at(key);
    if (!v.is_string()) bad(where + ": \"" + std::string(key) + "\" must be a string");
    std::string s = v.get<std::string>();
    if (required && s.empty()) bad(where + ": \"" + std::string(key) + "\" is empty");
    return s;
}

void check_keys(const Json& object, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        if (!allowed.contains(key)) bad(where + ": unknown key \"" + key + "\"");
    }
}

Json region_to_json(const Region& r) { return Json::array({r.x, r.y, r.width, r.height}); }

Region region_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::Spec, "region must be [x, y, width, height]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

// Setters for every RunConfig field, keyed by the serialized name.
using Field = std::function<void(RunConfig&, const Json&)>;

template <typename T>
Field setter(T RunConfig::*member) {
    return [member](RunConfig& c, const Json& v) {
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) bad("expected an integer, got " + v.dump());
        } else {
            if (!v.is_number()) bad("expected a number, got " + v.dump());
        }
        c.*member = v.get<T>();
    };
}

template <typename T>
Field grid_setter(T PatchGridOptions::*member) {
    return [member](RunConfig& c, const Json& v) {
        if (!v.is_number()) bad("expected a number, got " + v.dump());
        c.grid.*member = v.get<T>();
    };
}

const std::map<std::string, Field>& config_fields() {
    static const std::map<std::string, Field> fields{
        {"patch_size", setter(&RunConfig::patch_size)},
        {"stride", setter(&RunConfig::stride)},
        {"r_max", setter(&RunConfig::r_max)},
        {"blur_step", setter(&RunConfig::blur_step)},
        {"t_p", setter(&RunConfig::t_p)},
        {"n_v", setter(&RunConfig::n_v)},
        {"t_c", setter(&RunConfig::t_c)},
        {"t_s", setter(&RunConfig::t_s)},
        {"candidate_count", setter(&RunConfig::candidate_count)},
        {"irls_eps", setter(&RunConfig::irls_eps)},
        {"irls_tol", setter(&RunConfig::irls_tol)},
        {"irls_max_iter", setter(&RunConfig::irls_max_iter)},
        {"min_finite_fraction", grid_setter(&PatchGridOptions::min_finite_fraction)},
        {"max_inverse_depth_spread", grid_setter(&PatchGridOptions::max_inverse_depth_spread)},
        {"texture_floor", grid_setter(&PatchGridOptions::texture_floor)},
        {"texture_percentile", grid_setter(&PatchGridOptions::texture_percentile)},
        {"image_gamma", setter(&RunConfig::image_gamma)},
        {"threads", setter(&RunConfig::threads)},
        {"seed", setter(&RunConfig::seed)},
    };
    return fields;
}

Json texture_to_json(const TextureSpec& t) {
    return {{"seed", t.seed},
            {"mean", t.mean},
            {"contrast", t.contrast},
            {"smoothing_sigma", t.smoothing_sigma},
            {"channel_correlation", t.channel_correlation}};
}

TextureSpec texture_from_json(const Json& j) {
    TextureSpec t;
    t.seed = j.value("seed", t.seed);
    t.mean = j.value("mean", t.mean);
    t.contrast = j.value("contrast", t.contrast);
    t.smoothing_sigma = j.value("smoothing_sigma", t.smoothing_sigma);
    t.channel_correlation = j.value("channel_correlation", t.channel_correlation);
    return t;
}

}  // namespace

CameraMeta ManifestView::meta(int width, int height) const {
    return CameraMeta(focal_length_mm * 1e-3, f_number, sensor_pitch_um * 1e-6, width, height);
}

std::filesystem::path Manifest::resolve(const std::string& path) const {
    const std::filesystem::path p(path);
    return p.is_absolute() ? p : base_dir / p;
}

Manifest parse_manifest(const Json& json, const std::filesystem::path& base_dir, bool check_paths) {
    if (!json.is_object()) bad("manifest must be a JSON object");
    check_keys(json, {"schema_version", "views", "ground_truth_scale", "parameters"}, "manifest");
    Manifest m;
    m.base_dir = base_dir;
    if (json.contains("schema_version")) {
        const Json& v = json.at("schema_version");
        if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
            bad("unsupported schema_version " + v.dump());
        }
    }
    if (!json.contains("views") || !json.at("views").is_array() || json.at("views").empty()) {
        bad("manifest needs a non-empty \"views\" array");
    }
    std::set<std::string> ids;
    std::size_t index = 0;
    for (const Json& entry : json.at("views")) {
        std::string where = "view #" + std::to_string(index++);
        if (!entry.is_object()) bad(where + ": must be an object");
        ManifestView v;
        v.view_id = text(entry, "view_id", where, true);
        where = "view \"" + v.view_id + "\"";
        check_keys(entry,
                   {"view_id", "left_image", "right_image", "depth_map", "focal_length_mm", "f_number",
                    "sensor_pitch_um", "scene", "aperture_group"},
                   where);
        if (!ids.insert(v.view_id).second) bad(where + ": duplicate view_id");
        v.left_image = text(entry, "left_image", where, true);
        v.right_image = text(entry, "right_image", where, true);
        v.depth_map = text(entry, "depth_map", where, true);
        v.focal_length_mm = positive(entry, "focal_length_mm", where);
        v.f_number = positive(entry, "f_number", where);
        v.sensor_pitch_um = positive(entry, "sensor_pitch_um", where);
        v.scene = text(entry, "scene", where, false);
        v.aperture_group = text(entry, "aperture_group", where, false);
        if (check_paths) {
            for (const std::string* p : {&v.left_image, &v.right_image, &v.depth_map}) {
                if (!std::filesystem::exists(m.resolve(*p))) bad(where + ": file not found: " + *p);
            }
        }
        m.views.push_back(std::move(v));
    }
    if (json.contains("ground_truth_scale")) {
        m.ground_truth_scale = positive(json, "ground_truth_scale", "manifest");
    }
    if (json.contains("parameters")) {
        if (!json.at("parameters").is_object()) bad("\"parameters\" must be an object");
        m.parameters = json.at("parameters");
        RunConfig probe;
        apply_config(probe, m.parameters);
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    Json json;
    try {
        json = read_json(path);
    } catch (const Json::exception& e) {
        bad(path.string() + ": " + e.what());
    }
    return parse_manifest(json, path.parent_path());
}

Json manifest_to_json(const Manifest& m) {
    Json views = Json::array();
    for (const auto& v : m.views) {
        Json entry{{"view_id", v.view_id},
                   {"left_image", v.left_image},
                   {"right_image", v.right_image},
                   {"depth_map", v.depth_map},
                   {"focal_length_mm", v.focal_length_mm},
                   {"f_number", v.f_number},
                   {"sensor_pitch_um", v.sensor_pitch_um}};
        if (!v.scene.empty()) entry["scene"] = v.scene;
        if (!v.aperture_group.empty()) entry["aperture_group"] = v.aperture_group;
        views.push_back(std::move(entry));
    }
    Json out{{"schema_version", m.schema_version}, {"views", std::move(views)}};
    if (m.ground_truth_scale) out["ground_truth_scale"] = *m.ground_truth_scale;
    if (!m.parameters.empty()) out["parameters"] = m.parameters;
    return out;
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    write_json(path, manifest_to_json(manifest));
}

std::vector<DpView> load_views(const Manifest& manifest, double image_gamma) {
    std::vector<DpView> views;
    for (const auto& v : manifest.views) {
        DpView view{v.view_id,
                    load_image(manifest.resolve(v.left_image), image_gamma),
                    load_image(manifest.resolve(v.right_image), image_gamma),
                    load_depth_map(manifest.resolve(v.depth_map)),
                    v.meta(),
                    v.scene,
                    v.aperture_group};
        view.meta = v.meta(view.left.width(), view.left.height());
        try {
            validate_view(view);
        } catch (const Error& e) {
            throw Error(e.code(), "view \"" + v.view_id + "\": " + e.what());
        }
        views.push_back(std::move(view));
    }
    return views;
}

Json config_to_json(const RunConfig& c, bool include_threads) {
    Json j{{"patch_size", c.patch_size},
           {"stride", c.stride},
           {"r_max", c.r_max},
           {"blur_step", c.blur_step},
           {"t_p", c.t_p},
           {"n_v", c.n_v},
           {"t_c", c.t_c},
           {"t_s", c.t_s},
           {"candidate_count", c.candidate_count},
           {"irls_eps", c.irls_eps},
           {"irls_tol", c.irls_tol},
           {"irls_max_iter", c.irls_max_iter},
           {"min_finite_fraction", c.grid.min_finite_fraction},
           {"max_inverse_depth_spread", c.grid.max_inverse_depth_spread},
           {"texture_floor", c.grid.texture_floor},
           {"texture_percentile", c.grid.texture_percentile},
           {"image_gamma", c.image_gamma},
           {"seed", c.seed}};
    if (include_threads) j["threads"] = c.threads;
    return j;
}

void apply_config(RunConfig& config, const Json& overrides) {
    if (!overrides.is_object()) bad("config overrides must be an object");
    const auto& fields = config_fields();
    for (const auto& [key, value] : overrides.items()) {
        const auto it = fields.find(key);
        if (it == fields.end()) bad("unknown parameter \"" + key + "\"");
        try {
            it->second(config, value);
        } catch (const Error& e) {
            bad("parameter \"" + key + "\": " + e.what());
        }
    }
}

Json scene_to_json(const SceneSpec& spec) {
    Json views = Json::array();
    for (const auto& v : spec.views) {
        Json planes = Json::array();
        for (const auto& p : v.planes) {
            planes.push_back({{"depth", p.depth}, {"region", region_to_json(p.region)},
                              {"texture", texture_to_json(p.texture)}});
        }
        Json entry{{"view_id", v.view_id},
                   {"focus_distance", v.focus_distance},
                   {"focal_length", v.meta.focal_length()},
                   {"f_number", v.meta.f_number()},
                   {"sensor_pitch", v.meta.sensor_pitch()},
                   {"planes", std::move(planes)}};
        if (!v.aperture_group.empty()) entry["aperture_group"] = v.aperture_group;
        views.push_back(std::move(entry));
    }
    return {{"schema_version", kSchemaVersion},
            {"scale", spec.scale},
            {"width", spec.width},
            {"height", spec.height},
            {"channels", spec.channels},
            {"background", spec.background},
            {"noise", {{"sigma", spec.noise.sigma}, {"gain_jitter", spec.noise.gain_jitter}}},
            {"seed", spec.seed},
            {"scene", spec.scene},
            {"views", std::move(views)}};
}

SceneSpec scene_from_json(const Json& j) {
    try {
        SceneSpec spec;
        spec.scale = j.at("scale").get<double>();
        spec.width = j.at("width").get<int>();
        spec.height = j.at("height").get<int>();
        spec.channels = j.value("channels", spec.channels);
        spec.background = j.value("background", spec.background);
        if (j.contains("noise")) {
            spec.noise.sigma = j.at("noise").value("sigma", 0.0);
            spec.noise.gain_jitter = j.at("noise").value("gain_jitter", 0.0);
        }
        spec.seed = j.value("seed", spec.seed);
        spec.scene = j.value("scene", spec.scene);
        for (const Json& v : j.at("views")) {
            ViewSpec view{v.at("view_id").get<std::string>(),
                          v.at("focus_distance").get<double>(),
                          CameraMeta(v.at("focal_length").get<double>(), v.at("f_number").get<double>(),
                                     v.at("sensor_pitch").get<double>(), spec.width, spec.height),
                          {},
                          v.value("aperture_group", std::string{})};
            for (const Json& p : v.at("planes")) {
                view.planes.push_back({p.at("depth").get<double>(), region_from_json(p.at("region")),
                                       p.contains("texture") ? texture_from_json(p.at("texture")) : TextureSpec{}});
            }
            spec.views.push_back(std::move(view));
        }
        return spec;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Spec, std::string("scene description: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::Spec, std::string("scene description: ") + e.what());
    }
}

Json truth_to_json(const GroundTruth& truth) {
    Json views = Json::array();
    for (const auto& v : truth.views) {
        Json planes = Json::array();
        for (const auto& p : v.planes) {
            planes.push_back({{"depth", p.depth},
                              {"z_prime", p.z_prime},
                              {"blur_m", p.blur.meters},
                              {"radius_px", p.radius_px},
                              {"region", region_to_json(p.region)}});
        }
        views.push_back({{"view_id", v.view_id}, {"focus_distance", v.focus_distance}, {"planes", std::move(planes)}});
    }
    return {{"schema_version", kSchemaVersion}, {"scale", truth.scale}, {"views", std::move(views)}};
}

GroundTruth truth_from_json(const Json& j) {
    try {
        GroundTruth truth;
        truth.scale = j.at("scale").get<double>();
        for (const Json& v : j.value("views", Json::array())) {
            ViewTruth view{v.at("view_id").get<std::string>(), v.at("focus_distance").get<double>(), {}};
            for (const Json& p : v.at("planes")) {
                view.planes.push_back({p.at("depth").get<double>(), p.at("z_prime").get<double>(),
                                       BlurSize{p.at("blur_m").get<double>()}, p.at("radius_px").get<double>(),
                                       region_from_json(p.at("region"))});
            }
            truth.views.push_back(std::move(view));
        }
        return truth;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Format, std::string("ground truth: ") + e.what());
    }
}

Json observations_to_json(const std::vector<ViewObservations>& observations, const std::vector<DpView>& views,
                          const RunConfig& config) {
    Json out_views = Json::array();
    for (const auto& obs : observations) {
        Json patches = Json::array();
        for (const auto& p : obs.grid.patches) {
            patches.push_back({{"id", p.id},
                               {"x", p.x},
                               {"y", p.y},
                               {"texture", number_or_null(p.texture)},
                               {"depth_median", number_or_null(p.depth_median)},
                               {"finite_fraction", number_or_null(p.finite_fraction)},
                               {"inverse_depth_spread", number_or_null(p.inverse_depth_spread)},
                               {"valid", p.valid}});
        }
        Json estimates = Json::array();
        for (const auto& e : obs.estimates) {
            estimates.push_back({{"patch_id", e.patch_id},
                                 {"radius_px", e.radius_px},
                                 {"loss", number_or_null(e.loss)},
                                 {"relative_loss", number_or_null(e.relative_loss)}});
        }
        out_views.push_back({{"view_index", obs.view_index},
                             {"view_id", views.at(static_cast<std::size_t>(obs.view_index)).view_id},
                             {"patch_size", obs.grid.patch_size},
                             {"stride", obs.grid.stride},
                             {"patches", std::move(patches)},
                             {"estimates", std::move(estimates)},
                             {"selected", obs.selected},
                             {"failures", obs.failures}});
    }
    return {{"schema_version", kSchemaVersion},
            {"candidates", blur_search_candidates(config)},
            {"views", std::move(out_views)}};
}

std::vector<ViewObservations> observations_from_json(const Json& j) {
    try {
        std::vector<ViewObservations> out;
        for (const Json& v : j.at("views")) {
            ViewObservations obs;
            obs.view_index = v.at("view_index").get<int>();
            obs.grid.patch_size = v.at("patch_size").get<int>();
            obs.grid.stride = v.at("stride").get<int>();
            for (const Json& p : v.at("patches")) {
                obs.grid.patches.push_back({p.at("id").get<int>(), p.at("x").get<int>(), p.at("y").get<int>(),
                                            number_from(p.at("texture")), number_from(p.at("depth_median")),
                                            number_from(p.at("finite_fraction")),
                                            number_from(p.at("inverse_depth_spread")), p.at("valid").get<bool>()});
            }
            for (const Json& e : v.at("estimates")) {
                BlurEstimate est;
                est.patch_id = e.at("patch_id").get<int>();
                est.view_id = obs.view_index;
                est.radius_px = e.at("radius_px").get<double>();
                est.loss = number_from(e.at("loss"));
                est.relative_loss = number_from(e.at("relative_loss"));
                obs.estimates.push_back(est);
            }
            obs.selected = v.at("selected").get<std::vector<int>>();
            obs.failures = v.at("failures").get<std::vector<std::string>>();
            out.push_back(std::move(obs));
        }
        return out;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Format, std::string("blur observations: ") + e.what());
    }
}

Json make_report(const PipelineResult& result, const std::vector<DpView>& views, const RunConfig& config,
                 std::optional<double> ground_truth_scale) {
    Json report{{"schema_version", kSchemaVersion}, {"status", result.ok() ? "ok" : "failed"}};
    if (result.failure) {
        report["failure"] = {{"stage", result.failure->stage},
                             {"error", std::string(to_string(result.failure->code))},
                             {"message", result.failure->message}};
    }

    std::map<int, std::vector<std::string>> exclusions;
    for (const auto& e : result.selection.excluded) exclusions[e.view_index] = e.reasons;
    std::set<int> selected(result.selection.selected.begin(), result.selection.selected.end());

    Json out_views = Json::array();
    for (const auto& obs : result.observations) {
        const DpView& view = views.at(static_cast<std::size_t>(obs.view_index));
        Json entry{{"view_id", view.view_id},
                   {"view_index", obs.view_index},
                   {"valid_patches", obs.grid.valid_count()},
                   {"selected", selected.contains(obs.view_index)}};
        if (!view.scene.empty()) entry["scene"] = view.scene;
        if (!view.aperture_group.empty()) entry["aperture_group"] = view.aperture_group;

        Json patches = Json::array();
        for (int id : obs.selected) {
            const PatchRecord& rec = obs.grid.patches.at(static_cast<std::size_t>(id));
            for (const auto& e : obs.estimates) {
                if (e.patch_id != id) continue;
                patches.push_back({{"id", id},
                                   {"x", rec.x},
                                   {"y", rec.y},
                                   {"z_prime", number_or_null(rec.depth_median)},
                                   {"radius_px", e.radius_px},
                                   {"relative_loss", number_or_null(e.relative_loss)}});
            }
        }
        entry["selected_patches"] = std::move(patches);

        for (const auto& pv : result.per_view) {
            if (pv.view_index != obs.view_index) continue;
            entry["blur_span_px"] = pv.blur_span_px;
            if (pv.solution) {
                entry["per_view"] = {{"s", number_or_null(pv.solution->s)},
                                     {"g_bar", number_or_null(pv.solution->g_bar.front())},
                                     {"l1_residual", number_or_null(pv.solution->l1_residual)}};
            }
            if (!pv.failures.empty()) entry["failures"] = pv.failures;
        }
        if (exclusions.contains(obs.view_index)) entry["exclusion_reasons"] = exclusions[obs.view_index];
        if (result.initial) {
            const int col = result.initial->column_of(obs.view_index);
            if (col >= 0) {
                const auto c = static_cast<std::size_t>(col);
                entry["g_bar"] = result.initial->g_bar[c];
                entry["g"] = result.initial->g[c];
                entry["g_prime"] = result.initial->g_prime[c];
            }
        }
        out_views.push_back(std::move(entry));
    }
    report["views"] = std::move(out_views);
    report["selection"] = {{"selected", result.selection.selected},
                           {"median_scale", number_or_null(result.selection.median_scale)}};

    report["s_initial"] = result.initial ? number_or_null(result.initial->s) : Json(nullptr);
    report["s_optim"] = result.refinement ? Json(result.refinement->s_optim) : Json(nullptr);
    if (result.initial) {
        report["initial"] = {{"s", number_or_null(result.initial->s)},
                             {"s_bar", number_or_null(result.initial->s_bar)},
                             {"l1_residual", number_or_null(result.initial->l1_residual)},
                             {"iterations", result.initial->iterations},
                             {"objective_history", result.initial->objective_history}};
    }
    if (result.refinement) {
        const RefinementRecord& r = *result.refinement;
        Json curve = Json::array();
        for (std::size_t i = 0; i < r.losses.size(); ++i) {
            curve.push_back({{"s", r.candidates.values[i]}, {"loss", number_or_null(r.losses[i])}});
        }
        report["refinement"] = {{"s_star", r.s_star},
                                {"s_optim", r.s_optim},
                                {"best_index", r.best_index},
                                {"t_s", r.candidates.half_width},
                                {"count", r.candidates.count},
                                {"warnings", r.candidates.warnings},
                                {"degenerate_contributions", r.degenerate},
                                {"loss_curve", std::move(curve)}};
    }
    if (ground_truth_scale) {
        const double gt = *ground_truth_scale;
        Json eval{{"s_gt", gt}};
        for (const auto& [stage, value] : {std::pair{"initial", report["s_initial"]},
                                           std::pair{"optim", report["s_optim"]}}) {
            if (value.is_number()) {
                const double ratio = scale_ratio(value.get<double>(), gt);
                const double err = average_error(std::span<const double>(&ratio, 1));
                eval[stage] = {{"r_s", ratio}, {"e_s", err}, {"r_s_rounded", round3(ratio)}, {"e_s_rounded", round3(err)}};
            }
        }
        report["evaluation"] = std::move(eval);
    }
    report["config"] = config_to_json(config);
    report["runtime"] = {{"threads", config.threads}, {"timings_ms", result.timings_ms}};
    return report;
}

Json comparable_report(Json report) {
    report.erase("runtime");
    return report;
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::Format, path.string() + ": " + e.what());
    }
}

std::string dump_json(const Json& json) { return json.dump(2) + "\n"; }

void write_json(const std::filesystem::path& path, const Json& json) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << dump_json(json);
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace dpscale::io
