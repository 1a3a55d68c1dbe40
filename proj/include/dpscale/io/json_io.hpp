#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpscale/pipeline.hpp"
#include "dpscale/synthetic.hpp"
#include "dpscale/view.hpp"

namespace dpscale::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// One view entry as written in a manifest. Paths are kept verbatim
/// (relative paths resolve against the manifest directory) and optics keep
/// the manifest's units so a re-save reproduces the file.
struct ManifestView {
    std::string view_id;
    std::string left_image;
    std::string right_image;
    std::string depth_map;
    double focal_length_mm = 0.0;
    double f_number = 0.0;
    double sensor_pitch_um = 0.0;
    std::string scene;
    std::string aperture_group;

    /// Optics in meters.
    CameraMeta meta(int width = 0, int height = 0) const;
};

struct Manifest {
    int schema_version = kSchemaVersion;
    std::vector<ManifestView> views;
    std::optional<double> ground_truth_scale;
    /// RunConfig overrides, keyed by field name.
    Json parameters = Json::object();
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const std::string& path) const;
};

/// Validates structure, optics and id uniqueness. Throws Error(Manifest)
/// with the offending view named. `check_paths` also requires every
/// referenced file to exist.
Manifest parse_manifest(const Json& json, const std::filesystem::path& base_dir, bool check_paths = true);
Manifest load_manifest(const std::filesystem::path& path);
Json manifest_to_json(const Manifest& manifest);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Loads images and depth maps of every view.
std::vector<DpView> load_views(const Manifest& manifest, double image_gamma = 1.0);

/// `threads` is left out unless requested: it never changes results.
Json config_to_json(const RunConfig& config, bool include_threads = false);
/// Applies the keys of `overrides` onto `config`. Unknown keys or wrong
/// types throw Error(Manifest).
void apply_config(RunConfig& config, const Json& overrides);

Json scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const Json& json);
Json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const Json& json);

/// Blur-stage dump: patch grid, per-patch estimates and selections.
Json observations_to_json(const std::vector<ViewObservations>& observations,
                          const std::vector<DpView>& views, const RunConfig& config);
std::vector<ViewObservations> observations_from_json(const Json& json);

/// Structured run report. Infinite losses are written as null; thread count
/// and timings sit under "runtime", the only block allowed to differ
/// between otherwise identical runs.
Json make_report(const PipelineResult& result, const std::vector<DpView>& views, const RunConfig& config,
                 std::optional<double> ground_truth_scale);
/// The report without its "runtime" block.
Json comparable_report(Json report);

Json read_json(const std::filesystem::path& path);
/// Pretty-printed with sorted keys and a trailing newline.
std::string dump_json(const Json& json);
void write_json(const std::filesystem::path& path, const Json& json);

}  // namespace dpscale::io
