#include "dpscale/io/dataset.hpp"

#include "dpscale/io/image_io.hpp"
#include "dpscale/io/pfm.hpp"

namespace dpscale::io {

Manifest write_dataset(const std::filesystem::path& dir, const SceneSpec& spec, const SyntheticDataset& data) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

    Manifest manifest;
    manifest.base_dir = dir;
    manifest.ground_truth_scale = spec.scale;
    for (const DpView& view : data.views) {
        ManifestView entry;
        entry.view_id = view.view_id;
        entry.left_image = view.view_id + "_left.png";
        entry.right_image = view.view_id + "_right.png";
        entry.depth_map = view.view_id + "_depth.pfm";
        entry.focal_length_mm = view.meta.focal_length() * 1e3;
        entry.f_number = view.meta.f_number();
        entry.sensor_pitch_um = view.meta.sensor_pitch() * 1e6;
        entry.scene = view.scene;
        entry.aperture_group = view.aperture_group;
        save_image16(dir / entry.left_image, view.left);
        save_image16(dir / entry.right_image, view.right);
        write_pfm(dir / entry.depth_map, view.depth);
        manifest.views.push_back(std::move(entry));
    }
    save_manifest(dir / "manifest.json", manifest);
    write_json(dir / "truth.json", truth_to_json(data.truth));
    write_json(dir / "scene.json", scene_to_json(spec));
    return manifest;
}

}  // namespace dpscale::io
