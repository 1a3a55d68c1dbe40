#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpscale/image.hpp"
#include "dpscale/optics.hpp"
#include "dpscale/view.hpp"

namespace dpscale {

struct Region {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool overlaps(const Region& other) const;
    bool operator==(const Region&) const = default;
};

/// Seeded band-limited noise: white noise smoothed by a Gaussian of the
/// given sigma, standardized, then mapped to mean + contrast * noise.
/// Contrast 0 gives a flat, textureless surface.
struct TextureSpec {
    std::uint64_t seed = 1;
    double mean = 0.5;
    double contrast = 0.15;
    double smoothing_sigma = 1.0;
    /// Share of the noise common to all channels.
    double channel_correlation = 0.75;
};

/// Fronto-parallel textured plane at metric depth `depth`.
struct PlaneSpec {
    double depth = 1.0;
    Region region;
    TextureSpec texture;
};

struct ViewSpec {
    std::string view_id;
    double focus_distance = 1.0;
    CameraMeta meta;
    std::vector<PlaneSpec> planes;
    std::string aperture_group;
};

struct NoiseModel {
    double sigma = 0.0;        // additive Gaussian, intensity units
    double gain_jitter = 0.0;  // per-side multiplicative gain in [1 - j, 1 + j]
};

struct SceneSpec {
    double scale = 1.0;  // metric depth = scale * reconstruction depth
    int width = 0;
    int height = 0;
    int channels = 3;
    double background = 0.5;
    NoiseModel noise;
    std::uint64_t seed = 0;
    std::string scene;
    std::vector<ViewSpec> views;
};

struct PlaneTruth {
    double depth = 0.0;
    double z_prime = 0.0;
    BlurSize blur;
    double radius_px = 0.0;
    Region region;
};

struct ViewTruth {
    std::string view_id;
    double focus_distance = 0.0;
    std::vector<PlaneTruth> planes;
};

struct GroundTruth {
    double scale = 0.0;
    std::vector<ViewTruth> views;
};

struct SyntheticDataset {
    std::vector<DpView> views;
    GroundTruth truth;
};

struct DpPair {
    Image left;
    Image right;
};

/// Seeded texture of the given size; one plane per channel.
MultiImage procedural_texture(int width, int height, int channels, const TextureSpec& spec);

/// Left = texture * flip(H_r), right = texture * H_r for pixel radius r,
/// cropped to the valid region (texture size minus kernel side plus one).
/// Throws Error(Dimension) when the kernel exceeds the texture.
DpPair render_dp_pair(const Image& texture, double radius_px);

/// Thin-lens forward model for one patch: the radius follows from depth z,
/// focus g and the optics, then render_dp_pair applies it. Noise, when
/// requested, uses the given seed.
DpPair render_dp_patch(const Image& texture, double z, double g, const CameraMeta& meta,
                       const NoiseModel& noise = {}, std::uint64_t seed = 0);

/// Renders every view of the scene. Throws Error(Spec) for overlapping or
/// out-of-bounds planes, depths not beyond the focal length, or an invalid
/// focus distance.
SyntheticDataset render_dataset(const SceneSpec& spec);

/// Options for random_scene(). Lenses are (focal length mm, f-number) pairs;
/// when `f_numbers` is non-empty every viewpoint is rendered once per
/// f-number with the first lens's focal length, each copy tagged with its
/// aperture group.
struct RandomSceneOptions {
    std::uint64_t seed = 1;
    int views = 5;
    int planes = 3;
    int width = 512;
    int height = 512;
    int channels = 3;
    int layout_cell = 64;  // plane borders fall on multiples of this
    double min_scale = 0.3;
    double max_scale = 3.0;
    double min_focus = 1.0;
    double max_focus = 3.0;
    /// Largest |radius| for the widest aperture, in pixels.
    double max_radius_px = 10.0;
    /// Plane radii (widest aperture) are multiples of this step; 0 draws
    /// them from a continuum.
    double radius_step = 0.5;
    /// Smallest |radius| of a plane that is not in focus.
    double min_abs_radius = 1.0;
    double sensor_pitch = 21.44e-6;
    std::vector<std::pair<double, double>> lenses{{35.0, 1.4}, {50.0, 1.8}, {85.0, 1.8}};
    std::vector<double> f_numbers;
    /// Every plane of a view at the focus distance (radius 0).
    bool all_in_focus = false;
    /// One plane per view covering the whole image.
    bool single_depth = false;
    NoiseModel noise;
    std::string scene = "synthetic";
};

/// Draws scale, focus distances and plane depths. Depths are chosen so the
/// planes of a view have well separated blur radii.
SceneSpec random_scene(const RandomSceneOptions& options);

}  // namespace dpscale
