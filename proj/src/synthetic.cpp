#include "dpscale/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dpscale/error.hpp"
#include "dpscale/psf.hpp"
#include "dpscale/stats.hpp"

namespace dpscale {
namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<double> gaussian_taps(double sigma) {
    if (sigma <= 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * i * i / (sigma * sigma));
        taps[static_cast<std::size_t>(i + radius)] = w;
        total += w;
    }
    for (double& w : taps) w /= total;
    return taps;
}

// Separable smoothing, valid region only.
Image smooth_valid(const Image& in, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    Image horizontal(in.width() - k + 1, in.height());
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < horizontal.width(); ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += taps[static_cast<std::size_t>(t)] * in(x + t, y);
            horizontal(x, y) = acc;
        }
    }
    Image out(horizontal.width(), in.height() - k + 1);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            double acc = 0.0;
            for (int t = 0; t < k; ++t) acc += taps[static_cast<std::size_t>(t)] * horizontal(x, y + t);
            out(x, y) = acc;
        }
    }
    return out;
}

Image standardized_noise(int width, int height, double sigma, std::mt19937_64& rng) {
    const auto taps = gaussian_taps(sigma);
    const int pad = static_cast<int>(taps.size()) - 1;
    std::normal_distribution<double> normal(0.0, 1.0);
    Image white(width + pad, height + pad);
    for (double& v : white.pixels()) v = normal(rng);
    Image smooth = smooth_valid(white, taps);
    const double mean = mean_of(smooth.pixels());
    const double sd = stddev_of(smooth.pixels(), mean);
    for (double& v : smooth.pixels()) v = (v - mean) / sd;
    return smooth;
}

void apply_noise(Image& img, double gain, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, sigma > 0.0 ? sigma : 1.0);
    for (double& v : img.pixels()) {
        v *= gain;
        if (sigma > 0.0) v += normal(rng);
    }
}

void check_spec(const SceneSpec& spec) {
    const auto fail = [](const std::string& what) { throw Error(ErrorCode::Spec, what); };
    if (!(spec.scale > 0.0)) fail("scene scale must be positive");
    if (spec.width < 1 || spec.height < 1) fail("image size must be positive");
    if (spec.channels != 1 && spec.channels != 3) fail("scenes have 1 or 3 channels");
    if (spec.views.empty()) fail("scene has no views");
    for (const auto& view : spec.views) {
        const double f = view.meta.focal_length();
        if (!(view.focus_distance > f)) fail("view " + view.view_id + ": focus distance must exceed f");
        for (std::size_t i = 0; i < view.planes.size(); ++i) {
            const PlaneSpec& p = view.planes[i];
            if (!(p.depth > f) || !std::isfinite(p.depth)) {
                fail("view " + view.view_id + ": plane depth must exceed the focal length");
            }
            const Region& r = p.region;
            if (r.width < 1 || r.height < 1 || r.x < 0 || r.y < 0 || r.x + r.width > spec.width ||
                r.y + r.height > spec.height) {
                fail("view " + view.view_id + ": plane region outside the image");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (r.overlaps(view.planes[j].region)) {
                    fail("view " + view.view_id + ": overlapping plane placements");
                }
            }
        }
    }
}

}  // namespace

bool Region::overlaps(const Region& o) const {
    return x < o.x + o.width && o.x < x + width && y < o.y + o.height && o.y < y + height;
}

MultiImage procedural_texture(int width, int height, int channels, const TextureSpec& spec) {
    if (width < 1 || height < 1 || channels < 1) {
        throw Error(ErrorCode::Dimension, "texture size must be positive");
    }
    MultiImage out;
    if (spec.contrast == 0.0) {
        out.channels.assign(static_cast<std::size_t>(channels), Image(width, height, spec.mean));
        return out;
    }
    std::mt19937_64 rng(mix_seed(spec.seed, 0));
    const Image common = standardized_noise(width, height, spec.smoothing_sigma, rng);
    const double rho = std::clamp(spec.channel_correlation, 0.0, 1.0);
    const double own_weight = std::sqrt(1.0 - rho * rho);
    for (int c = 0; c < channels; ++c) {
        const Image own = standardized_noise(width, height, spec.smoothing_sigma, rng);
        Image plane(width, height);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const double n = rho * common(x, y) + own_weight * own(x, y);
                plane(x, y) = std::clamp(spec.mean + spec.contrast * n, 0.0, 1.0);
            }
        }
        out.channels.push_back(std::move(plane));
    }
    return out;
}

DpPair render_dp_pair(const Image& texture, double radius_px) {
    const PsfKernel right = right_psf(radius_px);
    return {convolve(texture, flip_h(right)), convolve(texture, right)};
}

DpPair render_dp_patch(const Image& texture, double z, double g, const CameraMeta& meta,
                       const NoiseModel& noise, std::uint64_t seed) {
    const BlurSize b = thin_lens_blur(z, g, meta.focal_length(), meta.aperture_diameter());
    DpPair pair = render_dp_pair(texture, blur_to_pixel_radius(b, meta.sensor_pitch()));
    if (noise.sigma > 0.0 || noise.gain_jitter > 0.0) {
        std::mt19937_64 rng(mix_seed(seed, 17));
        std::uniform_real_distribution<double> gain(1.0 - noise.gain_jitter, 1.0 + noise.gain_jitter);
        const double gl = gain(rng);
        const double gr = gain(rng);
        apply_noise(pair.left, gl, noise.sigma, rng);
        apply_noise(pair.right, gr, noise.sigma, rng);
    }
    return pair;
}

SyntheticDataset render_dataset(const SceneSpec& spec) {
    check_spec(spec);
    SyntheticDataset data;
    data.truth.scale = spec.scale;
    for (std::size_t v = 0; v < spec.views.size(); ++v) {
        const ViewSpec& vs = spec.views[v];
        const double f = vs.meta.focal_length();
        const double l = vs.meta.aperture_diameter();
        const double pitch = vs.meta.sensor_pitch();

        DpView view{vs.view_id, {}, {}, Image(spec.width, spec.height, std::nan("")),
                    CameraMeta(f, vs.meta.f_number(), pitch, spec.width, spec.height), spec.scene,
                    vs.aperture_group};
        view.left.channels.assign(static_cast<std::size_t>(spec.channels),
                                  Image(spec.width, spec.height, spec.background));
        view.right.channels = view.left.channels;

        ViewTruth truth{vs.view_id, vs.focus_distance, {}};
        for (const PlaneSpec& plane : vs.planes) {
            const BlurSize b = thin_lens_blur(plane.depth, vs.focus_distance, f, l);
            const double r = blur_to_pixel_radius(b, pitch);
            const Region& reg = plane.region;
            const int margin = psf_side(r) / 2;
            const MultiImage tex = procedural_texture(reg.width + 2 * margin, reg.height + 2 * margin,
                                                      spec.channels, plane.texture);
            for (int c = 0; c < spec.channels; ++c) {
                const DpPair pair = render_dp_pair(tex.channels[static_cast<std::size_t>(c)], r);
                Image& left = view.left.channels[static_cast<std::size_t>(c)];
                Image& right = view.right.channels[static_cast<std::size_t>(c)];
                for (int y = 0; y < reg.height; ++y) {
                    for (int x = 0; x < reg.width; ++x) {
                        left(reg.x + x, reg.y + y) = pair.left(x, y);
                        right(reg.x + x, reg.y + y) = pair.right(x, y);
                    }
                }
            }
            const double z_prime = plane.depth / spec.scale;
            for (int y = reg.y; y < reg.y + reg.height; ++y) {
                for (int x = reg.x; x < reg.x + reg.width; ++x) view.depth(x, y) = z_prime;
            }
            truth.planes.push_back({plane.depth, z_prime, b, r, reg});
        }

        if (spec.noise.sigma > 0.0 || spec.noise.gain_jitter > 0.0) {
            std::mt19937_64 rng(mix_seed(spec.seed, 1000 + v));
            std::uniform_real_distribution<double> gain(1.0 - spec.noise.gain_jitter,
                                                        1.0 + spec.noise.gain_jitter);
            const double gl = gain(rng);
            const double gr = gain(rng);
            for (auto& c : view.left.channels) apply_noise(c, gl, spec.noise.sigma, rng);
            for (auto& c : view.right.channels) apply_noise(c, gr, spec.noise.sigma, rng);
        }
        data.views.push_back(std::move(view));
        data.truth.views.push_back(std::move(truth));
    }
    return data;
}

namespace {

// Uniform draw on [lo, hi] avoiding (-min_abs, min_abs); with a positive step
// the draw is restricted to multiples of the step.
double draw_radius(double lo, double hi, double step, double min_abs, std::mt19937_64& rng) {
    std::vector<double> allowed;
    if (step > 0.0) {
        for (auto k = static_cast<long>(std::ceil(lo / step)); k * step <= hi; ++k) {
            const double r = k * step;
            if (std::abs(r) >= min_abs) allowed.push_back(r);
        }
        if (!allowed.empty()) {
            return allowed[std::uniform_int_distribution<std::size_t>(0, allowed.size() - 1)(rng)];
        }
    }
    std::uniform_real_distribution<double> u(lo, hi);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double r = u(rng);
        if (std::abs(r) >= min_abs) return r;
    }
    throw Error(ErrorCode::Spec, "no blur radius satisfies the plane constraints");
}

}  // namespace

SceneSpec random_scene(const RandomSceneOptions& o) {
    if (o.views < 1 || o.planes < 1 || o.lenses.empty() || o.layout_cell < 1) {
        throw Error(ErrorCode::Spec, "random scene needs views, planes and lenses");
    }
    std::mt19937_64 rng(mix_seed(o.seed, 42));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    SceneSpec spec;
    spec.scale = uniform(o.min_scale, o.max_scale);
    spec.width = o.width;
    spec.height = o.height;
    spec.channels = o.channels;
    spec.noise = o.noise;
    spec.seed = o.seed;
    spec.scene = o.scene;

    // Vertical bands with borders on the layout grid.
    const int planes = o.single_depth ? 1 : o.planes;
    const int cells = std::max(1, o.width / o.layout_cell);
    std::vector<Region> bands;
    for (int p = 0; p < planes; ++p) {
        const int c0 = static_cast<int>(std::lround(static_cast<double>(p) * cells / planes));
        const int c1 = static_cast<int>(std::lround(static_cast<double>(p + 1) * cells / planes));
        const int x0 = c0 * o.layout_cell;
        const int x1 = p == planes - 1 ? o.width : c1 * o.layout_cell;
        if (x1 <= x0) throw Error(ErrorCode::Spec, "too many planes for the image width");
        bands.push_back({x0, 0, x1 - x0, o.height});
    }

    const bool multi_aperture = !o.f_numbers.empty();
    for (int v = 0; v < o.views; ++v) {
        const auto& lens = multi_aperture
                               ? o.lenses.front()
                               : o.lenses[static_cast<std::size_t>(rng() % o.lenses.size())];
        const double f = lens.first * 1e-3;
        const double widest = multi_aperture ? *std::min_element(o.f_numbers.begin(), o.f_numbers.end())
                                             : lens.second;
        const double l = f / widest;
        const double g = uniform(o.min_focus, o.max_focus);

        // Radii for the widest aperture, one band of [-R, R_far] per plane.
        const double far_limit = blur_to_pixel_radius(BlurSize{l * f / (g - f)}, o.sensor_pitch);
        const double r_lo = -o.max_radius_px;
        const double r_hi = std::min(o.max_radius_px, 0.8 * far_limit);
        std::vector<double> radii;
        for (int p = 0; p < planes; ++p) {
            const double a = r_lo + (r_hi - r_lo) * p / planes;
            const double b = r_lo + (r_hi - r_lo) * (p + 1) / planes;
            const double span = b - a;
            radii.push_back(draw_radius(a + 0.1 * span, b - 0.1 * span, o.radius_step, o.min_abs_radius, rng));
        }
        std::shuffle(radii.begin(), radii.end(), rng);

        std::vector<PlaneSpec> plane_specs;
        for (int p = 0; p < planes; ++p) {
            double depth = g;
            if (!o.all_in_focus) {
                const BlurSize b = pixel_radius_to_blur(radii[static_cast<std::size_t>(p)], o.sensor_pitch);
                depth = depth_from_blur(b, g, f, l);
            }
            TextureSpec tex;
            tex.seed = mix_seed(o.seed, static_cast<std::uint64_t>(v * 1000 + p));
            plane_specs.push_back({depth, bands[static_cast<std::size_t>(p)], tex});
        }

        const std::vector<double> apertures = multi_aperture ? o.f_numbers : std::vector<double>{lens.second};
        for (double n : apertures) {
            std::ostringstream id;
            id << "view_" << (v < 10 ? "0" : "") << v;
            std::string group;
            if (multi_aperture) {
                std::ostringstream tag;
                tag << "f/" << n;
                group = tag.str();
                id << "_f" << n;
            }
            spec.views.push_back({id.str(), g, CameraMeta(f, n, o.sensor_pitch, o.width, o.height),
                                  plane_specs, group});
        }
    }
    return spec;
}

}  // namespace dpscale
