#include "dpscale/optics.hpp"

#include <cmath>
#include <string>

#include "dpscale/error.hpp"

namespace dpscale {
namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(ErrorCode::Domain, std::string(name) + " must be positive and finite, got " +
                                           std::to_string(value));
    }
}

}  // namespace

CameraMeta::CameraMeta(double focal_length, double f_number, double sensor_pitch,
                       int image_width, int image_height)
    : focal_length_(focal_length),
      f_number_(f_number),
      sensor_pitch_(sensor_pitch),
      image_width_(image_width),
      image_height_(image_height) {
    require_positive(focal_length, "focal_length");
    require_positive(f_number, "f_number");
    require_positive(sensor_pitch, "sensor_pitch");
    if (image_width < 0 || image_height < 0) {
        throw Error(ErrorCode::Domain, "image dimensions must be non-negative");
    }
}

DepthSample::DepthSample(double z_prime) : z_prime_(z_prime) {
    require_positive(z_prime, "z_prime");
}

double aperture_diameter(double focal_length, double f_number) {
    require_positive(focal_length, "focal_length");
    require_positive(f_number, "f_number");
    return focal_length / f_number;
}

BlurSize thin_lens_blur(double z, double g, double f, double l) {
    require_positive(z, "depth");
    require_positive(f, "focal_length");
    require_positive(l, "aperture_diameter");
    if (!(g > f) || !std::isfinite(g)) {
        throw Error(ErrorCode::Domain, "focus distance must exceed the focal length");
    }
    return BlurSize{l * f / (1.0 - f / g) * (1.0 / g - 1.0 / z)};
}

double depth_from_blur(BlurSize b, double g, double f, double l) {
    require_positive(f, "focal_length");
    require_positive(l, "aperture_diameter");
    if (!(g > f) || !std::isfinite(g)) {
        throw Error(ErrorCode::Domain, "focus distance must exceed the focal length");
    }
    const double inv_z = 1.0 / g - b.meters * (1.0 - f / g) / (l * f);
    if (!(inv_z > 0.0)) {
        throw Error(ErrorCode::Domain, "blur exceeds the far-field limit; no finite depth");
    }
    return 1.0 / inv_z;
}

double blur_to_pixel_radius(BlurSize b, double pitch) {
    require_positive(pitch, "sensor_pitch");
    return b.meters / (2.0 * pitch);
}

BlurSize pixel_radius_to_blur(double radius_px, double pitch) {
    require_positive(pitch, "sensor_pitch");
    return BlurSize{radius_px * 2.0 * pitch};
}

}  // namespace dpscale
