#pragma once

namespace dpscale {

/// Physical optics of one viewpoint. All lengths in meters.
///
/// The aperture diameter is derived from focal length and f-number on every
/// access, so the two can never disagree.
class CameraMeta {
public:
    /// Throws Error(Domain) unless focal length, f-number and pitch are
    /// positive and finite. Image dimensions may be zero when unknown.
    CameraMeta(double focal_length, double f_number, double sensor_pitch,
               int image_width = 0, int image_height = 0);

    double focal_length() const noexcept { return focal_length_; }
    double f_number() const noexcept { return f_number_; }
    double sensor_pitch() const noexcept { return sensor_pitch_; }
    double aperture_diameter() const noexcept { return focal_length_ / f_number_; }
    int image_width() const noexcept { return image_width_; }
    int image_height() const noexcept { return image_height_; }

    bool operator==(const CameraMeta&) const = default;

private:
    double focal_length_;
    double f_number_;
    double sensor_pitch_;
    int image_width_;
    int image_height_;
};

/// Signed circle-of-confusion diameter on the sensor, in meters. Positive
/// for scene points beyond the focal plane.
struct BlurSize {
    double meters = 0.0;

    auto operator<=>(const BlurSize&) const = default;
};

/// Depth in reconstruction units; metric depth is scale * z_prime.
class DepthSample {
public:
    explicit DepthSample(double z_prime);
    double z_prime() const noexcept { return z_prime_; }

private:
    double z_prime_;
};

double aperture_diameter(double focal_length, double f_number);

/// Thin-lens signed defocus blur for a point at depth z with the lens
/// focused at g:  b = l f / (1 - f/g) * (1/g - 1/z).
/// Requires z > 0, g > f > 0, l > 0.
BlurSize thin_lens_blur(double z, double g, double f, double l);

/// Inverse of thin_lens_blur in z. Throws Error(Domain) when the blur
/// corresponds to no finite positive depth.
double depth_from_blur(BlurSize b, double g, double f, double l);

/// Pixel radius of a blur diameter: r = b / (2 pitch). Sign preserved.
double blur_to_pixel_radius(BlurSize b, double pitch);
BlurSize pixel_radius_to_blur(double radius_px, double pitch);

}  // namespace dpscale
