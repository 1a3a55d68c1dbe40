#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dpscale {

/// Single-channel row-major image of doubles. Used for whole views,
/// patches, depth maps and kernel grids alike.
class Image {
public:
    Image() = default;
    Image(int width, int height, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(int x, int y) { return data_[index(x, y)]; }
    double operator()(int x, int y) const { return data_[index(x, y)]; }

    std::span<double> row(int y) {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }
    std::span<const double> row(int y) const {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }

    std::span<double> pixels() noexcept { return data_; }
    std::span<const double> pixels() const noexcept { return data_; }

    /// Copy of the w x h window whose top-left corner is (x0, y0).
    Image crop(int x0, int y0, int w, int h) const;

    /// Columns reversed.
    Image mirrored() const;

    Image& operator*=(double gain);

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Multi-channel image stored as planes. Color views hold R, G, B in that
/// order; mono views hold one plane.
struct MultiImage {
    std::vector<Image> channels;

    int width() const { return channels.empty() ? 0 : channels.front().width(); }
    int height() const { return channels.empty() ? 0 : channels.front().height(); }
    int channel_count() const { return static_cast<int>(channels.size()); }

    /// Plane used for blur estimation: green for RGB, the only plane for mono.
    const Image& estimation_channel() const;

    bool operator==(const MultiImage&) const = default;
};

}  // namespace dpscale
