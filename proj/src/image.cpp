#include "dpscale/image.hpp"

#include <algorithm>
#include <string>

#include "dpscale/error.hpp"

namespace dpscale {

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw Error(ErrorCode::Dimension, "negative image dimensions");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Image Image::crop(int x0, int y0, int w, int h) const {
    if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > width_ || y0 + h > height_) {
        throw Error(ErrorCode::Dimension,
                    "crop window " + std::to_string(w) + "x" + std::to_string(h) + " at (" +
                        std::to_string(x0) + "," + std::to_string(y0) + ") exceeds " +
                        std::to_string(width_) + "x" + std::to_string(height_) + " image");
    }
    Image out(w, h);
    for (int y = 0; y < h; ++y) {
        auto src = row(y0 + y).subspan(static_cast<std::size_t>(x0), static_cast<std::size_t>(w));
        std::copy(src.begin(), src.end(), out.row(y).begin());
    }
    return out;
}

Image Image::mirrored() const {
    Image out(width_, height_);
    for (int y = 0; y < height_; ++y) {
        auto src = row(y);
        std::reverse_copy(src.begin(), src.end(), out.row(y).begin());
    }
    return out;
}

Image& Image::operator*=(double gain) {
    for (double& v : data_) v *= gain;
    return *this;
}

const Image& MultiImage::estimation_channel() const {
    if (channels.empty()) {
        throw Error(ErrorCode::Dimension, "image has no channels");
    }
    return channels.size() >= 3 ? channels[1] : channels[0];
}

}  // namespace dpscale
