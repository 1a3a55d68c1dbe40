#include "dpscale/io/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <vector>

#include "dpscale/error.hpp"

namespace dpscale::io {

MultiImage load_image(const std::filesystem::path& path, double gamma) {
    if (!(gamma > 0.0)) throw Error(ErrorCode::Domain, "gamma must be positive");
    if (!std::filesystem::exists(path)) throw Error(ErrorCode::Io, "missing image " + path.string());
    const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_ANYCOLOR);
    if (raw.empty()) throw Error(ErrorCode::Format, "cannot decode image " + path.string());

    double peak = 0.0;
    switch (raw.depth()) {
        case CV_8U: peak = 255.0; break;
        case CV_16U: peak = 65535.0; break;
        default: throw Error(ErrorCode::Format, path.string() + ": only 8- and 16-bit images are supported");
    }
    std::vector<cv::Mat> planes;
    cv::split(raw, planes);
    if (planes.size() == 4) planes.pop_back();
    if (planes.size() == 3) std::swap(planes[0], planes[2]);  // BGR -> RGB

    MultiImage out;
    for (const cv::Mat& plane : planes) {
        cv::Mat values;
        plane.convertTo(values, CV_64F, 1.0 / peak);
        Image channel(values.cols, values.rows);
        for (int y = 0; y < values.rows; ++y) {
            const double* src = values.ptr<double>(y);
            for (int x = 0; x < values.cols; ++x) {
                channel(x, y) = gamma == 1.0 ? src[x] : std::pow(src[x], gamma);
            }
        }
        out.channels.push_back(std::move(channel));
    }
    return out;
}

void save_image16(const std::filesystem::path& path, const MultiImage& image) {
    const int n = image.channel_count();
    if (n != 1 && n != 3) throw Error(ErrorCode::Dimension, "only 1- or 3-channel images can be saved");
    std::vector<cv::Mat> planes;
    for (int c = n - 1; c >= 0; --c) {  // RGB -> BGR
        const Image& src = image.channels[static_cast<std::size_t>(n == 3 ? c : 0)];
        cv::Mat plane(src.height(), src.width(), CV_16U);
        for (int y = 0; y < src.height(); ++y) {
            auto* dst = plane.ptr<std::uint16_t>(y);
            for (int x = 0; x < src.width(); ++x) {
                dst[x] = static_cast<std::uint16_t>(std::lround(std::clamp(src(x, y), 0.0, 1.0) * 65535.0));
            }
        }
        planes.push_back(plane);
    }
    cv::Mat merged;
    cv::merge(planes, merged);
    if (!cv::imwrite(path.string(), merged)) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

}  // namespace dpscale::io
