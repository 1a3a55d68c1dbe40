#pragma once

#include <filesystem>

#include "dpscale/image.hpp"

namespace dpscale::io {

/// Loads an 8- or 16-bit PNG/TIFF as intensities in [0, 1], channels in RGB
/// order, each value raised to `gamma` (1 leaves the data as stored).
MultiImage load_image(const std::filesystem::path& path, double gamma = 1.0);

/// Writes a 16-bit PNG or TIFF (chosen by extension). Values are clamped
/// to [0, 1]. One or three channels.
void save_image16(const std::filesystem::path& path, const MultiImage& image);

}  // namespace dpscale::io
