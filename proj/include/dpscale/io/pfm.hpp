#pragma once

#include <filesystem>

#include "dpscale/error.hpp"
#include "dpscale/image.hpp"

namespace dpscale::io {

enum class PfmFault {
    BadMagic,     // first line is not a PFM header
    Unsupported,  // "PF" three-channel map
    BadHeader,    // dimensions or scale line unreadable
    ZeroScale,
    Truncated,    // fewer than width * height floats
};

class PfmError : public Error {
public:
    PfmError(PfmFault fault, const std::string& message)
        : Error(ErrorCode::Format, message), fault_(fault) {}

    PfmFault fault() const noexcept { return fault_; }

private:
    PfmFault fault_;
};

/// Reads a grayscale "Pf" map. Rows come back top to bottom; the sign of
/// the scale line selects the byte order (negative = little-endian).
/// Values are returned as stored.
Image read_pfm(const std::filesystem::path& path);

/// Writes a grayscale "Pf" map with scale -1 (little-endian) or +1.
void write_pfm(const std::filesystem::path& path, const Image& map, bool little_endian = true);

/// Depth map from a PFM file, or from raw little-endian float32 data with a
/// "<path>.dims" sidecar holding "width height". Non-positive and
/// non-finite entries become NaN.
Image load_depth_map(const std::filesystem::path& path);

}  // namespace dpscale::io
