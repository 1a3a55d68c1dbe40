#pragma once

#include <string>

#include "dpscale/image.hpp"
#include "dpscale/optics.hpp"

namespace dpscale {

/// One dual-pixel viewpoint: left/right sub-aperture images, the
/// scale-ambiguous depth map from the reconstruction and the camera optics.
/// Depth entries that are non-positive or non-finite are treated as missing.
struct DpView {
    std::string view_id;
    MultiImage left;
    MultiImage right;
    Image depth;
    CameraMeta meta;
    std::string scene;
    std::string aperture_group;
};

/// Throws Error(Dimension) unless both images and the depth map share one
/// size and the left/right channel counts agree.
void validate_view(const DpView& view);

}  // namespace dpscale
