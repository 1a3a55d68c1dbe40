#include "dpscale/view.hpp"

#include "dpscale/error.hpp"

namespace dpscale {

void validate_view(const DpView& view) {
    const auto fail = [&](const char* what) {
        throw Error(ErrorCode::Dimension, "view " + view.view_id + ": " + what);
    };
    if (view.left.channel_count() == 0 || view.right.channel_count() == 0) fail("missing image data");
    if (view.left.channel_count() != view.right.channel_count()) fail("left/right channel counts differ");
    for (const auto* img : {&view.left, &view.right}) {
        for (const Image& c : img->channels) {
            if (c.width() != view.left.width() || c.height() != view.left.height()) {
                fail("image planes differ in size");
            }
        }
    }
    if (view.depth.width() != view.left.width() || view.depth.height() != view.left.height()) {
        fail("depth map is not aligned with the images");
    }
}

}  // namespace dpscale
