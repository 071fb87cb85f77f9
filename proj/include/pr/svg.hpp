#pragma once

#include <string>
#include <vector>

#include "pr/core.hpp"

namespace pr {

// Side-by-side panels (typically GT / initial / refined) drawn over the same
// frame, one skeleton per pose. The image is embedded as a PNG data URI.
struct OverlayPanel {
  std::string title;
  std::vector<Pose> poses;
};

std::string overlay_svg(const ImageRaster& image, const JointSchema& schema,
                        const std::vector<OverlayPanel>& panels);

}  // namespace pr
