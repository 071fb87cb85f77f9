#pragma once

#include "pr/core.hpp"
#include "pr/net.hpp"
#include "pr/tensorize.hpp"

namespace pr {

struct DecodeConfig {
  double tau = 0.7;  // 0.7 for tracking, 0.0 for pose-estimation mAP
  int stride = 8;
};

// Per joint: argmax cell (ties -> smallest row-major index), coordinate =
// cell center + offset at that cell (offsets given in input pixels), score =
// probability at the argmax. Joints below tau come out absent.
Pose decode(const Tensor<float>& heatmap_probs, const Tensor<float>& offsets_px,
            const DecodeConfig& cfg);

Tensor<float> sigmoid(const Tensor<float>& logits);

// normalize -> encode -> forward -> decode -> back to image coordinates.
// track_id passes through; joints that had an input score keep it (mAP
// ranking uses pre-refinement confidences), recovered joints carry the
// decoded probability.
Pose refine_pose(const RefinerNet<float>& net, const ImageRaster& image,
                 const Pose& pose_in, const GeomConfig& geom,
                 const DecodeConfig& cfg);

}  // namespace pr
