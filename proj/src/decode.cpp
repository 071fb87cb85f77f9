#include "pr/decode.hpp"

#include <cmath>

namespace pr {

Tensor<float> sigmoid(const Tensor<float>& logits) {
  Tensor<float> out = logits;
  for (auto& v : out.v) v = 1.0f / (1.0f + std::exp(-v));
  return out;
}

Pose decode(const Tensor<float>& heatmap_probs, const Tensor<float>& offsets_px,
            const DecodeConfig& cfg) {
  const int n = heatmap_probs.c;
  if (offsets_px.c != 2 * n || offsets_px.h != heatmap_probs.h ||
      offsets_px.w != heatmap_probs.w)
    throw ShapeMismatch("heatmap/offset shape mismatch");
  const size_t plane = heatmap_probs.plane();
  const double half = cfg.stride / 2.0;
  Pose pose;
  pose.joints.resize(n);
  for (int j = 0; j < n; ++j) {
    const float* hm = heatmap_probs.channel(j);
    size_t best = 0;
    for (size_t i = 1; i < plane; ++i)
      if (hm[i] > hm[best]) best = i;  // ties keep the smallest index
    const double score = hm[best];
    Keypoint& kp = pose.joints[j];
    kp.score = score;
    if (score < cfg.tau) continue;  // absent
    const int gy = static_cast<int>(best) / heatmap_probs.w;
    const int gx = static_cast<int>(best) % heatmap_probs.w;
    kp.present = true;
    kp.x = cfg.stride * gx + half + offsets_px.channel(2 * j)[best];
    kp.y = cfg.stride * gy + half + offsets_px.channel(2 * j + 1)[best];
  }
  return pose;
}

Pose refine_pose(const RefinerNet<float>& net, const ImageRaster& image,
                 const Pose& pose_in, const GeomConfig& geom,
                 const DecodeConfig& cfg) {
  const int n = net.config().joints;
  const NormResult norm = normalize(image, pose_in, geom);
  const TensorPack pack =
      build_tensor_pack(norm.image, norm.pose, norm.pose, n, geom);
  Tensor<float> input(pack.channels, pack.height, pack.width);
  input.v = pack.input;
  const Tensor<float> out = net.forward(input);
  Tensor<float> logits, offsets;
  RefinerNet<float>::split_output(out, n, logits, offsets);
  for (auto& v : offsets.v) v *= static_cast<float>(cfg.stride);
  Pose decoded = decode(sigmoid(logits), offsets, cfg);
  Pose refined = to_image_frame(decoded, norm.params);
  refined.track_id = pose_in.track_id;
  refined.head_box = pose_in.head_box;
  refined.height_px = pose_in.height_px;
  for (int j = 0; j < n; ++j) {
    const Keypoint& in_kp = pose_in.joints[j];
    if (in_kp.present && in_kp.score) refined.joints[j].score = in_kp.score;
  }
  return refined;
}

}  // namespace pr
