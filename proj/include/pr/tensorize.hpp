#pragma once

#include <string>
#include <vector>

#include "pr/core.hpp"
#include "pr/image.hpp"
#include "pr/rng.hpp"

namespace pr {

// Geometry constants for normalization and channel encoding. Defaults follow
// the reference protocol; desk-scale configs shrink them proportionally.
struct GeomConfig {
  double reference_height = 340.0;  // person height after rescale, px
  double crop_margin = 250.0;       // context added around the pose bbox, px
  double blob_radius = 15.0;        // pose channel / target disk radius, px
  int stride = 8;
  double head_diag_factor = 6.0;    // head-box diagonal -> person height
  double bbox_height_factor = 1.25; // joint-bbox height -> person height
};

struct NormParams {
  double scale = 1.0;
  double crop_x = 0.0, crop_y = 0.0;  // crop origin in scaled coordinates
  int crop_w = 0, crop_h = 0;
};

struct NormResult {
  ImageRaster image;  // cropped, zero-padded
  Pose pose;          // in crop coordinates
  NormParams params;
};

struct TensorPack {
  int channels = 0, height = 0, width = 0;
  std::vector<float> input;    // (3+n) x H x W, RGB in [0,1] + binary blobs
  int grid_h = 0, grid_w = 0;  // ceil(H/stride), ceil(W/stride)
  std::vector<float> heatmap_target;  // n x gh x gw, binary
  std::vector<float> offset_target;   // 2n x gh x gw, input pixels
  std::vector<float> offset_mask;     // n x gh x gw, binary
};

double estimate_height(const Pose& pose, const GeomConfig& cfg = {});

// Rescale so the person stands reference_height px tall, then crop the scaled
// pose bbox expanded by crop_margin on every side. scale_jitter multiplies
// the normalization scale (training-time rescale augmentation).
NormResult normalize(const ImageRaster& image, const Pose& pose,
                     const GeomConfig& cfg = {}, double scale_jitter = 1.0);

Pose to_crop_frame(const Pose& pose, const NormParams& p);
Pose to_image_frame(const Pose& pose, const NormParams& p);

// n binary channels, disk of blob_radius around each present joint.
std::vector<float> encode_pose_channels(const Pose& pose, int n, int width,
                                        int height, double radius);

void make_targets(const Pose& gt, int width, int height, int stride,
                  double radius, int n, std::vector<float>& heatmap,
                  std::vector<float>& offset, std::vector<float>& mask);

struct AugmentResult {
  ImageRaster image;
  Pose gt;
  Pose input;
  bool flipped = false;
  double scale = 1.0;
};

// One shared geometric transform for image and both poses: scale drawn from
// U[0.7, 1.3], horizontal flip with probability 0.5.
AugmentResult augment(const ImageRaster& image, const Pose& gt,
                      const Pose& input, const JointSchema& schema,
                      const RngKey& rng);

TensorPack build_tensor_pack(const ImageRaster& crop, const Pose& input_pose,
                             const Pose& gt_pose, int n,
                             const GeomConfig& cfg);

// Flat binary dump: four sections (input, heatmap_target, offset_target,
// offset_mask), each "PRTP" + version + channels/height/width + LE f32 data.
std::string dump_tensor_pack(const TensorPack& pack);
TensorPack load_tensor_pack(const std::string& bytes, int n);

}  // namespace pr
