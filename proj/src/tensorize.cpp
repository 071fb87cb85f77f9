#include "pr/tensorize.hpp"

#include <cmath>
#include <cstring>

#include "pr/datasets.hpp"

namespace pr {

double estimate_height(const Pose& pose, const GeomConfig& cfg) {
  if (pose.height_px) return *pose.height_px;
  if (pose.head_box) {
    const double w = pose.head_box->width();
    const double h = pose.head_box->height();
    return cfg.head_diag_factor * std::sqrt(w * w + h * h);
  }
  if (pose.present_count() >= 2) {
    const Rect bb = pose_bbox(pose);
    if (bb.height() > 0.0) return cfg.bbox_height_factor * bb.height();
  }
  throw HeightUndefined();
}

NormResult normalize(const ImageRaster& image, const Pose& pose,
                     const GeomConfig& cfg, double scale_jitter) {
  const double height = estimate_height(pose, cfg);
  NormParams p;
  p.scale = cfg.reference_height / height * scale_jitter;

  const Rect bb = pose_bbox(pose);
  p.crop_x = bb.x0 * p.scale - cfg.crop_margin;
  p.crop_y = bb.y0 * p.scale - cfg.crop_margin;
  p.crop_w = static_cast<int>(
      std::ceil((bb.x1 - bb.x0) * p.scale + 2.0 * cfg.crop_margin));
  p.crop_h = static_cast<int>(
      std::ceil((bb.y1 - bb.y0) * p.scale + 2.0 * cfg.crop_margin));
  p.crop_w = std::max(p.crop_w, 1);
  p.crop_h = std::max(p.crop_h, 1);

  NormResult res;
  res.params = p;
  const int sw = std::max(1, static_cast<int>(std::lround(image.width * p.scale)));
  const int sh = std::max(1, static_cast<int>(std::lround(image.height * p.scale)));
  const ImageRaster scaled = resample_bilinear(image, sw, sh);
  res.image = crop_zero_pad(scaled, static_cast<int>(std::floor(p.crop_x)),
                            static_cast<int>(std::floor(p.crop_y)), p.crop_w,
                            p.crop_h);
  // Keep the crop origin at the integer pixel actually used.
  res.params.crop_x = std::floor(p.crop_x);
  res.params.crop_y = std::floor(p.crop_y);
  res.pose = to_crop_frame(pose, res.params);
  return res;
}

Pose to_crop_frame(const Pose& pose, const NormParams& p) {
  Pose out = pose;
  for (auto& j : out.joints) {
    if (!j.present) continue;
    j.x = j.x * p.scale - p.crop_x;
    j.y = j.y * p.scale - p.crop_y;
  }
  if (out.head_box) {
    out.head_box = Rect{out.head_box->x0 * p.scale - p.crop_x,
                        out.head_box->y0 * p.scale - p.crop_y,
                        out.head_box->x1 * p.scale - p.crop_x,
                        out.head_box->y1 * p.scale - p.crop_y};
  }
  return out;
}

Pose to_image_frame(const Pose& pose, const NormParams& p) {
  Pose out = pose;
  for (auto& j : out.joints) {
    if (!j.present) continue;
    j.x = (j.x + p.crop_x) / p.scale;
    j.y = (j.y + p.crop_y) / p.scale;
  }
  if (out.head_box) {
    out.head_box = Rect{(out.head_box->x0 + p.crop_x) / p.scale,
                        (out.head_box->y0 + p.crop_y) / p.scale,
                        (out.head_box->x1 + p.crop_x) / p.scale,
                        (out.head_box->y1 + p.crop_y) / p.scale};
  }
  return out;
}

std::vector<float> encode_pose_channels(const Pose& pose, int n, int width,
                                        int height, double radius) {
  std::vector<float> channels(static_cast<size_t>(n) * width * height, 0.0f);
  const double r2 = radius * radius;
  for (int j = 0; j < n; ++j) {
    const Keypoint& kp = pose.joints[j];
    if (!kp.present) continue;  // absent joint -> null channel
    float* ch = channels.data() + static_cast<size_t>(j) * width * height;
    const int x0 = std::max(0, static_cast<int>(std::ceil(kp.x - radius)));
    const int x1 = std::min(width - 1, static_cast<int>(std::floor(kp.x + radius)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(kp.y - radius)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(kp.y + radius)));
    for (int y = y0; y <= y1; ++y) {
      const double dy = y - kp.y;
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - kp.x;
        if (dx * dx + dy * dy <= r2) ch[y * width + x] = 1.0f;
      }
    }
  }
  return channels;
}

void make_targets(const Pose& gt, int width, int height, int stride,
                  double radius, int n, std::vector<float>& heatmap,
                  std::vector<float>& offset, std::vector<float>& mask) {
  const int gw = (width + stride - 1) / stride;
  const int gh = (height + stride - 1) / stride;
  const size_t plane = static_cast<size_t>(gw) * gh;
  heatmap.assign(static_cast<size_t>(n) * plane, 0.0f);
  offset.assign(static_cast<size_t>(2 * n) * plane, 0.0f);
  mask.assign(static_cast<size_t>(n) * plane, 0.0f);
  const double half = stride / 2.0;
  const double r2 = radius * radius;
  for (int j = 0; j < n; ++j) {
    const Keypoint& kp = gt.joints[j];
    if (!kp.present) continue;
    for (int gy = 0; gy < gh; ++gy) {
      const double cy = stride * gy + half;
      const double dy = kp.y - cy;
      for (int gx = 0; gx < gw; ++gx) {
        const double cx = stride * gx + half;
        const double dx = kp.x - cx;
        if (dx * dx + dy * dy <= r2) {
          const size_t cell = static_cast<size_t>(gy) * gw + gx;
          heatmap[j * plane + cell] = 1.0f;
          mask[j * plane + cell] = 1.0f;
          offset[(2 * j) * plane + cell] = static_cast<float>(dx);
          offset[(2 * j + 1) * plane + cell] = static_cast<float>(dy);
        }
      }
    }
  }
}

namespace {

Pose scale_pose(const Pose& pose, double sx, double sy) {
  Pose out = pose;
  for (auto& j : out.joints) {
    if (!j.present) continue;
    j.x *= sx;
    j.y *= sy;
  }
  if (out.head_box)
    out.head_box = Rect{out.head_box->x0 * sx, out.head_box->y0 * sy,
                        out.head_box->x1 * sx, out.head_box->y1 * sy};
  return out;
}

}  // namespace

AugmentResult augment(const ImageRaster& image, const Pose& gt,
                      const Pose& input, const JointSchema& schema,
                      const RngKey& rng) {
  RngStream s(rng.derive("augment"));
  AugmentResult res;
  res.scale = s.uniform(0.7, 1.3);
  res.flipped = s.bernoulli(0.5);

  const int out_w = std::max(1, static_cast<int>(std::lround(image.width * res.scale)));
  const int out_h = std::max(1, static_cast<int>(std::lround(image.height * res.scale)));
  const double sx = static_cast<double>(out_w) / image.width;
  const double sy = static_cast<double>(out_h) / image.height;
  res.image = resample_bilinear(image, out_w, out_h);
  res.gt = scale_pose(gt, sx, sy);
  res.input = scale_pose(input, sx, sy);
  if (res.flipped) {
    res.image = flip_horizontal(res.image);
    res.gt = flip_pose(res.gt, schema, out_w);
    res.input = flip_pose(res.input, schema, out_w);
  }
  return res;
}

TensorPack build_tensor_pack(const ImageRaster& crop, const Pose& input_pose,
                             const Pose& gt_pose, int n,
                             const GeomConfig& cfg) {
  TensorPack pack;
  pack.width = crop.width;
  pack.height = crop.height;
  pack.channels = 3 + n;
  const size_t plane = static_cast<size_t>(crop.width) * crop.height;
  pack.input.resize(static_cast<size_t>(pack.channels) * plane);
  for (size_t i = 0; i < plane; ++i) {
    pack.input[i] = crop.pixels[3 * i] / 255.0f;
    pack.input[plane + i] = crop.pixels[3 * i + 1] / 255.0f;
    pack.input[2 * plane + i] = crop.pixels[3 * i + 2] / 255.0f;
  }
  const std::vector<float> pose_ch = encode_pose_channels(
      input_pose, n, crop.width, crop.height, cfg.blob_radius);
  std::memcpy(pack.input.data() + 3 * plane, pose_ch.data(),
              pose_ch.size() * sizeof(float));
  pack.grid_w = (crop.width + cfg.stride - 1) / cfg.stride;
  pack.grid_h = (crop.height + cfg.stride - 1) / cfg.stride;
  make_targets(gt_pose, crop.width, crop.height, cfg.stride, cfg.blob_radius,
               n, pack.heatmap_target, pack.offset_target, pack.offset_mask);
  return pack;
}

namespace {

constexpr std::uint32_t kPackVersion = 1;

void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint32_t get_u32le(const std::string& s, size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i]))
         << (8 * i);
  return v;
}

void put_section(std::string& out, const std::vector<float>& data, int c,
                 int h, int w) {
  out += "PRTP";
  put_u32le(out, kPackVersion);
  put_u32le(out, static_cast<std::uint32_t>(c));
  put_u32le(out, static_cast<std::uint32_t>(h));
  put_u32le(out, static_cast<std::uint32_t>(w));
  out.append(reinterpret_cast<const char*>(data.data()),
             data.size() * sizeof(float));
}

std::vector<float> get_section(const std::string& s, size_t& pos, int& c,
                               int& h, int& w) {
  if (pos + 20 > s.size() || s.compare(pos, 4, "PRTP") != 0)
    throw ParseError("bad tensor pack section header");
  if (get_u32le(s, pos + 4) != kPackVersion)
    throw ParseError("unsupported tensor pack version");
  c = static_cast<int>(get_u32le(s, pos + 8));
  h = static_cast<int>(get_u32le(s, pos + 12));
  w = static_cast<int>(get_u32le(s, pos + 16));
  pos += 20;
  const size_t count = static_cast<size_t>(c) * h * w;
  if (pos + count * sizeof(float) > s.size())
    throw ParseError("truncated tensor pack section");
  std::vector<float> data(count);
  std::memcpy(data.data(), s.data() + pos, count * sizeof(float));
  pos += count * sizeof(float);
  return data;
}

}  // namespace

std::string dump_tensor_pack(const TensorPack& pack) {
  std::string out;
  put_section(out, pack.input, pack.channels, pack.height, pack.width);
  const int n = pack.channels - 3;
  put_section(out, pack.heatmap_target, n, pack.grid_h, pack.grid_w);
  put_section(out, pack.offset_target, 2 * n, pack.grid_h, pack.grid_w);
  put_section(out, pack.offset_mask, n, pack.grid_h, pack.grid_w);
  return out;
}

TensorPack load_tensor_pack(const std::string& bytes, int n) {
  TensorPack pack;
  size_t pos = 0;
  int c, h, w;
  pack.input = get_section(bytes, pos, c, h, w);
  pack.channels = c;
  pack.height = h;
  pack.width = w;
  if (c != n + 3) throw ParseError("tensor pack channel count mismatch");
  pack.heatmap_target = get_section(bytes, pos, c, pack.grid_h, pack.grid_w);
  int oh, ow;
  pack.offset_target = get_section(bytes, pos, c, oh, ow);
  pack.offset_mask = get_section(bytes, pos, c, oh, ow);
  return pack;
}

}  // namespace pr
