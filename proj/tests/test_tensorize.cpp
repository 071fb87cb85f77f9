#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pr/rng.hpp"
#include "pr/tensorize.hpp"

using namespace pr;

namespace {

JointSchema schema4() {
  JointSchema s;
  s.names = {"head_top", "head_bottom", "lwrist", "rwrist"};
  s.flip_pairs = {{2, 3}};
  s.head_pair = {0, 1};
  s.validate();
  return s;
}

ImageRaster noise_image(int w, int h, std::uint64_t seed) {
  ImageRaster img = ImageRaster::filled(w, h, 0, 0, 0);
  RngStream s(seed);
  for (auto& px : img.pixels) px = static_cast<std::uint8_t>(s.below(256));
  return img;
}

}  // namespace

TEST_CASE("estimate_height priority chain") {
  GeomConfig cfg;
  Pose p;
  p.joints.resize(4);
  p.height_px = 170.0;
  CHECK(estimate_height(p, cfg) == doctest::Approx(170.0));

  p.height_px.reset();
  p.head_box = Rect{0, 0, 30, 40};  // diagonal 50
  CHECK(estimate_height(p, cfg) == doctest::Approx(300.0));

  p.head_box.reset();
  p.joints[0] = {10, 0, true, {}};
  p.joints[1] = {20, 200, true, {}};  // bbox height 200
  CHECK(estimate_height(p, cfg) == doctest::Approx(250.0));

  p.joints[1].present = false;
  CHECK_THROWS_AS(estimate_height(p, cfg), HeightUndefined);
}

TEST_CASE("normalize scale and crop rect match the reference geometry") {
  GeomConfig cfg;
  ImageRaster img = ImageRaster::filled(200, 220, 128, 128, 128);
  Pose p;
  p.joints.resize(4);
  p.height_px = 170.0;  // scale = 340/170 = 2
  p.joints[0] = {50, 25, true, {}};
  p.joints[1] = {150, 25, true, {}};
  p.joints[2] = {50, 200, true, {}};
  p.joints[3] = {150, 200, true, {}};

  NormResult r = normalize(img, p, cfg);
  CHECK(r.params.scale == doctest::Approx(2.0));
  // Scaled bbox x in [100,300], y in [50,400]; margin 250 on each side.
  CHECK(r.params.crop_x == doctest::Approx(-150.0));
  CHECK(r.params.crop_y == doctest::Approx(-200.0));
  CHECK(r.params.crop_w == 700);
  CHECK(r.params.crop_h == 850);
  CHECK(r.image.width == 700);
  CHECK(r.image.height == 850);
  // Top-left of the crop lies outside the source image: zero padding.
  CHECK(r.image.at(0, 0)[0] == 0);
  // Crop-frame pose: joint 0 at (50*2 - (-150), 25*2 - (-200)) = (250, 250).
  CHECK(r.pose.joints[0].x == doctest::Approx(250.0));
  CHECK(r.pose.joints[0].y == doctest::Approx(250.0));
}

TEST_CASE("scale jitter multiplies the normalization scale") {
  GeomConfig cfg;
  ImageRaster img = ImageRaster::filled(100, 100, 10, 10, 10);
  Pose p;
  p.joints.resize(4);
  p.height_px = 340.0;
  p.joints[0] = {40, 40, true, {}};
  p.joints[1] = {60, 60, true, {}};
  NormResult r = normalize(img, p, cfg, 1.2);
  CHECK(r.params.scale == doctest::Approx(1.2));
}

TEST_CASE("to_image_frame inverts to_crop_frame to 1e-9") {
  GeomConfig cfg;
  RngStream rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    NormParams params;
    params.scale = rng.uniform(0.2, 4.0);
    params.crop_x = std::floor(rng.uniform(-300, 300));
    params.crop_y = std::floor(rng.uniform(-300, 300));
    Pose p;
    p.joints.resize(6);
    for (auto& j : p.joints) {
      j.present = rng.bernoulli(0.8);
      j.x = rng.uniform(0, 500);
      j.y = rng.uniform(0, 500);
    }
    p.head_box = Rect{10, 10, 20, 30};
    Pose back = to_image_frame(to_crop_frame(p, params), params);
    for (size_t j = 0; j < p.joints.size(); ++j) {
      if (!p.joints[j].present) continue;
      CHECK(std::abs(back.joints[j].x - p.joints[j].x) <= 1e-9);
      CHECK(std::abs(back.joints[j].y - p.joints[j].y) <= 1e-9);
    }
    CHECK(std::abs(back.head_box->x1 - 20.0) <= 1e-9);
  }
}

TEST_CASE("encode_pose_channels boundary pixels and disk size") {
  Pose p;
  p.joints.resize(2);
  p.joints[0] = {40, 40, true, {}};
  auto ch = encode_pose_channels(p, 2, 100, 100, 15.0);
  auto at = [&](int c, int x, int y) { return ch[c * 100 * 100 + y * 100 + x]; };
  CHECK(at(0, 40, 55) == 1.0f);  // distance exactly 15: inside
  CHECK(at(0, 40, 56) == 0.0f);  // distance 16: outside
  CHECK(at(0, 50, 51) == 1.0f);  // sqrt(221) < 15
  CHECK(at(0, 51, 51) == 0.0f);  // sqrt(242) > 15

  // Interior disk of radius 15 covers exactly 709 lattice points; verify
  // against a brute-force scan of the whole plane.
  int count = 0;
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x)
      if (at(0, x, y) == 1.0f) ++count;
  CHECK(count == 709);
  int brute = 0;
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x)
      if ((x - 40.0) * (x - 40.0) + (y - 40.0) * (y - 40.0) <= 225.0) ++brute;
  CHECK(brute == count);

  // Absent joint gives an all-zero channel.
  for (int i = 0; i < 100 * 100; ++i) CHECK(ch[100 * 100 + i] == 0.0f);
}

TEST_CASE("encode_pose_channels clips blobs at image borders") {
  Pose p;
  p.joints.resize(1);
  p.joints[0] = {0, 0, true, {}};
  auto ch = encode_pose_channels(p, 1, 32, 32, 15.0);
  CHECK(ch[0] == 1.0f);
  int count = 0;
  for (float v : ch) count += v == 1.0f;
  CHECK(count < 709);
  CHECK(count > 0);
}

TEST_CASE("make_targets marks cells and exact offsets") {
  Pose gt;
  gt.joints.resize(2);
  gt.joints[0] = {40, 40, true, {}};
  gt.joints[1] = {44, 44, true, {}};
  std::vector<float> heat, off, mask;
  make_targets(gt, 80, 80, 8, 15.0, 2, heat, off, mask);
  const int gw = 10, gh = 10;
  auto cell = [&](int g) { return g; };
  (void)cell;
  auto h = [&](int j, int gx, int gy) { return heat[j * gw * gh + gy * gw + gx]; };
  auto ox = [&](int j, int gx, int gy) {
    return off[(2 * j) * gw * gh + gy * gw + gx];
  };
  auto oy = [&](int j, int gx, int gy) {
    return off[(2 * j + 1) * gw * gh + gy * gw + gx];
  };
  // Joint 0 at (40,40): cell (4,4) has center (36,36), offset (+4,+4).
  CHECK(h(0, 4, 4) == 1.0f);
  CHECK(ox(0, 4, 4) == doctest::Approx(4.0));
  CHECK(oy(0, 4, 4) == doctest::Approx(4.0));
  // Joint 1 at (44,44): cell (5,5) center is exactly (44,44), offset zero.
  CHECK(h(1, 5, 5) == 1.0f);
  CHECK(ox(1, 5, 5) == doctest::Approx(0.0));
  // Cells farther than the radius from the joint stay zero.
  CHECK(h(0, 8, 8) == 0.0f);

  // Heatmap support, mask and offsets agree cell by cell; offsets point at
  // the joint from the cell center.
  for (int j = 0; j < 2; ++j)
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx) {
        CHECK(h(j, gx, gy) == mask[j * gw * gh + gy * gw + gx]);
        if (h(j, gx, gy) == 1.0f) {
          double cx = 8.0 * gx + 4.0, cy = 8.0 * gy + 4.0;
          CHECK(cx + ox(j, gx, gy) == doctest::Approx(gt.joints[j].x));
          CHECK(cy + oy(j, gx, gy) == doctest::Approx(gt.joints[j].y));
          CHECK(std::hypot(ox(j, gx, gy), oy(j, gx, gy)) <= 15.0 + 1e-6);
        }
      }
}

TEST_CASE("make_targets grid dims are ceil of image dims over stride") {
  Pose gt;
  gt.joints.resize(1);
  std::vector<float> heat, off, mask;
  make_targets(gt, 81, 17, 8, 15.0, 1, heat, off, mask);
  CHECK(heat.size() == 11u * 3u);
  CHECK(off.size() == 2u * 11u * 3u);
}

TEST_CASE("build_tensor_pack layout and value ranges") {
  GeomConfig cfg;
  cfg.stride = 8;
  cfg.blob_radius = 15.0;
  ImageRaster img = noise_image(64, 48, 3);
  Pose input, gt;
  input.joints.resize(2);
  gt.joints.resize(2);
  input.joints[0] = {30, 20, true, {}};
  gt.joints[0] = {32, 22, true, {}};
  gt.joints[1] = {10, 10, true, {}};

  TensorPack pack = build_tensor_pack(img, input, gt, 2, cfg);
  CHECK(pack.channels == 5);
  CHECK(pack.grid_w == 8);
  CHECK(pack.grid_h == 6);
  const size_t plane = 64 * 48;
  // RGB scaled into [0,1].
  CHECK(pack.input[0] == doctest::Approx(img.pixels[0] / 255.0));
  for (size_t i = 0; i < 3 * plane; ++i) {
    CHECK(pack.input[i] >= 0.0f);
    CHECK(pack.input[i] <= 1.0f);
  }
  // Pose channels binary; channel for the absent input joint is empty.
  bool ch3_any = false;
  for (size_t i = 0; i < plane; ++i) {
    float v = pack.input[3 * plane + i];
    CHECK((v == 0.0f || v == 1.0f));
    ch3_any |= v == 1.0f;
    CHECK(pack.input[4 * plane + i] == 0.0f);
  }
  CHECK(ch3_any);
}

TEST_CASE("tensor pack serialization round trips exactly") {
  GeomConfig cfg;
  ImageRaster img = noise_image(40, 32, 5);
  Pose input, gt;
  input.joints.resize(3);
  gt.joints.resize(3);
  input.joints[1] = {20, 16, true, {}};
  gt.joints[1] = {21, 14, true, {}};
  TensorPack pack = build_tensor_pack(img, input, gt, 3, cfg);
  std::string bytes = dump_tensor_pack(pack);
  CHECK(bytes.compare(0, 4, "PRTP") == 0);
  TensorPack back = load_tensor_pack(bytes, 3);
  CHECK(back.channels == pack.channels);
  CHECK(back.grid_w == pack.grid_w);
  CHECK(back.input == pack.input);
  CHECK(back.heatmap_target == pack.heatmap_target);
  CHECK(back.offset_target == pack.offset_target);
  CHECK(back.offset_mask == pack.offset_mask);
  CHECK(dump_tensor_pack(back) == bytes);

  CHECK_THROWS(load_tensor_pack(bytes.substr(0, bytes.size() - 8), 3));
  CHECK_THROWS(load_tensor_pack(bytes, 4));
}

TEST_CASE("augment applies one shared transform to image and both poses") {
  JointSchema s = schema4();
  ImageRaster img = noise_image(60, 40, 9);
  Pose gt, input;
  gt.joints.resize(4);
  input.joints.resize(4);
  gt.joints[0] = {10, 10, true, {}};
  gt.joints[2] = {30, 25, true, {}};
  input.joints[0] = {12, 11, true, {}};
  input.joints[2] = {28, 26, true, {}};

  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    AugmentResult r = augment(img, gt, input, s, RngKey(seed));
    CHECK(r.scale >= 0.7);
    CHECK(r.scale <= 1.3);
    const double sx = static_cast<double>(r.image.width) / img.width;
    const double sy = static_cast<double>(r.image.height) / img.height;
    Pose eg = gt, ei = input;
    for (auto* pp : {&eg, &ei})
      for (auto& j : pp->joints) {
        j.x *= sx;
        j.y *= sy;
      }
    if (r.flipped) {
      eg = flip_pose(eg, s, r.image.width);
      ei = flip_pose(ei, s, r.image.width);
    }
    for (int j = 0; j < 4; ++j) {
      CHECK(r.gt.joints[j].present == eg.joints[j].present);
      if (eg.joints[j].present) {
        CHECK(r.gt.joints[j].x == doctest::Approx(eg.joints[j].x));
        CHECK(r.input.joints[j].x == doctest::Approx(ei.joints[j].x));
        CHECK(r.input.joints[j].y == doctest::Approx(ei.joints[j].y));
      }
    }
  }
}

TEST_CASE("augment scale draws follow U[0.7,1.3] (KS) and flips are fair") {
  JointSchema s = schema4();
  ImageRaster img = ImageRaster::filled(16, 16, 50, 50, 50);
  Pose gt;
  gt.joints.resize(4);
  gt.joints[0] = {8, 8, true, {}};
  std::vector<double> scales;
  int flips = 0;
  const int trials = 4000;
  for (int i = 0; i < trials; ++i) {
    AugmentResult r = augment(img, gt, gt, s, RngKey(1000).derive(static_cast<std::uint64_t>(i)));
    scales.push_back(r.scale);
    flips += r.flipped;
  }
  std::sort(scales.begin(), scales.end());
  double d = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double cdf = (scales[i] - 0.7) / 0.6;
    d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / trials));
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / trials));
  }
  // Kolmogorov-Smirnov critical value at alpha = 0.01.
  CHECK(d < 1.628 / std::sqrt(static_cast<double>(trials)));
  CHECK(flips > trials * 0.45);
  CHECK(flips < trials * 0.55);
}
