#include "pr/toyset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "pr/image.hpp"
#include "pr/rng.hpp"

namespace pr {

void ToyConfig::validate() const {
  if (frames <= 0) throw PoseError("toy config: frames must be positive");
  if (frames_per_sequence <= 0 || min_people < 1 ||
      max_people < min_people || width < 32 || height < 32)
    throw PoseError("toy config: invalid field");
  if (!(min_height_px > 0) || !(max_height_px >= min_height_px))
    throw PoseError("toy config: invalid height range");
}

JointSchema toy_schema() {
  JointSchema s;
  s.names = {"nose",        "head_bottom",    "head_top",
             "left_shoulder", "right_shoulder", "left_elbow",
             "right_elbow",   "left_wrist",     "right_wrist",
             "left_hip",      "right_hip",      "left_knee",
             "right_knee",    "left_ankle",     "right_ankle"};
  s.flip_pairs = {{3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}};
  s.head_pair = {2, 1};  // (top, bottom)
  return s;
}

namespace {

enum ToyJoint {
  kNose = 0,
  kHeadBottom,
  kHeadTop,
  kLSho,
  kRSho,
  kLElb,
  kRElb,
  kLWri,
  kRWri,
  kLHip,
  kRHip,
  kLKnee,
  kRKnee,
  kLAnk,
  kRAnk
};

struct Rgb {
  std::uint8_t r, g, b;
};

// One saturated, well-separated color per body segment so left and right
// limbs are visually distinguishable.
constexpr Rgb kTorso{200, 200, 200};
constexpr Rgb kHead{240, 220, 60};
constexpr Rgb kNoseDot{255, 30, 200};
constexpr Rgb kLUpperArm{220, 40, 40};
constexpr Rgb kLForearm{250, 120, 90};
constexpr Rgb kRUpperArm{40, 90, 230};
constexpr Rgb kRForearm{110, 190, 250};
constexpr Rgb kLThigh{30, 170, 60};
constexpr Rgb kLShin{150, 230, 120};
constexpr Rgb kRThigh{160, 40, 200};
constexpr Rgb kRShin{210, 140, 250};
constexpr Rgb kHipBar{250, 160, 20};
constexpr Rgb kShoulderBar{20, 190, 190};

struct FigureState {
  double cx, cy;         // pelvis center
  double height;
  double lean;           // torso lean, radians
  double thigh[2], shin[2];   // absolute angles from vertical-down
  double uarm[2], farm[2];    // upper arm from vertical-down, forearm delta
  double nose_side;           // lateral nose offset fraction
  double vx, vy;              // per-frame motion
};

FigureState sample_figure(RngStream& s, const ToyConfig& cfg) {
  FigureState f;
  f.height = s.uniform(cfg.min_height_px, cfg.max_height_px);
  const double margin = 0.55 * f.height;
  f.cx = s.uniform(margin, cfg.width - margin);
  f.cy = s.uniform(0.2 * f.height, cfg.height - 0.55 * f.height);
  f.lean = s.uniform(-0.15, 0.15);
  for (int i = 0; i < 2; ++i) {
    f.thigh[i] = s.uniform(-0.5, 0.5);
    f.shin[i] = f.thigh[i] + s.uniform(-0.4, 0.4);
    f.uarm[i] = s.uniform(-1.3, 1.3);
    f.farm[i] = f.uarm[i] + s.uniform(-0.8, 0.8);
  }
  f.nose_side = s.uniform(-0.35, 0.35);
  f.vx = s.uniform(-2.5, 2.5);
  f.vy = s.uniform(-1.5, 1.5);
  return f;
}

void advance_figure(FigureState& f, RngStream& s, const ToyConfig& cfg) {
  f.cx = std::clamp(f.cx + f.vx + s.uniform(-0.5, 0.5), 0.4 * f.height,
                    cfg.width - 0.4 * f.height);
  f.cy = std::clamp(f.cy + f.vy + s.uniform(-0.5, 0.5), 0.15 * f.height,
                    cfg.height - 0.55 * f.height);
  f.lean += s.uniform(-0.03, 0.03);
  for (int i = 0; i < 2; ++i) {
    f.thigh[i] = std::clamp(f.thigh[i] + s.uniform(-0.12, 0.12), -0.6, 0.6);
    f.shin[i] = std::clamp(f.shin[i] + s.uniform(-0.12, 0.12),
                           f.thigh[i] - 0.5, f.thigh[i] + 0.5);
    f.uarm[i] = std::clamp(f.uarm[i] + s.uniform(-0.15, 0.15), -1.4, 1.4);
    f.farm[i] = std::clamp(f.farm[i] + s.uniform(-0.15, 0.15),
                           f.uarm[i] - 0.9, f.uarm[i] + 0.9);
  }
}

Pose figure_pose(const FigureState& f) {
  const double h = f.height;
  Pose pose;
  pose.joints.resize(15);
  auto set = [&](int j, double x, double y) {
    pose.joints[j].present = true;
    pose.joints[j].x = x;
    pose.joints[j].y = y;
  };
  const double hipw = 0.09 * h, show = 0.12 * h;
  const double pelvis_x = f.cx, pelvis_y = f.cy;
  const double neck_x = pelvis_x + std::sin(f.lean) * 0.32 * h;
  const double neck_y = pelvis_y - std::cos(f.lean) * 0.32 * h;
  set(kLHip, pelvis_x - hipw, pelvis_y);
  set(kRHip, pelvis_x + hipw, pelvis_y);
  set(kLSho, neck_x - show, neck_y);
  set(kRSho, neck_x + show, neck_y);
  const double hb_x = neck_x + std::sin(f.lean) * 0.045 * h;
  const double hb_y = neck_y - std::cos(f.lean) * 0.045 * h;
  const double ht_x = hb_x + std::sin(f.lean) * 0.16 * h;
  const double ht_y = hb_y - std::cos(f.lean) * 0.16 * h;
  set(kHeadBottom, hb_x, hb_y);
  set(kHeadTop, ht_x, ht_y);
  set(kNose, hb_x + 0.55 * (ht_x - hb_x) + f.nose_side * 0.18 * h,
      hb_y + 0.55 * (ht_y - hb_y));
  auto limb = [](double x, double y, double len, double angle, double& ox,
                 double& oy) {
    ox = x + std::sin(angle) * len;
    oy = y + std::cos(angle) * len;  // angle 0 points straight down
  };
  double x1, y1, x2, y2;
  limb(pelvis_x - hipw, pelvis_y, 0.26 * h, f.thigh[0], x1, y1);
  set(kLKnee, x1, y1);
  limb(x1, y1, 0.24 * h, f.shin[0], x2, y2);
  set(kLAnk, x2, y2);
  limb(pelvis_x + hipw, pelvis_y, 0.26 * h, f.thigh[1], x1, y1);
  set(kRKnee, x1, y1);
  limb(x1, y1, 0.24 * h, f.shin[1], x2, y2);
  set(kRAnk, x2, y2);
  limb(neck_x - show, neck_y, 0.18 * h, f.uarm[0], x1, y1);
  set(kLElb, x1, y1);
  limb(x1, y1, 0.17 * h, f.farm[0], x2, y2);
  set(kLWri, x2, y2);
  limb(neck_x + show, neck_y, 0.18 * h, f.uarm[1], x1, y1);
  set(kRElb, x1, y1);
  limb(x1, y1, 0.17 * h, f.farm[1], x2, y2);
  set(kRWri, x2, y2);

  pose.height_px = h;
  const double head_r = 0.085 * h;
  pose.head_box = Rect{std::min(hb_x, ht_x) - head_r, ht_y - head_r,
                       std::max(hb_x, ht_x) + head_r, hb_y + head_r};
  return pose;
}

void fill_disk(ImageRaster& img, double cx, double cy, double radius, Rgb c) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + radius)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r2) {
        std::uint8_t* p = img.at(x, y);
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
      }
    }
}

void draw_segment(ImageRaster& img, const Keypoint& a, const Keypoint& b,
                  double thickness, Rgb c) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const int steps = std::max(1, static_cast<int>(std::ceil(len)));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    fill_disk(img, a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), thickness, c);
  }
}

void render_figure(ImageRaster& img, const Pose& p) {
  const double h = *p.height_px;
  const double t = std::max(1.2, 0.03 * h);
  const auto& j = p.joints;
  Keypoint pelvis{0.5 * (j[kLHip].x + j[kRHip].x),
                  0.5 * (j[kLHip].y + j[kRHip].y), true, {}};
  Keypoint neck{0.5 * (j[kLSho].x + j[kRSho].x),
                0.5 * (j[kLSho].y + j[kRSho].y), true, {}};
  draw_segment(img, pelvis, neck, t * 1.3, kTorso);
  draw_segment(img, j[kLHip], j[kRHip], t, kHipBar);
  draw_segment(img, j[kLSho], j[kRSho], t, kShoulderBar);
  draw_segment(img, j[kLHip], j[kLKnee], t, kLThigh);
  draw_segment(img, j[kLKnee], j[kLAnk], t, kLShin);
  draw_segment(img, j[kRHip], j[kRKnee], t, kRThigh);
  draw_segment(img, j[kRKnee], j[kRAnk], t, kRShin);
  draw_segment(img, j[kLSho], j[kLElb], t, kLUpperArm);
  draw_segment(img, j[kLElb], j[kLWri], t, kLForearm);
  draw_segment(img, j[kRSho], j[kRElb], t, kRUpperArm);
  draw_segment(img, j[kRElb], j[kRWri], t, kRForearm);
  const double head_r = 0.085 * h;
  fill_disk(img, 0.5 * (j[kHeadBottom].x + j[kHeadTop].x),
            0.5 * (j[kHeadBottom].y + j[kHeadTop].y), head_r, kHead);
  fill_disk(img, j[kNose].x, j[kNose].y, std::max(1.5, 0.035 * h), kNoseDot);
}

ImageRaster render_background(const ToyConfig& cfg, RngStream& s) {
  ImageRaster img = ImageRaster::filled(cfg.width, cfg.height, 0, 0, 0);
  const double base_r = s.uniform(30, 80);
  const double base_g = s.uniform(30, 80);
  const double base_b = s.uniform(30, 80);
  const double gx = s.uniform(-25, 25), gy = s.uniform(-25, 25);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      std::uint8_t* p = img.at(x, y);
      const double fx = static_cast<double>(x) / cfg.width;
      const double fy = static_cast<double>(y) / cfg.height;
      const double noise = s.uniform(-12, 12);
      p[0] = static_cast<std::uint8_t>(
          std::clamp(base_r + gx * fx + noise, 0.0, 255.0));
      p[1] = static_cast<std::uint8_t>(
          std::clamp(base_g + gy * fy + noise, 0.0, 255.0));
      p[2] = static_cast<std::uint8_t>(
          std::clamp(base_b + gx * fy + noise, 0.0, 255.0));
    }
  return img;
}

}  // namespace

ToySet generate_toy_dataset(const ToyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ToySet set;
  set.dataset.schema = toy_schema();

  const RngKey root(seed);
  int frame_no = 0;
  int seq_no = 0;
  while (frame_no < cfg.frames) {
    const int seq_frames =
        std::min(cfg.frames_per_sequence, cfg.frames - frame_no);
    RngStream seq_rng(root.derive("seq").derive(seq_no));
    const int people =
        cfg.min_people +
        static_cast<int>(seq_rng.below(cfg.max_people - cfg.min_people + 1));

    std::vector<FigureState> figures;
    for (int pi = 0; pi < people; ++pi) {
      FigureState f = sample_figure(seq_rng, cfg);
      if (pi > 0) {
        // Keep neighbors close so cross-person steal candidates exist.
        const double angle = seq_rng.uniform(0.0, 2.0 * std::numbers::pi);
        f.cx = std::clamp(figures[0].cx + std::cos(angle) * cfg.proximity,
                          0.35 * f.height, cfg.width - 0.35 * f.height);
        f.cy = std::clamp(figures[0].cy + std::sin(angle) * cfg.proximity * 0.5,
                          0.15 * f.height, cfg.height - 0.55 * f.height);
      }
      figures.push_back(f);
    }

    for (int k = 0; k < seq_frames; ++k) {
      RngStream frame_rng(root.derive("frame").derive(frame_no));
      ImageRaster img = render_background(cfg, frame_rng);
      DatasetFrame frame;
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s_%05d.%s", cfg.image_prefix.c_str(),
                    frame_no, cfg.image_format.c_str());
      frame.image = buf;
      frame.sequence_id = "seq" + std::to_string(seq_no);
      frame.frame_index = k;
      for (int pi = 0; pi < people; ++pi) {
        if (k > 0) advance_figure(figures[pi], seq_rng, cfg);
        AnnotatedPose ap;
        ap.pose = figure_pose(figures[pi]);
        ap.pose.track_id = seq_no * 16 + pi;
        render_figure(img, ap.pose);
        frame.people.push_back(std::move(ap));
      }
      set.images.emplace_back(frame.image, std::move(img));
      set.dataset.frames.push_back(std::move(frame));
      ++frame_no;
    }
    ++seq_no;
  }
  set.dataset.validate();
  return set;
}

void write_toy_dataset(const ToySet& set, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (const auto& [path, img] : set.images) {
    const fs::path full = fs::path(out_dir) / path;
    fs::create_directories(full.parent_path());
    save_image(img, full.string());
  }
  write_annotations_file(set.dataset,
                         (fs::path(out_dir) / "annotations.json").string());
}

}  // namespace pr
