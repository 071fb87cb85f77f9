#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pr {

struct PoseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoJointsPresent : PoseError {
  NoJointsPresent() : PoseError("pose has no present joints") {}
};

struct HeightUndefined : PoseError {
  HeightUndefined() : PoseError("person height cannot be estimated") {}
};

// Named joint set with left/right flip pairs and the head segment.
struct JointSchema {
  std::vector<std::string> names;
  std::vector<std::pair<int, int>> flip_pairs;
  std::pair<int, int> head_pair{-1, -1};  // (top_head, bottom_head)

  int count() const { return static_cast<int>(names.size()); }
  void validate() const;
  int index_of(const std::string& name) const;  // -1 if unknown
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  bool present = false;
  std::optional<double> score;
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

struct Pose {
  std::vector<Keypoint> joints;
  std::optional<Rect> head_box;
  std::optional<double> height_px;
  std::optional<std::int64_t> track_id;

  int present_count() const;
};

struct ImageRaster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  static ImageRaster filled(int w, int h, std::uint8_t r, std::uint8_t g,
                            std::uint8_t b);
  std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (y * width + x); }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + 3 * (y * width + x);
  }
};

struct FrameAnnotation {
  std::string image;  // path or identifier
  std::optional<std::string> sequence_id;
  std::int64_t frame_index = 0;
  std::vector<Pose> people;
};

// Tight axis-aligned box over present joints. Throws NoJointsPresent.
Rect pose_bbox(const Pose& pose);

// Mirror around the vertical axis of an image of the given width and exchange
// left/right joints along the schema's flip pairs.
Pose flip_pose(const Pose& pose, const JointSchema& schema, double image_width);

}  // namespace pr
