#include "pr/core.hpp"

#include <algorithm>
#include <set>

namespace pr {

void JointSchema::validate() const {
  const int n = count();
  if (n <= 0) throw PoseError("schema has no joints");
  std::set<std::string> seen(names.begin(), names.end());
  if (static_cast<int>(seen.size()) != n)
    throw PoseError("schema joint names are not unique");
  std::set<int> paired;
  for (const auto& [a, b] : flip_pairs) {
    if (a < 0 || a >= n || b < 0 || b >= n || a == b)
      throw PoseError("flip pair index out of range");
    if (!paired.insert(a).second || !paired.insert(b).second)
      throw PoseError("joint appears in two flip pairs");
  }
  // (-1, -1) marks a schema without a head segment (e.g. COCO-style).
  if (head_pair == std::pair<int, int>{-1, -1}) return;
  if (head_pair.first < 0 || head_pair.first >= n || head_pair.second < 0 ||
      head_pair.second >= n || head_pair.first == head_pair.second)
    throw PoseError("head pair index out of range");
}

int JointSchema::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

int Pose::present_count() const {
  int c = 0;
  for (const auto& j : joints)
    if (j.present) ++c;
  return c;
}

ImageRaster ImageRaster::filled(int w, int h, std::uint8_t r, std::uint8_t g,
                                std::uint8_t b) {
  ImageRaster img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(3) * w * h);
  for (size_t i = 0; i + 2 < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

Rect pose_bbox(const Pose& pose) {
  bool any = false;
  Rect r;
  for (const auto& j : pose.joints) {
    if (!j.present) continue;
    if (!any) {
      r = {j.x, j.y, j.x, j.y};
      any = true;
    } else {
      r.x0 = std::min(r.x0, j.x);
      r.y0 = std::min(r.y0, j.y);
      r.x1 = std::max(r.x1, j.x);
      r.y1 = std::max(r.y1, j.y);
    }
  }
  if (!any) throw NoJointsPresent();
  return r;
}

Pose flip_pose(const Pose& pose, const JointSchema& schema,
               double image_width) {
  Pose out = pose;
  for (auto& j : out.joints)
    if (j.present) j.x = image_width - 1.0 - j.x;
  for (const auto& [a, b] : schema.flip_pairs)
    std::swap(out.joints[a], out.joints[b]);
  if (out.head_box) {
    Rect hb = *out.head_box;
    out.head_box = Rect{image_width - 1.0 - hb.x1, hb.y0,
                        image_width - 1.0 - hb.x0, hb.y1};
  }
  return out;
}

}  // namespace pr
